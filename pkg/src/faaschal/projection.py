"""Endpoint projection: one local code unit per stateful role and stateless function.

Services are passive and get no unit.  A chain is cut at every one-way
trigger; the suffix becomes the body of the triggered function, which
receives the payload as its (anonymous, ``_``) ``main`` parameter.  Values
threaded through a chain without being bound are linked with ``Piped``
placeholders, which ``emit_unit`` folds back into nested calls.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

from . import syntax as S
from .checker import check
from .printer import quote


class ProjectionError(Exception):
    def __init__(self, message: str, diagnostics=()) -> None:
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class Mode(str, enum.Enum):
    RR = "RR"
    ONE_WAY = "OneWay"


# -- local expressions -------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    value: str | int | float


@dataclass(frozen=True)
class Field:
    base: LExpr
    label: str


@dataclass(frozen=True)
class Apply:
    alias: str
    args: tuple[LExpr, ...]


@dataclass(frozen=True)
class Piped:
    """The unbound value produced by the immediately preceding statement."""


LExpr = Union[Var, Lit, Field, Apply, Piped]


def localize(expr: S.Expr) -> LExpr:
    """Strip location annotations from a choreography expression."""
    if isinstance(expr, S.VarRef):
        return Var(expr.name)
    if isinstance(expr, S.Literal):
        return Lit(expr.value)
    if isinstance(expr, S.FieldAccess):
        return Field(localize(expr.base), expr.label)
    if isinstance(expr, S.Call):
        return Apply(expr.alias, tuple(localize(a) for a in expr.args))
    raise TypeError(f"cannot localize {expr!r}")


# -- local statements --------------------------------------------------------


@dataclass(frozen=True)
class ServiceCall:
    service: str
    op: str
    arg: LExpr
    bind: str | None = None
    mode: Mode = Mode.RR


@dataclass(frozen=True)
class TriggerFn:
    target: str
    endpoint: str
    payload: LExpr
    mode: Mode = Mode.ONE_WAY


@dataclass(frozen=True)
class LocalCall:
    alias: str
    arg: LExpr
    bind: str | None = None


@dataclass(frozen=True)
class Assign:
    name: str
    value: LExpr


@dataclass(frozen=True)
class ForEach:
    var: str
    iterable: LExpr
    body: tuple[LocalStmt, ...]


@dataclass(frozen=True)
class If:
    guard: LExpr
    then: tuple[LocalStmt, ...]
    orelse: tuple[LocalStmt, ...] | None = None


@dataclass(frozen=True)
class Respond:
    value: LExpr


@dataclass(frozen=True)
class Return:
    value: LExpr


@dataclass(frozen=True)
class InvokeGateway:
    target: str
    medium: str
    payload: LExpr


@dataclass(frozen=True)
class Send:
    target: str
    medium: str
    payload: LExpr


@dataclass(frozen=True)
class Receive:
    medium: str
    bind: str


LocalStmt = Union[
    ServiceCall, TriggerFn, LocalCall, Assign, ForEach, If, Respond, Return, InvokeGateway, Send, Receive
]

VALUE_STMTS = (ServiceCall, TriggerFn, LocalCall, InvokeGateway, Send)


@dataclass(frozen=True)
class LocalUnit:
    role: str
    kind: S.RoleKind
    trigger: tuple[str, str | None] | None
    params: tuple[str, ...]
    body: tuple[LocalStmt, ...]
    imports: tuple[S.Import, ...] = ()


# -- projection --------------------------------------------------------------


@dataclass
class _Activation:
    medium: str
    params: list[str]
    body: list = field(default_factory=list)
    one_way: bool = True


def _freeze(body) -> tuple:
    return tuple(body)


class _Projector:
    def __init__(self, choreo: S.Choreography) -> None:
        self.choreo = choreo
        self.kinds = {r.name: r.kind for r in choreo.roles}
        self.stateful_bodies: dict[str, list] = {r: [] for r in choreo.stateful}
        self.activations: dict[str, list[_Activation]] = {f: [] for f in choreo.stateless}

    def endpoint(self, fn: str, medium: str) -> str:
        m = self.choreo.role(fn).medium(medium)
        return m.endpoint if m is not None and m.endpoint is not None else medium

    def activate(self, fn: str, medium: str, param: str, one_way: bool) -> _Activation:
        act = _Activation(medium, [param], one_way=one_way)
        self.activations[fn].append(act)
        return act

    def block(self, body, owners: dict[str, list]) -> None:
        for stmt in body:
            self.stmt(stmt, owners)

    def stmt(self, stmt, owners: dict[str, list]) -> None:
        if isinstance(stmt, S.Chain):
            self.chain(stmt, owners)
        elif isinstance(stmt, S.RRTrigger):
            role = S.expr_role(stmt.payload)
            payload = localize(stmt.payload)
            if self.kinds[role] is S.RoleKind.STATEFUL:
                owners[role].append(InvokeGateway(stmt.target, stmt.medium, payload))
            else:
                owners[role].append(
                    TriggerFn(stmt.target, self.endpoint(stmt.target, stmt.medium), payload, Mode.RR)
                )
            param = stmt.bound.name if stmt.bound is not None else "_"
            act = self.activate(stmt.target, stmt.medium, param, one_way=False)
            self.block(stmt.body, {stmt.target: act.body})
            if stmt.result is not None:
                act.body.append(Respond(localize(stmt.result)))
        elif isinstance(stmt, S.ForEach):
            role = S.expr_role(stmt.iterable)
            inner: list = []
            self.block(stmt.body, {role: inner})
            owners[role].append(ForEach(stmt.var, localize(stmt.iterable), _freeze(inner)))
        elif isinstance(stmt, S.If):
            role = S.expr_role(stmt.guard)
            then: list = []
            self.block(stmt.then, {role: then})
            orelse = None
            if stmt.orelse is not None:
                orelse_list: list = []
                self.block(stmt.orelse, {role: orelse_list})
                orelse = _freeze(orelse_list)
            owners[role].append(If(localize(stmt.guard), _freeze(then), orelse))

    def chain(self, chain: S.Chain, owners: dict[str, list]) -> None:
        head = chain.head
        here = S.expr_role(head)
        out = owners[here]
        pending = None
        value: LExpr | None = None
        if isinstance(head, S.ServiceRR):
            pending = ServiceCall(head.service, head.operation, localize(head.arg), None, Mode.RR)
        else:
            value = localize(head)
        act: _Activation | None = None
        fresh = False  # directly after a trigger, before any other step

        def take():
            nonlocal pending
            if pending is not None:
                out.append(pending)
                pending = None
                return Piped()
            return value

        for step in chain.steps:
            if isinstance(step, S.BindVar):
                if pending is not None:
                    out.append(replace(pending, bind=step.name))
                    pending = None
                elif fresh and act is not None:
                    act.params[0] = step.name
                else:
                    out.append(Assign(step.name, value))
                value = Var(step.name)
            elif isinstance(step, S.LocalCall):
                arg = take()
                pending = LocalCall(step.alias, arg)
            elif isinstance(step, S.OneWayService):
                arg = take()
                pending = ServiceCall(step.service, step.operation, arg, None, Mode.ONE_WAY)
            elif isinstance(step, S.OneWayTrigger):
                payload = take()
                sender, target = self.kinds[here], self.kinds[step.target]
                if target is S.RoleKind.STATEFUL:
                    out.append(Send(step.target, step.medium, payload))
                    out = self.stateful_bodies[step.target]
                    out.append(Receive(step.medium, "_"))
                    act = None
                else:
                    if sender is S.RoleKind.STATEFUL:
                        out.append(InvokeGateway(step.target, step.medium, payload))
                    else:
                        out.append(
                            TriggerFn(step.target, self.endpoint(step.target, step.medium), payload)
                        )
                    act = self.activate(step.target, step.medium, "_", one_way=True)
                    out = act.body
                here = step.target
                value = Var("_")
            fresh = isinstance(step, S.OneWayTrigger)
        if pending is not None:
            out.append(pending)

    def units(self) -> dict[str, LocalUnit]:
        self.block(self.choreo.body, self.stateful_bodies)
        units: dict[str, LocalUnit] = {}
        for name in self.choreo.stateful:
            params = tuple(p.name for p in self.choreo.params if p.role == name)
            units[name] = LocalUnit(
                name, S.RoleKind.STATEFUL, None, params, _freeze(self.stateful_bodies[name])
            )
        for name in self.choreo.stateless:
            decl = self.choreo.role(name)
            imports = tuple(i for i in self.choreo.imports if i.target == name)
            acts = self.activations[name]
            if not acts:
                first = decl.media[0]
                units[name] = LocalUnit(
                    name, S.RoleKind.STATELESS, (first.name, first.endpoint), ("_",), (), imports
                )
                continue
            shapes = {(a.medium, tuple(a.params), _freeze(a.body), a.one_way) for a in acts}
            if len(shapes) > 1:
                raise ProjectionError(
                    f"function {name!r} is triggered at {len(acts)} sites with different behaviour; "
                    "one unit cannot implement them all"
                )
            act = acts[0]
            body = list(act.body)
            if act.one_way and body and isinstance(body[-1], VALUE_STMTS) and getattr(body[-1], "bind", None) is None:
                body.append(Return(Piped()))
            medium = decl.medium(act.medium)
            units[name] = LocalUnit(
                name,
                S.RoleKind.STATELESS,
                (act.medium, medium.endpoint if medium else None),
                tuple(act.params),
                _freeze(body),
                imports,
            )
        return units


def project(choreo: S.Choreography) -> dict[str, LocalUnit]:
    """Project a well-formed choreography to ``{role: LocalUnit}``.

    Units are ordered stateful roles first, then stateless functions, each in
    declaration order.  Raises ``ProjectionError`` if ``check`` reports any
    diagnostic.
    """
    diags = check(choreo)
    if diags:
        raise ProjectionError(f"choreography has {len(diags)} diagnostic(s)", diags)
    return _Projector(choreo).units()


# -- pseudocode emission -----------------------------------------------------

INDENT = "  "


def _call(head: str, args: list[str]) -> str:
    return f"{head}( {', '.join(args)} )" if args else f"{head}()"


def format_lexpr(e: LExpr, carry: str | None = None) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Lit):
        return quote(e.value) if isinstance(e.value, str) else str(e.value)
    if isinstance(e, Field):
        return f"{format_lexpr(e.base, carry)}.{e.label}"
    if isinstance(e, Apply):
        return _call(e.alias, [format_lexpr(a, carry) for a in e.args])
    if isinstance(e, Piped):
        if carry is None:
            raise ValueError("piped value without a producing statement")
        return carry
    raise TypeError(f"not a local expression: {e!r}")


def _value_text(stmt, carry: str | None) -> str:
    if isinstance(stmt, ServiceCall):
        return _call(f"{stmt.service}.{stmt.op}", [format_lexpr(stmt.arg, carry)])
    if isinstance(stmt, TriggerFn):
        return _call("triggerFn", [quote(stmt.target), quote(stmt.endpoint), format_lexpr(stmt.payload, carry)])
    if isinstance(stmt, LocalCall):
        return _call(stmt.alias, [format_lexpr(stmt.arg, carry)])
    if isinstance(stmt, InvokeGateway):
        return _call(f"{stmt.medium}.invoke", [quote(stmt.target), format_lexpr(stmt.payload, carry)])
    if isinstance(stmt, Send):
        return _call(f"{stmt.medium}.send", [quote(stmt.target), format_lexpr(stmt.payload, carry)])
    raise TypeError(stmt)


def _consumes_pipe(stmt) -> bool:
    for attr in ("arg", "payload", "value"):
        if isinstance(getattr(stmt, attr, None), Piped):
            return True
    return False


def _emit_body(body, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    carry = None
    for i, stmt in enumerate(body):
        nxt = body[i + 1] if i + 1 < len(body) else None
        if isinstance(stmt, VALUE_STMTS):
            text = _value_text(stmt, carry)
            carry = None
            bind = getattr(stmt, "bind", None)
            if bind is None and nxt is not None and _consumes_pipe(nxt):
                carry = text
                continue
            out.append(f"{pad}{bind} = {text}" if bind else pad + text)
        elif isinstance(stmt, Assign):
            out.append(f"{pad}{stmt.name} = {format_lexpr(stmt.value, carry)}")
            carry = None
        elif isinstance(stmt, Return):
            out.append(f"{pad}return {format_lexpr(stmt.value, carry)}")
            carry = None
        elif isinstance(stmt, Respond):
            out.append(f"{pad}return {{ code: 200, body: {format_lexpr(stmt.value, carry)} }}")
            carry = None
        elif isinstance(stmt, Receive):
            out.append(f"{pad}{stmt.bind} = {stmt.medium}.receive()")
        elif isinstance(stmt, ForEach):
            out.append(f"{pad}for {stmt.var} in {format_lexpr(stmt.iterable)} do")
            _emit_body(stmt.body, depth + 1, out)
            out.append(f"{pad}end")
        elif isinstance(stmt, If):
            out.append(f"{pad}if {format_lexpr(stmt.guard)} then")
            _emit_body(stmt.then, depth + 1, out)
            if stmt.orelse is not None:
                out.append(f"{pad}else")
                _emit_body(stmt.orelse, depth + 1, out)
            out.append(f"{pad}end")
        else:
            raise TypeError(f"not a local statement: {stmt!r}")


def emit_unit(unit: LocalUnit) -> str:
    """Render a unit as pseudocode: header comment, imports, ``def main``."""
    out: list[str] = []
    if unit.kind is S.RoleKind.STATEFUL:
        out.append(f"# {unit.role} code")
    else:
        medium = unit.trigger[0] if unit.trigger else "?"
        out.append(f"# deploy as {unit.role}, trigger {medium.upper()}")
        if unit.imports:
            out.extend(f"import {i.module}::{i.operation} as {i.alias}" for i in unit.imports)
            out.append("")
    out.append(_call("def main", list(unit.params)))
    _emit_body(unit.body, 1, out)
    out.append("end")
    return "\n".join(out) + "\n"


def write_units(units: dict[str, LocalUnit], directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for role, unit in units.items():
        path = directory / f"{role}.pseudo"
        path.write_text(emit_unit(unit), encoding="utf-8")
        written.append(path)
    return written
