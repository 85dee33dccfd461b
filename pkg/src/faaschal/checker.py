"""Well-formedness checking for parsed choreographies.

Rules enforced:

* declared names: every role, service, medium and operation referenced
  is declared in the preamble;
* data locality: all operands of an expression live at one role, and
  statements only run at a role that is active at that point (a stateful
  participant in ``main``, or the function a trigger block activated);
* import scope: an imported alias is only usable at its import target;
* stateless functions are never re-entered by a stateful participant once
  triggered (``StatefulInBody``);
* trigger media must be among the target function's media;
* knowledge of choice: a branch or loop guarded at ``r`` may involve
  stateless functions and services freely, but no stateful role other
  than ``r``;
* the ``with`` response of a trigger block lives at the triggered function.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    BindVar,
    Call,
    Chain,
    Choreography,
    Code,
    Diagnostic,
    Expr,
    FieldAccess,
    ForEach,
    If,
    LocalCall,
    OneWayService,
    OneWayTrigger,
    RoleKind,
    RRTrigger,
    ServiceRR,
    Span,
    leaves,
)


def chain_locations(chain: Chain, start: str) -> list[tuple[object, str]]:
    """Pair every step of ``chain`` with the role it executes at.

    The location only moves at one-way triggers, where it becomes the
    triggered function.
    """
    here = start
    out = []
    for step in chain.steps:
        if isinstance(step, OneWayTrigger):
            here = step.target
        out.append((step, here))
    return out


@dataclass(frozen=True)
class _Ctx:
    active: str | None  # None: top level of main, any stateful role may act
    guards: tuple[tuple[str, Span], ...] = ()


class _Checker:
    def __init__(self, choreo: Choreography) -> None:
        self.choreo = choreo
        self.diags: dict[tuple[Code, Span], Diagnostic] = {}
        self.kinds: dict[str, RoleKind] = {}
        self.decls = {}
        self.imports: set[tuple[str, str]] = set()
        self.alias_targets: dict[str, list[str]] = {}
        self.all_media: set[str] = set()

    def report(self, code: Code, span: Span, message: str) -> None:
        self.diags.setdefault((code, span), Diagnostic(span, code, message))

    # -- preamble ----------------------------------------------------------

    def preamble(self) -> None:
        for decl in self.choreo.roles:
            if decl.name in self.kinds:
                self.report(Code.DUPLICATE_NAME, decl.span, f"role {decl.name!r} is declared more than once")
                continue
            self.kinds[decl.name] = decl.kind
            self.decls[decl.name] = decl
            seen = set()
            for medium in decl.media:
                if medium.name in seen:
                    self.report(
                        Code.DUPLICATE_NAME, medium.span,
                        f"medium {medium.name!r} listed twice for {decl.name!r}",
                    )
                seen.add(medium.name)
                self.all_media.add(medium.name)
            if len(set(decl.operations)) != len(decl.operations):
                self.report(
                    Code.DUPLICATE_NAME, decl.span, f"service {decl.name!r} lists an operation twice"
                )

        for imp in self.choreo.imports:
            kind = self.kinds.get(imp.target)
            if kind is None:
                self.report(Code.UNDECLARED_ROLE, imp.span, f"import target {imp.target!r} is not declared")
            elif kind is not RoleKind.STATELESS:
                self.report(
                    Code.IMPORT_SCOPE, imp.span,
                    f"imports must target a stateless function, {imp.target!r} is {kind.value.lower()}",
                )
            key = (imp.alias, imp.target)
            if key in self.imports:
                self.report(
                    Code.DUPLICATE_NAME, imp.span, f"alias {imp.alias!r} imported twice at {imp.target!r}"
                )
            self.imports.add(key)
            self.alias_targets.setdefault(imp.alias, []).append(imp.target)

    # -- helpers -----------------------------------------------------------

    def role_kind(self, role: str, span: Span) -> RoleKind | None:
        kind = self.kinds.get(role)
        if kind is None:
            self.report(Code.UNDECLARED_ROLE, span, f"role {role!r} is not declared")
            return None
        if kind is RoleKind.SERVICE:
            self.report(Code.UNDECLARED_ROLE, span, f"{role!r} is a service, not a located role")
            return None
        return kind

    def occurs(self, role: str, span: Span, ctx: _Ctx) -> None:
        if self.kinds.get(role) is not RoleKind.STATEFUL:
            return
        for owner, _ in ctx.guards:
            if owner != role:
                self.report(
                    Code.KNOWLEDGE_OF_CHOICE, span,
                    f"stateful role {role!r} takes part in a branch or loop decided by {owner!r}",
                )
                return

    def acting(self, role: str, span: Span, ctx: _Ctx) -> None:
        """Check that ``role`` may perform actions in context ``ctx``."""
        kind = self.kinds.get(role)
        if kind is None or kind is RoleKind.SERVICE:
            return
        if ctx.active is None:
            if kind is RoleKind.STATELESS:
                self.report(Code.DATA_LOCALITY, span, f"function {role!r} is not active here (never triggered)")
        elif role != ctx.active:
            if kind is RoleKind.STATEFUL:
                self.report(
                    Code.STATEFUL_IN_BODY, span,
                    f"stateful role {role!r} acts inside the activation of {ctx.active!r}",
                )
            else:
                self.report(
                    Code.DATA_LOCALITY, span,
                    f"function {role!r} is not active here (inside the activation of {ctx.active!r})",
                )

    def local_op(self, alias: str, role: str, span: Span) -> None:
        if role not in self.kinds or (alias, role) in self.imports:
            return
        if alias in self.alias_targets:
            where = ", ".join(sorted(set(self.alias_targets[alias])))
            self.report(Code.IMPORT_SCOPE, span, f"{alias!r} is imported at {where}, not at {role!r}")
        else:
            self.report(Code.UNDECLARED_OPERATION, span, f"operation {alias!r} is not imported")

    def service_op(self, service: str, op: str, span: Span) -> None:
        kind = self.kinds.get(service)
        if kind is not RoleKind.SERVICE:
            what = "not declared" if kind is None else "not a service"
            self.report(Code.UNDECLARED_ROLE, span, f"service {service!r} is {what}")
        elif op not in self.decls[service].operations:
            self.report(Code.UNDECLARED_OPERATION, span, f"service {service!r} has no operation {op!r}")

    def expr(self, e: Expr, ctx: _Ctx) -> str | None:
        """Check an expression; return its location role if it has a valid one."""
        loc = None
        for i, leaf in enumerate(leaves(e)):
            self.occurs(leaf.role, leaf.span, ctx)
            if i == 0:
                loc = leaf.role if self.role_kind(leaf.role, leaf.span) else None
                first = leaf.role
            elif leaf.role != first:
                self.report(
                    Code.DATA_LOCALITY, leaf.span,
                    f"data at {leaf.role!r} used in an expression located at {first!r}",
                )
        if loc is not None:
            self._calls(e, loc)
        return loc

    def _calls(self, e: Expr, loc: str) -> None:
        if isinstance(e, Call):
            self.local_op(e.alias, loc, e.span)
            for arg in e.args:
                self._calls(arg, loc)
        elif isinstance(e, FieldAccess):
            self._calls(e.base, loc)
        elif isinstance(e, ServiceRR):
            self._calls(e.arg, loc)
            self.service_op(e.service, e.operation, e.span)

    def bind(self, name: str, role: str, span: Span, scope: set) -> None:
        if (name, role) in scope:
            self.report(Code.DUPLICATE_NAME, span, f"{name}@{role} is already bound in this scope")
        scope.add((name, role))

    def trigger_target(self, medium: str, target: str, span: Span, sender: str | None, rr: bool) -> None:
        kind = self.kinds.get(target)
        if medium not in self.all_media:
            self.report(Code.UNDECLARED_MEDIUM, span, f"medium {medium!r} is not declared by any function")
        if kind is None:
            self.report(Code.UNDECLARED_ROLE, span, f"trigger target {target!r} is not declared")
        elif kind is RoleKind.SERVICE:
            self.report(Code.UNDECLARED_ROLE, span, f"{target!r} is a service and cannot be triggered")
        elif kind is RoleKind.STATELESS:
            if medium in self.all_media and self.decls[target].medium(medium) is None:
                self.report(
                    Code.UNDECLARED_MEDIUM, span, f"function {target!r} is not reachable via {medium!r}"
                )
        elif rr:
            self.report(
                Code.STATEFUL_IN_BODY, span,
                f"request-response trigger blocks must target a stateless function, not {target!r}",
            )
        elif sender is not None and self.kinds.get(sender) is RoleKind.STATEFUL:
            self.report(
                Code.UNDECLARED_MEDIUM, span,
                f"stateful-to-stateful communication ({sender!r} to {target!r}) has no medium",
            )

    # -- statements --------------------------------------------------------

    def block(self, body, ctx: _Ctx, scope: set) -> None:
        for stmt in body:
            self.stmt(stmt, ctx, scope)

    def stmt(self, stmt, ctx: _Ctx, scope: set) -> None:
        if isinstance(stmt, Chain):
            self.chain(stmt, ctx, scope)
        elif isinstance(stmt, RRTrigger):
            loc = self.expr(stmt.payload, ctx)
            if loc is not None:
                self.acting(loc, stmt.span, ctx)
            self.occurs(stmt.target, stmt.span, ctx)
            self.trigger_target(stmt.medium, stmt.target, stmt.span, loc, rr=True)
            inner = set(scope)
            if stmt.bound is not None:
                b = stmt.bound
                self.occurs(b.role, b.span, ctx)
                if b.role != stmt.target:
                    self.report(
                        Code.DATA_LOCALITY, b.span,
                        f"bound variable must be located at {stmt.target!r}, not {b.role!r}",
                    )
                self.bind(b.name, b.role, b.span, inner)
            body_ctx = _Ctx(stmt.target, ctx.guards)
            self.block(stmt.body, body_ctx, inner)
            if stmt.result is not None:
                res = self.expr(stmt.result, body_ctx)
                if res is not None and res != stmt.target:
                    self.report(
                        Code.DATA_LOCALITY, stmt.result.span,
                        f"the response must be located at {stmt.target!r}, not {res!r}",
                    )
        elif isinstance(stmt, ForEach):
            loc = self.expr(stmt.iterable, ctx)
            if loc is not None:
                self.acting(loc, stmt.span, ctx)
                if stmt.role != loc:
                    self.report(
                        Code.DATA_LOCALITY, stmt.span,
                        f"loop variable at {stmt.role!r} iterates over data at {loc!r}",
                    )
            inner = set(scope)
            self.bind(stmt.var, stmt.role, stmt.span, inner)
            guards = ctx.guards + ((loc, stmt.span),) if loc is not None else ctx.guards
            self.block(stmt.body, _Ctx(ctx.active, guards), inner)
        elif isinstance(stmt, If):
            loc = self.expr(stmt.guard, ctx)
            if loc is not None:
                self.acting(loc, stmt.span, ctx)
            guards = ctx.guards + ((loc, stmt.span),) if loc is not None else ctx.guards
            self.block(stmt.then, _Ctx(ctx.active, guards), set(scope))
            if stmt.orelse is not None:
                self.block(stmt.orelse, _Ctx(ctx.active, guards), set(scope))

    def chain(self, chain: Chain, ctx: _Ctx, scope: set) -> None:
        start = self.expr(chain.head, ctx)
        if start is None:
            return
        self.acting(start, chain.span, ctx)
        prev = start
        local_names: set[tuple[str, str]] = set()
        for step, here in chain_locations(chain, start):
            if isinstance(step, BindVar):
                self.occurs(step.role, step.span, ctx)
                if self.role_kind(step.role, step.span) and step.role != here:
                    self.report(
                        Code.DATA_LOCALITY, step.span,
                        f"cannot bind {step.name}@{step.role}: the value is at {here!r}",
                    )
                if (step.name, step.role) in local_names:
                    self.report(Code.DUPLICATE_NAME, step.span, f"{step.name!r} bound twice in one chain")
                else:
                    self.bind(step.name, step.role, step.span, scope)
                local_names.add((step.name, step.role))
            elif isinstance(step, LocalCall):
                self.local_op(step.alias, here, step.span)
            elif isinstance(step, OneWayTrigger):
                self.occurs(step.target, step.span, ctx)
                self.trigger_target(step.medium, step.target, step.span, prev, rr=False)
            elif isinstance(step, OneWayService):
                self.service_op(step.service, step.operation, step.span)
            prev = here

    def run(self) -> list[Diagnostic]:
        self.preamble()
        scope: set = set()
        top = _Ctx(None)
        for p in self.choreo.params:
            kind = self.role_kind(p.role, p.span)
            if kind is RoleKind.STATELESS:
                self.report(Code.DATA_LOCALITY, p.span, f"main parameter located at function {p.role!r}")
            self.bind(p.name, p.role, p.span, scope)
        self.block(self.choreo.body, top, scope)
        return sorted(self.diags.values())


def check(choreo: Choreography) -> list[Diagnostic]:
    """Return every well-formedness violation in ``choreo``, sorted by position."""
    return _Checker(choreo).run()
