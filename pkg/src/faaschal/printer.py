"""Pretty-printer emitting choreographies in the normative concrete syntax."""

from __future__ import annotations

from decimal import Decimal

from .syntax import (
    BindVar,
    Call,
    Chain,
    Choreography,
    FieldAccess,
    ForEach,
    If,
    Literal,
    LocalCall,
    OneWayService,
    OneWayTrigger,
    RoleKind,
    RRTrigger,
    ServiceRR,
    VarRef,
)

INDENT = "  "


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_literal(value) -> str:
    if isinstance(value, str):
        return quote(value)
    if isinstance(value, float):
        text = repr(value)
        # the lexer has no exponent syntax
        if "e" in text:
            text = format(Decimal(text), "f")
            if "." not in text:
                text += ".0"
        return text
    return str(value)


def format_expr(expr) -> str:
    if isinstance(expr, VarRef):
        return f"{expr.name}@{expr.role}"
    if isinstance(expr, Literal):
        return f"{format_literal(expr.value)}@{expr.role}"
    if isinstance(expr, FieldAccess):
        return f"{format_expr(expr.base)}.{expr.label}"
    if isinstance(expr, Call):
        return f"{expr.alias}({', '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, ServiceRR):
        return f"{format_expr(expr.arg)} <-> {expr.service}: {expr.operation}"
    raise TypeError(f"not an expression: {expr!r}")


def format_step(step) -> str:
    if isinstance(step, BindVar):
        return f"{step.name}@{step.role}"
    if isinstance(step, LocalCall):
        return step.alias
    if isinstance(step, OneWayTrigger):
        return f"-{step.medium}-> {step.target}"
    if isinstance(step, OneWayService):
        return f"-> {step.service}: {step.operation}"
    raise TypeError(f"not a chain step: {step!r}")


def _stmts(body, depth: int, out: list[str]) -> None:
    for stmt in body:
        _stmt(stmt, depth, out)


def _stmt(stmt, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(stmt, Chain):
        parts = [format_expr(stmt.head)] + [format_step(s) for s in stmt.steps]
        out.append(pad + " ▶ ".join(parts))
    elif isinstance(stmt, RRTrigger):
        bound = f" | {stmt.bound.name}@{stmt.bound.role} |" if stmt.bound else ""
        out.append(f"{pad}{format_expr(stmt.payload)} <-{stmt.medium}-> {stmt.target} do{bound}")
        _stmts(stmt.body, depth + 1, out)
        tail = f" with {format_expr(stmt.result)}" if stmt.result is not None else ""
        out.append(f"{pad}end{tail}")
    elif isinstance(stmt, ForEach):
        out.append(f"{pad}for {stmt.var}@{stmt.role} in {format_expr(stmt.iterable)} do")
        _stmts(stmt.body, depth + 1, out)
        out.append(f"{pad}end")
    elif isinstance(stmt, If):
        out.append(f"{pad}if {format_expr(stmt.guard)} then")
        _stmts(stmt.then, depth + 1, out)
        if stmt.orelse is not None:
            out.append(f"{pad}else")
            _stmts(stmt.orelse, depth + 1, out)
        out.append(f"{pad}end")
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def pretty(choreo: Choreography) -> str:
    out: list[str] = []
    stateful = [r.name for r in choreo.roles if r.kind is RoleKind.STATEFUL]
    out.append("stateful: " + ", ".join(stateful) if stateful else "stateful:")
    fns = []
    for r in choreo.roles:
        if r.kind is RoleKind.STATELESS:
            media = ", ".join(
                m.name if m.endpoint is None else f"{m.name}:{quote(m.endpoint)}" for m in r.media
            )
            fns.append(f"{r.name}{{ {media} }}")
    out.append("stateless: " + ", ".join(fns) if fns else "stateless:")
    svcs = [
        f"{r.name}{{ {', '.join(r.operations)} }}" for r in choreo.roles if r.kind is RoleKind.SERVICE
    ]
    out.append("services: " + ", ".join(svcs) if svcs else "services:")
    for imp in choreo.imports:
        out.append(f"import {imp.module}::{imp.operation} as {imp.alias}@{imp.target}")
    out.append("")
    params = ", ".join(f"{p.name}@{p.role}" for p in choreo.params)
    out.append(f"def main( {params} )" if params else "def main()")
    _stmts(choreo.body, 1, out)
    out.append("end")
    return "\n".join(out) + "\n"
