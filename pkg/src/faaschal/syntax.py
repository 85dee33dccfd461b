"""FaaSChal abstract syntax tree and diagnostics.

Every node is a frozen dataclass.  Source spans are carried on the nodes
but excluded from equality and ``repr`` so that two sources differing only
in layout (or in the spelling of the forward operator) produce equal trees.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True, order=True)
class Span:
    line: int = 1
    col: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOWHERE = Span(0, 0)


def _span() -> Span:
    return field(default=NOWHERE, compare=False, repr=False)


class Code(str, enum.Enum):
    UNDECLARED_ROLE = "UndeclaredRole"
    UNDECLARED_MEDIUM = "UndeclaredMedium"
    UNDECLARED_OPERATION = "UndeclaredOperation"
    DATA_LOCALITY = "DataLocality"
    IMPORT_SCOPE = "ImportScope"
    KNOWLEDGE_OF_CHOICE = "KnowledgeOfChoice"
    STATEFUL_IN_BODY = "StatefulInBody"
    DUPLICATE_NAME = "DuplicateName"
    SYNTAX = "Syntax"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Diagnostic:
    span: Span
    code: Code
    message: str

    def render(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.code.value}: {self.message}"


class ChorSyntaxError(Exception):
    """Raised by the parser; carries a single ``Syntax`` diagnostic."""

    def __init__(self, message: str, span: Span) -> None:
        super().__init__(f"{span}: {message}")
        self.diagnostic = Diagnostic(span, Code.SYNTAX, message)


# ---------------------------------------------------------------------------
# Preamble
# ---------------------------------------------------------------------------


class RoleKind(str, enum.Enum):
    STATEFUL = "Stateful"
    STATELESS = "Stateless"
    SERVICE = "Service"


@dataclass(frozen=True)
class Medium:
    name: str
    endpoint: str | None = None
    span: Span = _span()


@dataclass(frozen=True)
class RoleDecl:
    name: str
    kind: RoleKind
    media: tuple[Medium, ...] = ()
    operations: tuple[str, ...] = ()
    span: Span = _span()

    def medium(self, name: str) -> Medium | None:
        for m in self.media:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Import:
    module: str
    operation: str
    alias: str
    target: str
    span: Span = _span()


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarRef:
    name: str
    role: str
    span: Span = _span()


@dataclass(frozen=True)
class Literal:
    value: str | int | float
    role: str
    span: Span = _span()


@dataclass(frozen=True)
class FieldAccess:
    base: Expr
    label: str
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    alias: str
    args: tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class ServiceRR:
    arg: Expr
    service: str
    operation: str
    span: Span = _span()


Expr = Union[VarRef, Literal, FieldAccess, Call, ServiceRR]


def leaves(expr: Expr):
    """Yield the located leaves (variables and literals) of an expression."""
    if isinstance(expr, (VarRef, Literal)):
        yield expr
    elif isinstance(expr, FieldAccess):
        yield from leaves(expr.base)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from leaves(arg)
    elif isinstance(expr, ServiceRR):
        yield from leaves(expr.arg)


def expr_role(expr: Expr) -> str:
    """Location of an expression: the role of its first leaf."""
    for leaf in leaves(expr):
        return leaf.role
    raise ValueError("expression without located leaves")


# ---------------------------------------------------------------------------
# Chains and statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BindVar:
    name: str
    role: str
    span: Span = _span()


@dataclass(frozen=True)
class LocalCall:
    alias: str
    span: Span = _span()


@dataclass(frozen=True)
class OneWayTrigger:
    medium: str
    target: str
    span: Span = _span()


@dataclass(frozen=True)
class OneWayService:
    service: str
    operation: str
    span: Span = _span()


ChainStep = Union[BindVar, LocalCall, OneWayTrigger, OneWayService]


@dataclass(frozen=True)
class RRTrigger:
    payload: Expr
    medium: str
    target: str
    bound: VarRef | None
    body: tuple[Stmt, ...]
    result: Expr | None = None
    span: Span = _span()


@dataclass(frozen=True)
class Chain:
    head: Expr
    steps: tuple[ChainStep, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class ForEach:
    var: str
    role: str
    iterable: Expr
    body: tuple[Stmt, ...]
    span: Span = _span()


@dataclass(frozen=True)
class If:
    guard: Expr
    then: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] | None = None
    span: Span = _span()


Stmt = Union[RRTrigger, Chain, ForEach, If]


@dataclass(frozen=True)
class Choreography:
    roles: tuple[RoleDecl, ...]
    imports: tuple[Import, ...]
    params: tuple[VarRef, ...]
    body: tuple[Stmt, ...]
    span: Span = _span()

    def role(self, name: str) -> RoleDecl | None:
        for r in self.roles:
            if r.name == name:
                return r
        return None

    def names(self, kind: RoleKind) -> list[str]:
        return [r.name for r in self.roles if r.kind is kind]

    @property
    def stateful(self) -> list[str]:
        return self.names(RoleKind.STATEFUL)

    @property
    def stateless(self) -> list[str]:
        return self.names(RoleKind.STATELESS)

    @property
    def services(self) -> list[str]:
        return self.names(RoleKind.SERVICE)


def walk_statements(body):
    """Depth-first pre-order walk over every statement, nested ones included."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, RRTrigger):
            yield from walk_statements(stmt.body)
        elif isinstance(stmt, ForEach):
            yield from walk_statements(stmt.body)
        elif isinstance(stmt, If):
            yield from walk_statements(stmt.then)
            if stmt.orelse is not None:
                yield from walk_statements(stmt.orelse)
