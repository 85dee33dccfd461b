"""Extraction of data, call and code localities from a choreography."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import syntax as S
from .checker import chain_locations


class Multiplicity(str, enum.Enum):
    ONE_TO_ONE = "1:1"
    ONE_TO_MANY = "1:n"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CallLocality:
    caller: str
    callee: str
    medium: str
    multiplicity: Multiplicity


@dataclass(frozen=True)
class TriggerSite:
    """A trigger between two roles, with the loops enclosing it.

    ``loops`` counts the ``for`` constructs between the caller's activation
    (its own triggering, or ``main`` for a stateful caller) and the trigger.
    """

    caller: str
    callee: str
    medium: str
    loops: int
    span: S.Span = field(default=S.NOWHERE, compare=False)
    loop_span: S.Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LocalitySet:
    data: frozenset[tuple[str, str]] = frozenset()
    call: frozenset[CallLocality] = frozenset()
    code: frozenset[frozenset[str]] = frozenset()
    # rendering metadata only
    fn_order: tuple[str, ...] = field(default=(), compare=False)
    code_modules: tuple[tuple[frozenset[str], tuple[str, ...]], ...] = field(default=(), compare=False)

    def services_of(self, fn: str) -> list[str]:
        return sorted(s for f, s in self.data if f == fn)

    def media_of(self, fn: str) -> list[str]:
        """Media of every call locality ``fn`` takes part in, either end."""
        return sorted({c.medium for c in self.call if fn in (c.caller, c.callee)})

    def code_partners(self, fn: str) -> list[str]:
        return sorted(p for pair in self.code if fn in pair for p in pair if p != fn)


def multiplicity(site: TriggerSite) -> Multiplicity:
    return Multiplicity.ONE_TO_MANY if site.loops >= 1 else Multiplicity.ONE_TO_ONE


class _Walker:
    def __init__(self, choreo: S.Choreography) -> None:
        self.choreo = choreo
        self.sites: list[TriggerSite] = []
        self.service_uses: list[tuple[str, str]] = []

    def block(self, body, loops: tuple[S.Span, ...], activated: dict[str, int]) -> None:
        for stmt in body:
            self.stmt(stmt, loops, activated)

    def site(self, caller, callee, medium, span, loops, activated) -> None:
        since = len(loops) - activated.get(caller, 0)
        self.sites.append(
            TriggerSite(caller, callee, medium, since, span, loops[-1] if since > 0 else None)
        )

    def stmt(self, stmt, loops, activated) -> None:
        if isinstance(stmt, S.Chain):
            here = S.expr_role(stmt.head)
            if isinstance(stmt.head, S.ServiceRR):
                self.service_uses.append((here, stmt.head.service))
            for step, at in chain_locations(stmt, here):
                if isinstance(step, S.OneWayTrigger):
                    self.site(here, step.target, step.medium, step.span, loops, activated)
                    activated = {**activated, step.target: len(loops)}
                elif isinstance(step, S.OneWayService):
                    self.service_uses.append((at, step.service))
                here = at
        elif isinstance(stmt, S.RRTrigger):
            caller = S.expr_role(stmt.payload)
            self.site(caller, stmt.target, stmt.medium, stmt.span, loops, activated)
            self.block(stmt.body, loops, {**activated, stmt.target: len(loops)})
        elif isinstance(stmt, S.ForEach):
            self.block(stmt.body, loops + (stmt.span,), activated)
        elif isinstance(stmt, S.If):
            self.block(stmt.then, loops, activated)
            if stmt.orelse is not None:
                self.block(stmt.orelse, loops, activated)


def trigger_sites(choreo: S.Choreography) -> list[TriggerSite]:
    walker = _Walker(choreo)
    walker.block(choreo.body, (), {})
    return walker.sites


def extract(choreo: S.Choreography) -> LocalitySet:
    """Compute the locality set of a well-formed choreography.

    Only stateless functions appear: stateful participants are not
    scheduled, so their service uses and triggers are ignored.
    """
    fns = choreo.stateless
    fn_set = set(fns)
    walker = _Walker(choreo)
    walker.block(choreo.body, (), {})

    data = frozenset((f, s) for f, s in walker.service_uses if f in fn_set)
    call = frozenset(
        CallLocality(s.caller, s.callee, s.medium, multiplicity(s))
        for s in walker.sites
        if s.caller in fn_set and s.callee in fn_set
    )

    modules: dict[str, list[str]] = {}
    for imp in choreo.imports:
        if imp.target in fn_set:
            users = modules.setdefault(imp.module, [])
            if imp.target not in users:
                users.append(imp.target)
    pair_modules: dict[frozenset[str], list[str]] = {}
    for module, users in modules.items():
        for i, a in enumerate(users):
            for b in users[i + 1 :]:
                pair_modules.setdefault(frozenset((a, b)), []).append(module)
    code = frozenset(pair_modules)
    return LocalitySet(
        data,
        call,
        code,
        fn_order=tuple(fns),
        code_modules=tuple((p, tuple(sorted(m))) for p, m in pair_modules.items()),
    )


def _rank(order: tuple[str, ...]):
    index = {name: i for i, name in enumerate(order)}
    return lambda name: (index.get(name, len(index)), name)


def sorted_data(loc: LocalitySet) -> list[tuple[str, str]]:
    rank = _rank(loc.fn_order)
    return sorted(loc.data, key=lambda d: (rank(d[0]), d[1]))


def sorted_calls(loc: LocalitySet) -> list[CallLocality]:
    rank = _rank(loc.fn_order)
    return sorted(loc.call, key=lambda c: (rank(c.caller), rank(c.callee), c.medium, c.multiplicity.value))


def sorted_code(loc: LocalitySet) -> list[tuple[str, str]]:
    rank = _rank(loc.fn_order)
    pairs = [tuple(sorted(p, key=rank)) for p in loc.code]
    return sorted(pairs, key=lambda p: (rank(p[0]), rank(p[1])))


def emit_localities(loc: LocalitySet) -> str:
    """Render the locality report: one section per kind, one tuple per line."""
    modules = dict(loc.code_modules)
    lines = ["data locality:"]
    lines += [f"  ( {f}, {s} )" for f, s in sorted_data(loc)]
    lines.append("call locality:")
    lines += [f"  ( {c.caller}, {c.callee}, {c.medium}, {c.multiplicity} )" for c in sorted_calls(loc)]
    lines.append("code locality:")
    for a, b in sorted_code(loc):
        mods = modules.get(frozenset((a, b)))
        lines.append(f"  ( {a}, {b} )" + (f" # {', '.join(mods)}" if mods else ""))
    return "\n".join(lines) + "\n"
