"""Deployment inputs: topology speeds, anti-affinity constraints, clusters, traces.

File formats (``#`` starts a comment everywhere)::

    # .dep
    topology:
      ( DB1, group1 ): 100
    anti-affine: ( f, g ), ( g, g )

    # .cluster
    capacity: 3
    workers:
      w1: group1

    # .trace
    0 f 5
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import syntax as S


class DeploymentError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.message = message
        self.line = line


Number = int | float


@dataclass(frozen=True)
class Topology:
    speeds: dict[tuple[str, str], Number] = field(default_factory=dict)

    def speed(self, endpoint: str, group: str) -> Number | None:
        return self.speeds.get((endpoint, group))

    def reaches(self, endpoint: str, group: str) -> bool:
        return (endpoint, group) in self.speeds

    @property
    def groups(self) -> list[str]:
        return sorted({g for _, g in self.speeds})


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Constraints:
    """Symmetric anti-affinity relation, stored as normalized unordered pairs."""

    anti_affine: frozenset[tuple[str, str]] = frozenset()

    @classmethod
    def of(cls, pairs) -> Constraints:
        return cls(frozenset(_pair(a, b) for a, b in pairs))

    def contains(self, a: str, b: str) -> bool:
        return _pair(a, b) in self.anti_affine

    def partners(self, fn: str) -> list[str]:
        out = set()
        for a, b in self.anti_affine:
            if a == fn:
                out.add(b)
            if b == fn:
                out.add(a)
        return sorted(out)


@dataclass(frozen=True)
class Worker:
    id: str
    group: str


@dataclass(frozen=True)
class Cluster:
    workers: tuple[Worker, ...]
    capacity: int | None = None

    def group_of(self, worker_id: str) -> str:
        for w in self.workers:
            if w.id == worker_id:
                return w.group
        raise KeyError(worker_id)


@dataclass(frozen=True)
class TraceEvent:
    time: Number
    fn: str
    duration: Number


@dataclass(frozen=True)
class Trace:
    events: tuple[TraceEvent, ...] = ()

    @classmethod
    def of(cls, events) -> Trace:
        # sorted() is stable, so ties keep generation order
        return cls(tuple(sorted(events, key=lambda e: e.time)))


# -- parsing helpers ---------------------------------------------------------

_NAME = r"[A-Za-z_][A-Za-z0-9_.:-]*"
_NUM = r"(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?"
_SPEED = re.compile(rf"^\(\s*({_NAME})\s*,\s*({_NAME})\s*\)\s*:\s*(-?(?:{_NUM}))$")
_PAIR = re.compile(rf"\(\s*({_NAME})\s*,\s*({_NAME})\s*\)")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _number(text: str) -> Number:
    return float(text) if any(c in text for c in ".eE") else int(text)


def format_number(value: Number) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _pairs(text: str, lineno: int) -> list[tuple[str, str]]:
    rest = _PAIR.sub("", text).replace(",", "").strip()
    if rest:
        raise DeploymentError(f"malformed pair list {text!r}", lineno)
    return _PAIR.findall(text)


def parse_deployment(text: str) -> tuple[Topology, Constraints]:
    speeds: dict[tuple[str, str], Number] = {}
    pairs: list[tuple[str, str]] = []
    section = None
    seen_topology = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if line == "topology:":
            section, seen_topology = "topology", True
            continue
        if line.startswith("anti-affine:"):
            section = "anti"
            pairs += _pairs(line[len("anti-affine:"):], lineno)
            continue
        if section == "topology":
            m = _SPEED.match(line)
            if not m:
                raise DeploymentError(f"expected '( endpoint, group ): speed', got {line!r}", lineno)
            endpoint, group, value = m.group(1), m.group(2), _number(m.group(3))
            if value <= 0:
                raise DeploymentError(f"non-positive speed {m.group(3)} for ({endpoint}, {group})", lineno)
            key = (endpoint, group)
            if key in speeds and speeds[key] != value:
                raise DeploymentError(
                    f"conflicting speeds for ({endpoint}, {group}): {speeds[key]} and {value}", lineno
                )
            speeds[key] = value
        elif section == "anti":
            pairs += _pairs(line, lineno)
        else:
            raise DeploymentError(f"line outside of any section: {line!r}", lineno)
    if not seen_topology:
        raise DeploymentError("missing 'topology:' section")
    return Topology(speeds), Constraints.of(pairs)


def emit_deployment(topo: Topology, cons: Constraints) -> str:
    lines = ["topology:"]
    lines += [f"  ( {e}, {g} ): {format_number(v)}" for (e, g), v in topo.speeds.items()]
    if cons.anti_affine:
        lines.append("anti-affine:")
        lines += [f"  ( {a}, {b} )" for a, b in sorted(cons.anti_affine)]
    return "\n".join(lines) + "\n"


def parse_cluster(text: str) -> Cluster:
    workers: list[Worker] = []
    ids: set[str] = set()
    capacity = None
    in_workers = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        indented = raw[:1].isspace()
        key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise DeploymentError(f"expected 'key: value', got {line!r}", lineno)
        if not indented and key == "workers" and not value:
            in_workers = True
        elif not indented and key == "capacity":
            try:
                capacity = int(value)
            except ValueError:
                raise DeploymentError(f"capacity must be an integer, got {value!r}", lineno) from None
            if capacity < 1:
                raise DeploymentError(f"capacity must be at least 1, got {capacity}", lineno)
        elif in_workers:
            if not value:
                raise DeploymentError(f"worker {key!r} has no group", lineno)
            if key in ids:
                raise DeploymentError(f"duplicate worker id {key!r}", lineno)
            ids.add(key)
            workers.append(Worker(key, value))
        else:
            raise DeploymentError(f"unexpected line {line!r}", lineno)
    return Cluster(tuple(workers), capacity)


def emit_cluster(cluster: Cluster) -> str:
    lines = [] if cluster.capacity is None else [f"capacity: {cluster.capacity}"]
    lines.append("workers:")
    lines += [f"  {w.id}: {w.group}" for w in cluster.workers]
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    events = []
    last = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DeploymentError(f"expected '<time> <fn> <duration>', got {line!r}", lineno)
        try:
            time, duration = float(parts[0]), float(parts[2])
        except ValueError:
            raise DeploymentError(f"bad number in {line!r}", lineno) from None
        if time < 0 or duration <= 0:
            raise DeploymentError("times must be non-negative and durations positive", lineno)
        if last is not None and time < last:
            raise DeploymentError("trace times must be non-decreasing", lineno)
        last = time
        events.append(TraceEvent(time, parts[1], duration))
    return Trace(tuple(events))


def emit_trace(trace: Trace) -> str:
    return "".join(f"{e.time} {e.fn} {e.duration}\n" for e in trace.events)


# -- trace generation ---------------------------------------------------------


def generate_trace(choreo: S.Choreography, loop_count: int, base_duration: float, trigger_delay: float) -> Trace:
    """One event per function instance the choreography creates.

    Every ``for`` is unrolled ``loop_count`` times and only the ``then``
    branch of a conditional is followed.  Instances triggered from a
    stateful role start at 0; an instance triggered by a function instance
    starting at ``t`` starts at ``t + trigger_delay``.
    """
    if loop_count < 0:
        raise ValueError("loop_count must be non-negative")
    if base_duration <= 0 or trigger_delay <= 0:
        raise ValueError("durations and delays must be positive")
    stateless = set(choreo.stateless)
    events: list[TraceEvent] = []

    def spawn(caller_time: float | None, fn: str) -> float | None:
        if fn not in stateless:
            return None
        t = 0.0 if caller_time is None else caller_time + trigger_delay
        events.append(TraceEvent(t, fn, base_duration))
        return t

    # times: role -> start time of its current instance (None for stateful roles)
    def block(body, times: dict[str, float | None]) -> None:
        for stmt in body:
            if isinstance(stmt, S.Chain):
                here = S.expr_role(stmt.head)
                local = dict(times)
                for step in stmt.steps:
                    if isinstance(step, S.OneWayTrigger):
                        local[step.target] = spawn(local.get(here), step.target)
                        here = step.target
            elif isinstance(stmt, S.RRTrigger):
                caller = S.expr_role(stmt.payload)
                t = spawn(times.get(caller), stmt.target)
                block(stmt.body, {**times, stmt.target: t})
            elif isinstance(stmt, S.ForEach):
                for _ in range(loop_count):
                    block(stmt.body, times)
            elif isinstance(stmt, S.If):
                block(stmt.then, times)

    block(choreo.body, {})
    return Trace.of(events)
