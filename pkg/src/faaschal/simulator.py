"""Discrete-event simulation of APP-driven function placement.

Invocations are processed in time order.  Before placing an invocation at
time ``t`` every instance finishing at or before ``t`` is released.  Blocks
of the function's policy are tried in order; within a block the strategy
picks among eligible workers.  Running out of blocks fails the invocation.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, field

from .app import WILDCARD, AppScript, Block
from .deployment import Cluster, Topology, Trace, Worker
from .locality import LocalitySet


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class FirstFit:
    """Pick the eligible worker with the lowest id."""


@dataclass(frozen=True)
class SeededRandom:
    """Pick uniformly among eligible workers, reproducibly."""

    seed: int = 0


class SchedulerState:
    def __init__(self, cluster: Cluster) -> None:
        self.running: dict[str, Counter] = {w.id: Counter() for w in cluster.workers}
        self.completions: list[tuple[float, int, str, str]] = []
        self._seq = 0

    def load(self, worker_id: str) -> int:
        return sum(self.running[worker_id].values())

    def start(self, worker_id: str, tag: str, until: float) -> None:
        self.running[worker_id][tag] += 1
        heapq.heappush(self.completions, (until, self._seq, worker_id, tag))
        self._seq += 1

    def release_until(self, t: float) -> int:
        released = 0
        while self.completions and self.completions[0][0] <= t:
            _, _, worker_id, tag = heapq.heappop(self.completions)
            counts = self.running[worker_id]
            if counts[tag] <= 0:
                raise AssertionError(f"completion of {tag} on {worker_id} without a running instance")
            counts[tag] -= 1
            if counts[tag] == 0:
                del counts[tag]
            released += 1
        return released


@dataclass(frozen=True)
class Placement:
    time: float
    fn: str
    worker: str
    block: int  # 1-based position of the block in the function's policy
    cost: float


@dataclass(frozen=True)
class Failure:
    time: float
    fn: str
    reason: str


@dataclass
class SimReport:
    placements: list[Placement] = field(default_factory=list)
    failures: list[Failure] = field(default_factory=list)
    violations: int = 0
    peak: dict[str, int] = field(default_factory=dict)

    @property
    def total_cost(self) -> float:
        return sum(p.cost for p in self.placements)

    @property
    def mean_cost(self) -> float:
        return self.total_cost / len(self.placements) if self.placements else 0.0

    def to_text(self) -> str:
        lines = [
            f"PLACE {_num(p.time)} {p.fn} {p.worker} {p.block} {_num(p.cost)}" for p in self.placements
        ]
        lines += [f"FAIL {_num(f.time)} {f.fn} {f.reason}" for f in self.failures]
        lines.sort(key=lambda line: float(line.split()[1]))
        lines.append(
            f"# placements={len(self.placements)} failures={len(self.failures)} "
            f"violations={self.violations} total_cost={_num(self.total_cost)} "
            f"mean_cost={_num(self.mean_cost)}"
        )
        lines.append("# peak " + " ".join(f"{w}={n}" for w, n in self.peak.items()))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        data = {
            "placements": [{**asdict(p), "cost": _finite(p.cost)} for p in self.placements],
            "failures": [asdict(f) for f in self.failures],
            "violations": self.violations,
            "total_cost": _finite(self.total_cost),
            "mean_cost": _finite(self.mean_cost),
            "peak": self.peak,
        }
        return json.dumps(data, indent=2, allow_nan=False) + "\n"


def _finite(x: float) -> float | str:
    # JSON has no infinity; the unreachable-store sentinel is spelled "inf"
    return "inf" if math.isinf(x) else x


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return str(int(x)) if float(x).is_integer() else f"{x:g}"


def _sorted_workers(cluster: Cluster) -> list[Worker]:
    return sorted(cluster.workers, key=lambda w: w.id)


def eligible_workers(fn: str, block: Block, state: SchedulerState, cluster: Cluster) -> list[str]:
    """Workers that may host a new ``fn`` instance under ``block``, lowest id first."""
    out = []
    for w in _sorted_workers(cluster):
        if block.workers is not WILDCARD and w.group != block.workers:
            continue
        running = state.running[w.id]
        if any(running[tag] < 1 for tag in block.affine):
            continue
        if any(running[tag] > 0 for tag in block.anti_affine):
            continue
        if cluster.capacity is not None and state.load(w.id) >= cluster.capacity:
            continue
        out.append(w.id)
    return out


def placement_cost(fn: str, worker: Worker, loc: LocalitySet, topo: Topology) -> float:
    """Latency proxy: sum of 100/speed over the function's stores and media.

    An unreachable store makes the placement infinitely expensive; media
    missing from the topology are skipped.
    """
    cost = 0.0
    for service in loc.services_of(fn):
        speed = topo.speed(service, worker.group)
        if speed is None:
            return math.inf
        cost += 100 / speed
    for medium in loc.media_of(fn):
        speed = topo.speed(medium, worker.group)
        if speed is not None:
            cost += 100 / speed
    return cost


def _permitted(block: Block, worker: Worker, running: Counter, capacity: int | None) -> bool:
    # Independent restatement of the block predicate, used for post-hoc auditing.
    group_ok = block.workers is WILDCARD or block.workers == worker.group
    affine_ok = all(running.get(t, 0) >= 1 for t in block.affine)
    anti_ok = not any(running.get(t, 0) for t in block.anti_affine)
    cap_ok = capacity is None or sum(running.values()) < capacity
    return group_ok and affine_ok and anti_ok and cap_ok


def simulate(
    script: AppScript,
    cluster: Cluster,
    trace: Trace,
    topo: Topology | None = None,
    loc: LocalitySet | None = None,
    strategy: FirstFit | SeededRandom = FirstFit(),
) -> SimReport:
    topo = topo or Topology()
    loc = loc or LocalitySet()
    known = set(script.tags)
    unknown = sorted({e.fn for e in trace.events} - known)
    if unknown:
        raise SimulationError(f"trace invokes functions without a policy: {', '.join(unknown)}")
    times = [e.time for e in trace.events]
    if times != sorted(times):
        raise SimulationError("trace events are not sorted by time")

    rng = random.Random(strategy.seed) if isinstance(strategy, SeededRandom) else None
    state = SchedulerState(cluster)
    workers = {w.id: w for w in cluster.workers}
    report = SimReport(peak={w.id: 0 for w in _sorted_workers(cluster)})

    for event in trace.events:
        state.release_until(event.time)
        chosen = None
        for index, block in enumerate(script.blocks(event.fn), 1):
            candidates = eligible_workers(event.fn, block, state, cluster)
            if candidates:
                worker_id = candidates[0] if rng is None else rng.choice(candidates)
                chosen = (index, block, worker_id)
                break
        if chosen is None:
            report.failures.append(Failure(event.time, event.fn, "blocks-exhausted"))
            continue
        index, block, worker_id = chosen
        worker = workers[worker_id]
        if not _permitted(block, worker, state.running[worker_id], cluster.capacity):
            report.violations += 1
        cost = placement_cost(event.fn, worker, loc, topo)
        state.start(worker_id, event.fn, event.time + event.duration)
        report.peak[worker_id] = max(report.peak[worker_id], state.load(worker_id))
        report.placements.append(Placement(event.time, event.fn, worker_id, index, cost))
    return report
