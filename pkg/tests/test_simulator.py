import math

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from faaschal import (
    SeededRandom,
    data_file,
    extract,
    generate_trace,
    parse,
    parse_app,
    parse_cluster,
    simulate,
)
from faaschal.app import WILDCARD, AppScript, Block
from faaschal.deployment import Cluster, Trace, TraceEvent, Worker
from faaschal.simulator import SchedulerState, SimulationError, eligible_workers, placement_cost

import oracle
from strategies import clusters, scripts, traces

TAGS = ("a", "b", "c", "d")


@pytest.fixture
def policy():
    return parse_app(data_file("training.app"))


@pytest.fixture
def two_groups():
    return parse_cluster(data_file("two-groups.cluster"))


def ev(*items):
    return Trace.of(TraceEvent(float(t), fn, float(d)) for t, fn, d in items)


def test_f_bootstraps_through_second_block(policy, two_groups):
    report = simulate(policy, two_groups, ev((0, "f", 5)))
    (p,) = report.placements
    assert (p.fn, p.worker, p.block) == ("f", "w1", 2)


def test_second_f_joins_the_first(policy, two_groups):
    report = simulate(policy, two_groups, ev((0, "f", 5), (1, "f", 5)))
    assert [(p.worker, p.block) for p in report.placements] == [("w1", 2), ("w1", 1)]


def test_concurrent_g_fails_on_single_worker(policy):
    cluster = parse_cluster(data_file("one-worker.cluster"))
    report = simulate(policy, cluster, ev((0, "g", 5), (1, "g", 5)))
    assert [p.fn for p in report.placements] == ["g"]
    assert [(f.time, f.fn, f.reason) for f in report.failures] == [(1.0, "g", "blocks-exhausted")]


def test_completion_frees_the_worker(policy):
    cluster = parse_cluster(data_file("one-worker.cluster"))
    # the first g ends exactly when the second arrives
    report = simulate(policy, cluster, ev((0, "g", 1), (1, "g", 1)))
    assert len(report.placements) == 2 and not report.failures


def test_empty_trace(policy, two_groups):
    report = simulate(policy, two_groups, Trace())
    assert (report.placements, report.failures, report.violations) == ([], [], 0)
    assert report.peak == {"w1": 0, "w2": 0, "w3": 0, "w4": 0}


def test_unknown_function(policy, two_groups):
    with pytest.raises(SimulationError):
        simulate(policy, two_groups, ev((0, "z", 1)))


def test_unsorted_trace(policy, two_groups):
    trace = Trace((TraceEvent(1.0, "f", 1.0), TraceEvent(0.0, "f", 1.0)))
    with pytest.raises(SimulationError):
        simulate(policy, two_groups, trace)


def test_eligible_workers(policy, two_groups):
    state = SchedulerState(two_groups)
    g_block = policy.blocks("g")[0]
    assert eligible_workers("g", g_block, state, two_groups) == ["w1", "w2", "w3", "w4"]
    state.start("w1", "f", 5)
    state.start("w3", "h", 5)
    assert eligible_workers("g", g_block, state, two_groups) == ["w2", "w4"]
    assert eligible_workers("f", policy.blocks("f")[0], state, two_groups) == ["w1"]
    assert eligible_workers("h", policy.blocks("h")[1], state, two_groups) == ["w3", "w4"]


def test_capacity_limits_load():
    script = AppScript((("a", (Block(WILDCARD),)),))
    cluster = Cluster((Worker("w1", "g"),), capacity=2)
    report = simulate(script, cluster, ev((0, "a", 9), (0, "a", 9), (0, "a", 9)))
    assert len(report.placements) == 2 and len(report.failures) == 1
    assert report.peak == {"w1": 2}


def test_placement_costs(training, deployment):
    topo, _ = deployment
    loc = extract(training)
    # h: 100/50 for DB3 plus 100/50 for SNS
    assert placement_cost("h", Worker("w3", "group2"), loc, topo) == 4.0
    # f: 100/100 + 100/20 + 100/50
    assert placement_cost("f", Worker("w1", "group1"), loc, topo) == 8.0
    assert placement_cost("f", Worker("w3", "group2"), loc, topo) == math.inf
    assert placement_cost("g", Worker("w3", "group2"), loc, topo) == 2.0


def test_report_costs(policy, two_groups, training, deployment):
    topo, _ = deployment
    report = simulate(policy, two_groups, generate_trace(training, 1, 5, 1), topo, extract(training))
    assert [p.cost for p in report.placements] == [8.0, 2.0, 4.0]
    assert report.total_cost == 14.0
    assert "# placements=3 failures=0 violations=0 total_cost=14" in report.to_text()


def test_json_report_spells_infinity(policy, two_groups, training, deployment):
    topo, _ = deployment
    script = AppScript((("f", (Block("group2"),)),))
    report = simulate(script, two_groups, ev((0, "f", 1)), topo, extract(training))
    assert '"cost": "inf"' in report.to_json()


def test_state_conservation(two_groups):
    state = SchedulerState(two_groups)
    for i in range(5):
        state.start("w1", "f", float(i))
    assert state.load("w1") == 5
    assert state.release_until(2.0) == 3
    assert state.load("w1") == 2
    assert state.release_until(10.0) == 2
    assert state.running["w1"] == {}


# -- properties ---------------------------------------------------------------


@st.composite
def instances(draw):
    script = draw(scripts(TAGS))
    return script, draw(clusters()), draw(traces(script.tags))


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(instances())
def test_first_fit_matches_brute_force(instance):
    script, cluster, trace = instance
    report = simulate(script, cluster, trace)
    assert report.violations == 0
    assert len(report.placements) + len(report.failures) == len(trace.events)
    placed = iter(report.placements)
    failed = iter(report.failures)
    for e, expected in zip(trace.events, oracle.first_fit(script, cluster, trace)):
        if expected is None:
            f = next(failed)
            assert (f.time, f.fn) == (e.time, e.fn)
        else:
            p = next(placed)
            assert (p.time, p.fn, p.block, p.worker) == (e.time, e.fn, *expected)


@settings(max_examples=300, deadline=None)
@given(instances(), st.integers(0, 2**32))
def test_random_strategy_is_sound_and_reproducible(instance, seed):
    script, cluster, trace = instance
    a = simulate(script, cluster, trace, strategy=SeededRandom(seed))
    b = simulate(script, cluster, trace, strategy=SeededRandom(seed))
    assert a == b
    assert a.violations == 0
    # the first block with any eligible worker is used, whatever the strategy
    assert oracle.audit(script, cluster, trace, a) == 0


@settings(max_examples=200, deadline=None)
@given(instances())
def test_peak_load_bounded_by_capacity(instance):
    script, cluster, trace = instance
    report = simulate(script, cluster, trace)
    if cluster.capacity is not None:
        assert all(n <= cluster.capacity for n in report.peak.values())
    assert sum(report.peak.values()) <= len(report.placements)


def _never_colocated(report, trace, pairs):
    spans = [(p.worker, p.fn, p.time, p.time + d) for p, d in zip(report.placements, _durations(report, trace))]
    for i, (w1, f1, s1, e1) in enumerate(spans):
        for w2, f2, s2, e2 in spans[i + 1 :]:
            if w1 == w2 and (f1, f2) in pairs and s1 < e2 and s2 < e1:
                return False
    return True


def _durations(report, trace):
    # match placements back to their events, in order
    remaining = list(trace.events)
    out = []
    for p in report.placements:
        k = next(i for i, e in enumerate(remaining) if e.time == p.time and e.fn == p.fn)
        out.append(remaining.pop(k).duration)
    return out


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 6), st.floats(0.5, 10), st.floats(0.5, 10))
def test_synthesized_policy_is_sound(n, d, delay):
    training = parse(data_file("training.chor"))
    policy = parse_app(data_file("training.app"))
    cluster = parse_cluster(data_file("two-groups.cluster"))
    trace = generate_trace(training, n, d, delay)
    report = simulate(policy, cluster, trace)
    groups = {w.id: w.group for w in cluster.workers}
    assert report.violations == 0
    for p in report.placements:
        if p.fn == "f":
            assert groups[p.worker] == "group1"
        if p.fn == "h":
            assert groups[p.worker] == "group2"
    anti = {(a, b) for a, b in [("f", "g"), ("g", "g"), ("h", "g")] for a, b in [(a, b), (b, a)]}
    assert _never_colocated(report, trace, anti)
