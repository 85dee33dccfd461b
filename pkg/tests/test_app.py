import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faaschal import data_file, emit_app, extract, parse, parse_app, synthesize
from faaschal.app import (
    WILDCARD,
    Affinity,
    AppError,
    AppScript,
    Block,
    Polarity,
    UnreachableService,
    affinity_sets,
    candidate_groups,
)
from faaschal.deployment import Constraints, Topology
from faaschal.locality import CallLocality, LocalitySet, Multiplicity

from strategies import constraints, scripts

A, X = Polarity.AFFINE, Polarity.ANTI_AFFINE


def aff(text):
    return tuple(Affinity(t.lstrip("!"), X if t.startswith("!") else A) for t in text.split())


REFERENCE_POLICY = AppScript(
    (
        ("f", (Block("group1", aff("f !g")), Block("group1", aff("!g")))),
        ("g", (Block(WILDCARD, aff("!f !g !h")),)),
        ("h", (Block("group2", aff("h !g")), Block("group2", aff("!g")))),
    )
)


def normalize(text):
    return [" ".join(line.split()) for line in text.splitlines() if line.strip()]


@pytest.fixture
def training_loc(training):
    return extract(training)


def test_candidate_groups(training_loc, deployment):
    topo, _ = deployment
    assert candidate_groups("f", training_loc, topo) == ["group1"]
    assert candidate_groups("g", training_loc, topo) is WILDCARD
    assert candidate_groups("h", training_loc, topo) == ["group2"]


def test_unreachable_store(training_loc):
    topo = Topology({("DB1", "group2"): 10, ("DB2", "group1"): 10})
    with pytest.raises(UnreachableService) as info:
        candidate_groups("f", training_loc, topo)
    assert info.value.fn == "f"
    assert ("DB1", "group1") in info.value.missing


def test_affinity_sets(training_loc, deployment):
    _, cons = deployment
    assert affinity_sets("f", training_loc, cons) == (["f"], ["g"])
    assert affinity_sets("g", training_loc, cons) == ([], ["f", "g", "h"])
    # g is h's code partner, but the constraint wins
    assert affinity_sets("h", training_loc, cons) == (["h"], ["g"])


def test_synthesis_reproduces_reference_policy(training, deployment):
    topo, cons = deployment
    assert synthesize(extract(training), topo, cons, training.stateless) == REFERENCE_POLICY


def test_emitted_policy_matches_reference_text(training, deployment):
    topo, cons = deployment
    text = emit_app(synthesize(extract(training), topo, cons, training.stateless))
    assert normalize(text) == normalize(data_file("training.app"))


def test_parse_reference_text():
    script = parse_app(data_file("training.app"))
    assert script == REFERENCE_POLICY
    assert [len(script.blocks(t)) for t in script.tags] == [2, 1, 2]
    assert script.blocks("g")[0].anti_affine == ["f", "g", "h"]


@pytest.mark.parametrize(
    "text, message",
    [
        ("f:\n  - workers: *\n    strategy: random\n", "unsupported key"),
        ("f:\n  - affinity: g\n", "missing 'workers'"),
        ("f:\n  - workers: *\n    affinity: g, ?h\n", "malformed affinity token"),
        ("f:\n  - workers: *\n    affinity: g, !g\n", "appears twice"),
        ("f:\n  - workers: *\nf:\n  - workers: *\n", "duplicate tag"),
        ("f:\n", "has no blocks"),
        ("  - workers: *\n", "block before any tag"),
        ("f:\n  - workers: *\n    workers: a\n", "duplicate key"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(AppError) as info:
        parse_app(text)
    assert message in info.value.message


def test_single_function_without_localities():
    loc = LocalitySet(fn_order=("f",))
    script = synthesize(loc, Topology({("S", "a"): 1}), Constraints(), ["f"])
    assert script == AppScript((("f", (Block(WILDCARD),)),))
    assert emit_app(script) == "f:\n  - workers: *\n"


def test_two_functions_sharing_a_module():
    # a and b import from the same module; a reads D, reachable from both groups
    source = (
        "stateful: u\nstateless: a{ G }, b{ M }\nservices: D{ get }\n"
        "import Lib::x as x@a\nimport Lib::y as y@b\n\n"
        "def main( q@u )\n  q@u <-G-> a do | v@a |\n"
        "    v@a <-> D: get ▶ x ▶ -M-> b ▶ y\n  end\nend\n"
    )
    topo = Topology({("D", "fast"): 90, ("D", "slow"): 10, ("M", "fast"): 5, ("M", "slow"): 50})
    script = synthesize(extract(parse(source)), topo, Constraints(), ["a", "b"])
    assert script.blocks("a") == (
        Block("fast", aff("a b")),
        Block("slow", aff("a b")),
        Block("fast"),
        Block("slow"),
    )
    # b has no store: media speed decides, and any worker remains acceptable
    assert script.blocks("b") == (
        Block("slow", aff("a")),
        Block("fast", aff("a")),
        Block(WILDCARD, aff("a")),
        Block("slow"),
        Block("fast"),
        Block(WILDCARD),
    )


# -- properties ----------------------------------------------------------------

FNS = ["a", "b", "c", "d"]
SERVICES = ["DB1", "DB2"]


@st.composite
def localities(draw):
    data = draw(st.sets(st.tuples(st.sampled_from(FNS), st.sampled_from(SERVICES))))
    call = draw(
        st.sets(
            st.builds(
                CallLocality,
                st.sampled_from(FNS),
                st.sampled_from(FNS),
                st.sampled_from(["SNS", "Gateway"]),
                st.sampled_from(list(Multiplicity)),
            ),
            max_size=4,
        )
    )
    pairs = draw(st.sets(st.sets(st.sampled_from(FNS), min_size=2, max_size=2).map(frozenset), max_size=3))
    return LocalitySet(frozenset(data), frozenset(call), frozenset(pairs), fn_order=tuple(FNS))


full_topologies = st.fixed_dictionaries(
    {(e, g): st.integers(1, 100) for e in SERVICES + ["SNS", "Gateway"] for g in ["g1", "g2", "g3"]}
).map(Topology)


@settings(max_examples=300, deadline=None)
@given(localities(), full_topologies, constraints)
def test_constraints_take_priority(loc, topo, cons):
    script = synthesize(loc, topo, cons, FNS)
    for fn, blocks in script.entries:
        for block in blocks:
            assert sorted(block.anti_affine) == cons.partners(fn)
            assert not set(block.affine) & set(block.anti_affine)
            assert all(not cons.contains(fn, t) for t in block.affine)


@settings(max_examples=300, deadline=None)
@given(localities(), full_topologies, constraints)
def test_every_fn_has_a_bootstrap_block(loc, topo, cons):
    # an instance can always start without affine partners already running
    script = synthesize(loc, topo, cons, FNS)
    for fn, blocks in script.entries:
        assert any(not b.affine for b in blocks)
        assert blocks[-1].affine == []


@settings(max_examples=300, deadline=None)
@given(localities(), st.dictionaries(st.tuples(st.sampled_from(SERVICES), st.sampled_from(["g1", "g2"])),
                                      st.integers(1, 100), min_size=1).map(Topology))
def test_blocks_only_name_groups_reaching_every_store(loc, topo):
    try:
        script = synthesize(loc, topo, Constraints(), FNS)
    except UnreachableService as exc:
        assert any(not topo.reaches(s, g) for s, g in exc.missing)
        return
    for fn, blocks in script.entries:
        for b in blocks:
            if b.workers is not WILDCARD:
                assert all(topo.reaches(s, b.workers) for s in loc.services_of(fn))
            else:
                assert loc.services_of(fn) == []


@settings(max_examples=200, deadline=None)
@given(localities(), full_topologies, constraints, st.permutations(FNS))
def test_order_only_permutes_entries(loc, topo, cons, order):
    base = dict(synthesize(loc, topo, cons, FNS).entries)
    shuffled = synthesize(loc, topo, cons, order)
    assert shuffled.tags == order
    assert dict(shuffled.entries) == base


@settings(max_examples=300, deadline=None)
@given(scripts())
def test_app_round_trip(script):
    assert parse_app(emit_app(script)) == script
