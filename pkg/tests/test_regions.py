import random
from fractions import Fraction as F

import pytest

from diagcheck import Edge, Guard, TimedAutomaton, TRUE, as_timed
from diagcheck.oracle import OracleRefused, bounded_concrete_reach
from diagcheck.randgen import random_ta
from diagcheck.regions import (
    DELAY,
    build_region_graph,
    concretize,
    discrete_successor,
    max_constants,
    region_bound,
    region_of,
    time_successor,
)

from conftest import FAULT_A_TAU_B


def one_clock(K=1, inv=TRUE, edges=()):
    return TimedAutomaton({"l"}, "l", {"x"}, set(), tuple(edges), {"l": inv})


def r1(v, K=1):
    return region_of({"x": F(v)}, {"x": K})


def test_max_constants(a3):
    assert max_constants(a3) == {"x": 6}
    assert max_constants(as_timed(FAULT_A_TAU_B)) == {}
    e = (Edge("l", "a", "l", Guard.of(("x", "<", 2))), Edge("l", "b", "l", Guard.of(("x", ">=", 5), ("y", "==", 1))))
    a = TimedAutomaton({"l"}, "l", {"x", "y"}, {"a", "b"}, e)
    assert max_constants(a) == {"x": 5, "y": 1}


def test_time_successor_one_clock():
    K = {"x": 1}
    assert time_successor(r1(0), K) == r1(F(1, 2))
    assert time_successor(r1(F(1, 2)), K) == r1(1)
    assert time_successor(r1(1), K) == r1(2)
    assert r1(2).int_of["x"] is None
    assert time_successor(r1(2), K) == r1(2)


def test_time_successor_two_clocks():
    K = {"x": 2, "y": 2}
    r = region_of({"x": F(1, 3), "y": F(3, 2)}, K)
    nxt = time_successor(r, K)
    assert nxt == region_of({"x": F(1, 2), "y": F(2)}, K)


def test_time_successor_reaches_fixpoint():
    K = {"x": 2, "y": 1, "z": 1}
    for vals in ((0, 0, 0), (F(1, 3), F(1, 2), 1), (F(3, 2), 0, F(1, 4))):
        r = region_of(dict(zip("xyz", map(F, vals))), K)
        for _ in range(40):
            assert r.is_canonical()
            r = time_successor(r, K)
        assert all(n is None for _, n in r.ints)


def test_discrete_successor_on_the_fault_edge(a3):
    e_f = next(e for e in a3.edges if e.label == "f")
    assert discrete_successor(a3, ("l1", r1(F(7, 2), 6)), e_f) == ("l2", r1(F(7, 2), 6))
    assert discrete_successor(a3, ("l1", r1(3, 6)), e_f) is None
    e_a = next(e for e in a3.edges if e.label == "a")
    assert discrete_successor(a3, ("l0", r1(F(5, 2), 6)), e_a) == ("l1", r1(0, 6))


def test_clockless_region_graph():
    a = as_timed(FAULT_A_TAU_B)
    rg = build_region_graph(a)
    assert len(rg) == len(a.locations)
    delays = [(s, d) for s, tag, d in rg.graph.edges if tag == DELAY]
    assert sorted(delays) == sorted((s, s) for s in rg.states)


def test_single_clock_regions():
    rg = build_region_graph(one_clock(), K={"x": 1}, reduce_inactive=False)
    assert {str(r) for _, r in rg.states} == {"x=0", "0<x<1", "x=1", "x>K"}
    # the clock is never tested, so the reduced graph forgets it
    assert len(build_region_graph(one_clock(), K={"x": 1})) == 1


def test_invariant_prunes_regions():
    a = one_clock(inv=Guard.of(("x", "<=", 1)))
    assert {str(r) for _, r in build_region_graph(a).states} == {"x=0", "0<x<1", "x=1"}


def test_every_location_of_a3_is_reachable(a3):
    assert build_region_graph(a3).locations_reached() == a3.locations


def test_region_count_bound(a3):
    for a in [a3] + [random_ta(random.Random(s), 4, 2, 2) for s in range(60)]:
        rg = build_region_graph(a, reduce_inactive=False)
        assert len(rg) <= region_bound(a, rg.K)
        assert all(r.is_canonical() for _, r in rg.states)


def test_inactive_clock_reduction_keeps_locations():
    for s in range(60):
        a = random_ta(random.Random(s), 4, 2, 2)
        small, full = build_region_graph(a), build_region_graph(a, reduce_inactive=False)
        assert small.locations_reached() == full.locations_reached()
        assert len(small) <= len(full)


def test_stop_predicate_ends_exploration(a3):
    rg = build_region_graph(a3, stop=lambda s: s[0] == "l1")
    assert not rg.complete
    assert "l1" in rg.locations_reached()


# -- concrete simulation ------------------------------------------------------------


def test_bounded_reach_examples(a3):
    locs = {l for l, _ in bounded_concrete_reach(a3, 10)}
    assert {"l3", "l5"} <= locs
    assert bounded_concrete_reach(a3, 0) == {("l0", region_of({"x": F(0)}, {"x": 6}))}


def test_bounded_reach_without_enabled_edges():
    a = TimedAutomaton({"l0", "l1"}, "l0", {"x"}, {"a"},
                       (Edge("l0", "a", "l1", Guard.of(("x", ">", 1))),), {"l0": Guard.of(("x", "<=", 1))})
    reached = bounded_concrete_reach(a, 6)
    assert {l for l, _ in reached} == {"l0"}
    assert {str(r) for _, r in reached} == {"x=0", "0<x<1", "x=1"}


def test_bounded_reach_refuses_out_of_caps(a3):
    with pytest.raises(OracleRefused):
        bounded_concrete_reach(a3, 11)


def test_simulation_is_covered_by_region_graph():
    for s in range(120):
        a = random_ta(random.Random(3000 + s), 4, 2, 2)
        rg = set(build_region_graph(a, reduce_inactive=False).states)
        assert bounded_concrete_reach(a, 8) <= rg, s


# -- concretization -----------------------------------------------------------------


def test_random_region_paths_concretize():
    for s in range(150):
        rng = random.Random(s)
        a = random_ta(rng, 4, 2, 2)
        rg = build_region_graph(a)
        path, cur = [], rg.graph.initial
        for _ in range(rng.randint(0, 12)):
            out = rg.graph.out[cur]
            if not out:
                break
            e = rng.choice(out)
            path.append(e)
            cur = e[2]
        run = concretize(a, rg.K, path)
        states = run.replay(a)
        assert states[-1][0] == cur[0]
        active = [x for x, _ in cur[1].ints]
        assert region_of(states[-1][1], rg.K, active) == cur[1]
