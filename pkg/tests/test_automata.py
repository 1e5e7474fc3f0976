import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from diagcheck import (
    TAU,
    ClockAtom,
    Edge,
    FaRun,
    FiniteAutomaton,
    Guard,
    ModelError,
    ReplayError,
    TaRun,
    TimedAutomaton,
    TimedWord,
    complete_deadlocks,
    product,
    project,
    untime,
)
from diagcheck.randgen import random_fa, random_ta
from diagcheck.timed import build_div

from conftest import fa

F = Fraction


# -- timed words --------------------------------------------------------------


def test_untime_drops_durations():
    assert untime(TimedWord.parse(0.4, "a", 1.0, "b", 2.7, "c")) == ("a", "b", "c")
    assert untime(TimedWord()) == ()
    assert untime(TimedWord.parse(5.0)) == ()


def test_project_keeps_elapsed_time():
    w = TimedWord.parse(0.4, "a", 1.0, "b", 2.7, "c")
    assert project(w, {"a", "c"}) == TimedWord.parse(F(2, 5), "a", F(37, 10), "c")
    assert project(w, {"a", "b", "c"}) == w
    assert project(TimedWord.parse(0.4, "a", 1.0, "b"), set()) == TimedWord.parse(F(7, 5))


def test_negative_duration_rejected():
    with pytest.raises(ValueError):
        TimedWord(((F(-1), "a"),))


labels = st.sampled_from("abcd")
durations = st.fractions(min_value=0, max_value=10, max_denominator=12)
words = st.builds(
    lambda steps, tail: TimedWord(tuple(steps), tail),
    st.lists(st.tuples(durations, labels), max_size=8),
    durations,
)
alphabets = st.frozensets(labels)


@given(words, alphabets)
def test_projection_conserves_duration(w, keep):
    assert project(w, keep).duration() == w.duration()


@given(words, alphabets)
def test_projection_commutes_with_untime(w, keep):
    assert untime(project(w, keep)) == tuple(l for l in untime(w) if l in keep)


@given(words, alphabets, alphabets)
def test_projection_composes(w, s, s2):
    s2 = s2 & s
    assert project(project(w, s), s2) == project(w, s & s2)


# -- guards and validation ------------------------------------------------------


def test_guard_semantics():
    g = Guard.of(("x", "<", 2), ("y", ">=", 1))
    assert g.holds({"x": F(3, 2), "y": F(1)})
    assert not g.holds({"x": F(2), "y": F(1)})
    assert str(g) == "x<2&&y>=1"
    assert str(Guard()) == "true"
    assert Guard.of(("x", "==", 1)).holds({"x": F(1)})


def test_negative_bound_rejected():
    with pytest.raises(ValueError):
        ClockAtom("x", "<", -1)


def _ta(**kw):
    base = dict(locations={"l0", "l1"}, initial="l0", clocks={"x"}, events={"a"},
                edges=(Edge("l0", "a", "l1"),))
    base.update(kw)
    return TimedAutomaton(**base)


@pytest.mark.parametrize(
    "kw, code",
    [
        (dict(invariants={"l1": Guard.of(("x", ">", 1))}), "bad-invariant"),
        (dict(invariants={"l0": Guard.of(("x", "<", 0))}), "vacuous-model"),
        (dict(edges=(Edge("l0", "b", "l1"),)), "unknown-label"),
        (dict(edges=(Edge("l0", "a", "l9"),)), "unknown-state"),
        (dict(edges=(Edge("l0", "a", "l1", Guard.of(("z", "<", 1))),)), "unknown-clock"),
        (dict(events={"a", "tau"}), "reserved-name"),
        (dict(events={"a", "f"}), "reserved-name"),
        (dict(edges=(Edge("l0", "a", "l1"), Edge("l0", "a", "l1"))), "duplicate"),
    ],
)
def test_timed_automaton_validation(kw, code):
    with pytest.raises(ModelError) as exc:
        _ta(**kw)
    assert exc.value.code == code


def test_finite_automaton_validation():
    with pytest.raises(ModelError):
        FiniteAutomaton({"q0"}, "q1", {"a"}, set())
    with pytest.raises(ModelError):
        FiniteAutomaton({"q0"}, "q0", {"a"}, {("q0", "c", "q0")})


# -- runs and traces ------------------------------------------------------------------


def test_fa_trace_erases_fault_and_tau():
    a = fa([("q0", "f", "q1"), ("q1", "a", "q2")])
    run = FaRun(("q0", "q1", "q2"), ("f", "a"))
    assert run.trace(a) == ("a",)
    assert run.steps_after_fault(a.faults) == 1
    assert FaRun(("q0",)).trace(a) == ()


def test_fa_replay_rejects_missing_transition():
    a = fa([("q0", "a", "q1")])
    with pytest.raises(ReplayError):
        FaRun(("q0", "q1"), ("b",)).replay(a)


def test_ta_trace_folds_delays():
    ef, eb = Edge("l0", "f", "l1"), Edge("l1", "b", "l2")
    a = TimedAutomaton({"l0", "l1", "l2"}, "l0", {"x"}, {"b"}, (ef, eb))
    run = TaRun((F(5, 2), ef, F(1, 5), eb))
    assert run.trace(a) == TimedWord(((F(27, 10), "b"),))
    assert run.duration_after_fault(a.faults) == F(1, 5)


def test_ta_trace_of_silent_run_is_empty():
    e = Edge("l0", TAU, "l0")
    a = TimedAutomaton({"l0"}, "l0", set(), set(), (e,))
    assert TaRun((e, F(1), e)).trace(a).labels() == ()


def test_ta_replay_checks_guard_and_invariant(a3):
    e_a, e_f = a3.out_edges["l0"][0], next(e for e in a3.out_edges["l1"] if e.label == "f")
    TaRun((F(1), e_a, F(4), e_f)).replay(a3)
    with pytest.raises(ReplayError, match="guard"):
        TaRun((e_a, F(3), e_f)).replay(a3)
    with pytest.raises(ReplayError, match="invariant"):
        TaRun((e_a, F(7))).replay(a3)


def _random_walk(a: TimedAutomaton, rng, steps):
    moves, loc, val = [], a.initial, {x: F(0) for x in a.clocks}
    for _ in range(steps):
        if rng.random() < 0.5:
            d = F(rng.randint(0, 4), 2)
            v2 = {x: v + d for x, v in val.items()}
            if a.invariant(loc).holds(v2):
                moves.append(d)
                val = v2
            continue
        enabled = [e for e in a.out_edges[loc] if e.guard.holds(val)
                   and a.invariant(e.dst).holds({x: (F(0) if x in e.resets else v) for x, v in val.items()})]
        if enabled:
            e = rng.choice(enabled)
            moves.append(e)
            val = {x: (F(0) if x in e.resets else v) for x, v in val.items()}
            loc = e.dst
    return TaRun(tuple(moves)), loc, val


def test_replay_accepts_random_walks():
    for seed in range(200):
        rng = random.Random(seed)
        a = random_ta(rng, max_locations=4, max_clocks=2, K=2)
        run, loc, val = _random_walk(a, rng, 12)
        states = run.replay(a)
        assert states[-1] == (loc, val)
        for (l, v), nxt in zip(states, run.moves):
            if not isinstance(nxt, Edge):
                assert a.invariant(l).holds({x: t + nxt for x, t in v.items()})


# -- deadlock completion ---------------------------------------------------------------


def test_complete_deadlocks():
    a = fa([("q0", "a", "d")])
    assert complete_deadlocks(a).transitions == a.transitions | {("d", TAU, "d")}
    b = fa([("q0", "a", "q0")])
    assert complete_deadlocks(b) is b
    lone = FiniteAutomaton({"q"}, "q", set(), set())
    assert complete_deadlocks(lone).transitions == {("q", TAU, "q")}


def test_complete_deadlocks_idempotent():
    for seed in range(100):
        a = random_fa(random.Random(seed))
        once = complete_deadlocks(a)
        assert complete_deadlocks(once) == once


# -- product ---------------------------------------------------------------------------


def test_product_with_neutral_automaton():
    a = fa([("q0", "a", "q1"), ("q1", "b", "q0")])
    unit = FiniteAutomaton({"u"}, "u", {"c"}, set())
    p = product(a, unit)
    assert p.states == {"q0|u", "q1|u"}
    assert p.transitions == {("q0|u", "a", "q1|u"), ("q1|u", "b", "q0|u")}


def test_product_synchronizes_shared_label():
    p = product(fa([("p0", "a", "p1")], initial="p0"), fa([("r0", "a", "r1")], initial="r0"))
    assert p.transitions == {("p0|r0", "a", "p1|r1")}


def test_product_of_two_div_gadgets():
    p = product(build_div("x"), build_div("y"))
    assert len(p.locations) == 4
    assert p.invariant("0|1") == Guard.of(("x", "<=", 1), ("y", "<=", 1))


def test_product_rejects_clock_clash():
    with pytest.raises(ModelError) as exc:
        product(build_div("x"), build_div("x"))
    assert exc.value.code == "clock-clash"


def test_product_keeps_full_grid_on_request():
    a = fa([("p0", "a", "p1")], initial="p0")
    b = fa([("r0", "b", "r1")], initial="r0")
    assert len(product(a, b, prune=False).states) == 4


def _traces(a: FiniteAutomaton, depth):
    out, stack = set(), [(a.initial, (), 0)]
    while stack:
        q, tr, n = stack.pop()
        out.add(tr)
        if n < depth:
            for lab, d in a.successors[q]:
                stack.append((d, tr + ((lab,) if lab != TAU else ()), n + 1))
    return out


def test_product_size_and_trace_projection():
    for seed in range(60):
        rng = random.Random(seed)
        a1 = random_fa(rng, max_states=5, max_events=2)
        a2 = random_fa(rng, max_states=5, max_events=3).relabel({"f": TAU}, faults={"g"})
        p = product(a1, a2)
        assert len(p.states) <= len(a1.states) * len(a2.states)
        t1, t2 = _traces(a1, 4), _traces(a2, 4)
        for tr in _traces(p, 4):
            assert tuple(l for l in tr if l in a1.events | a1.faults) in t1
            assert tuple(l for l in tr if l in a2.events | a2.faults) in t2
