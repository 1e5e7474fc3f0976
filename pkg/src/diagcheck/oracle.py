"""Brute-force oracles for testing the diagnosis pipelines.

Nothing here reuses the twin constructions of ``des`` or ``timed``: the
oracles re-derive every answer from the plant with deliberately naive code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as cartesian

from .automata import TAU, FiniteAutomaton, TimedAutomaton
from .buchi import AnalysisGraph, transitive_closure_oracle
from .regions import Region

MAX_STATES_DELTA = 6
MAX_DEPTH = 12
MAX_DELTA = 8
MAX_STATES_DIAG = 10


class OracleRefused(ValueError):
    pass


def _completed_transitions(a: FiniteAutomaton):
    trans = set(a.transitions)
    for q in a.states:
        if not any(s == q for s, _, _ in trans):
            trans.add((q, TAU, q))
    return sorted(trans)


def _is_fault(a, label, fault):
    return label == fault if fault is not None else label in a.faults


@dataclass(frozen=True)
class TraceSets:
    faulty_at_least: dict[int, frozenset[tuple[str, ...]]]
    non_faulty: frozenset[tuple[str, ...]]


def trace_sets(a: FiniteAutomaton, max_delta: int, depth: int, fault: str | None = None) -> TraceSets:
    """Observable traces of every run with at most ``depth`` steps, split by faultiness."""
    trans = _completed_transitions(a)
    faulty = {d: set() for d in range(max_delta + 1)}
    non_faulty = set()
    # stack of (state, trace, steps since first fault or None, length)
    stack = [(a.initial, (), None, 0)]
    while stack:
        q, tr, since, length = stack.pop()
        if since is None:
            non_faulty.add(tr)
        else:
            for d in range(min(since, max_delta) + 1):
                faulty[d].add(tr)
        if length == depth:
            continue
        for s, lab, d in trans:
            if s != q:
                continue
            tr2 = tr + (lab,) if lab in a.events else tr
            if since is not None:
                since2 = since + 1
            elif _is_fault(a, lab, fault):
                since2 = 0
            else:
                since2 = None
            stack.append((d, tr2, since2, length + 1))
    return TraceSets({d: frozenset(v) for d, v in faulty.items()}, frozenset(non_faulty))


def oracle_delta_des(a: FiniteAutomaton, delta: int, depth: int = MAX_DEPTH, fault: str | None = None) -> bool:
    """Are the traces of ``delta``-faulty runs and of non-faulty runs disjoint?

    Observable traces are enumerated up to length ``depth``; for each trace the
    oracle keeps every (state, steps-since-fault) pair a run with that trace can
    end in, closed under unobservable steps.  Traces leading to an already seen
    set of pairs are not extended again.
    """
    if len(a.states) > MAX_STATES_DELTA or depth > MAX_DEPTH or delta > MAX_DELTA:
        raise OracleRefused("oracle caps exceeded")
    trans = _completed_transitions(a)
    NONE = -1

    def bump(c, lab):
        if c == NONE:
            return 0 if _is_fault(a, lab, fault) else NONE
        return min(c + 1, delta)

    def closure(pairs):
        pairs = set(pairs)
        todo = list(pairs)
        while todo:
            q, c = todo.pop()
            for s, lab, d in trans:
                if s == q and lab not in a.events:
                    nxt = (d, bump(c, lab))
                    if nxt not in pairs:
                        pairs.add(nxt)
                        todo.append(nxt)
        return frozenset(pairs)

    def ambiguous(pairs):
        return any(c == delta for _, c in pairs) and any(c == NONE for _, c in pairs)

    start = closure({(a.initial, NONE)})
    seen = {start}
    frontier = [start]
    for length in range(depth + 1):
        nxt_frontier = []
        for pairs in frontier:
            if ambiguous(pairs):
                return False
            if length == depth:
                continue
            for ev in sorted(a.events):
                step = {(d, bump(c, ev)) for q, c in pairs for s, lab, d in trans if s == q and lab == ev}
                if not step:
                    continue
                nxt = closure(step)
                if nxt not in seen:
                    seen.add(nxt)
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
        if not frontier:
            break
    return True


def naive_buchi_twin(a: FiniteAutomaton, fault: str | None = None) -> AnalysisGraph:
    """Flag/bit twin over the full grid of states, built transition by transition."""
    trans = _completed_transitions(a)
    states = sorted(a.states)
    nodes = [(q1, fl, q2, z) for q1, fl, q2, z in cartesian(states, (0, 1), states, (0, 1))]
    edges = []
    for q1, fl, q2, z in nodes:
        for s1, l1, d1 in trans:
            if s1 != q1:
                continue
            if l1 in a.events:
                for s2, l2, d2 in trans:
                    if s2 == q2 and l2 == l1:
                        edges.append(((q1, fl, q2, z), l1, (d1, fl, d2, 1)))
            else:
                fl2 = 1 if _is_fault(a, l1, fault) else fl
                edges.append(((q1, fl, q2, z), TAU, (d1, fl2, q2, 1)))
        for s2, l2, d2 in trans:
            if s2 == q2 and l2 not in a.events and not _is_fault(a, l2, fault):
                edges.append(((q1, fl, q2, z), TAU, (q1, fl, d2, 0)))
    repeated = {n for n in nodes if n[1] == 1 and n[3] == 1}
    return AnalysisGraph(nodes, (a.initial, 0, a.initial, 0), edges, repeated=repeated)


def oracle_diag_des(a: FiniteAutomaton, fault: str | None = None) -> bool:
    if len(a.states) > MAX_STATES_DIAG:
        raise OracleRefused("oracle caps exceeded")
    return not transitive_closure_oracle(naive_buchi_twin(a, fault))


# ---------------------------------------------------------------------------
# timed automata


def _naive_region(val, K) -> Region:
    ints, zero, fr = [], [], {}
    for x in sorted(val):
        v = val[x]
        if v > K[x]:
            ints.append((x, None))
        else:
            n = math.floor(v)
            ints.append((x, n))
            if v == n:
                zero.append(x)
            else:
                fr.setdefault(v - n, []).append(x)
    return Region(tuple(ints), tuple(zero), tuple(tuple(sorted(fr[k])) for k in sorted(fr)))


def _naive_constants(a: TimedAutomaton):
    K = {x: 0 for x in a.clocks}
    for g in [e.guard for e in a.edges] + list(a.invariants.values()):
        for at in g.atoms:
            K[at.clock] = max(K[at.clock], at.bound)
    return K


def bounded_concrete_reach(a: TimedAutomaton, depth: int, delays=(Fraction(0), Fraction(1, 2), Fraction(1))):
    """Regions of all states reached by concrete runs of at most ``depth`` moves."""
    if depth > 10 or len(a.clocks) > 2:
        raise OracleRefused("oracle caps exceeded")
    K = _naive_constants(a)

    def ok(loc, val):
        return all(at.holds(val[at.clock]) for at in a.invariant(loc).atoms)

    start = (a.initial, tuple(sorted((x, Fraction(0)) for x in a.clocks)))
    seen = {start}
    frontier = [start]
    for _ in range(depth):
        nxt = []
        for loc, vals in frontier:
            val = dict(vals)
            cands = []
            for d in delays:
                if d:
                    v2 = {x: v + d for x, v in val.items()}
                    if ok(loc, v2):
                        cands.append((loc, v2))
            for e in a.edges:
                if e.src == loc and all(at.holds(val[at.clock]) for at in e.guard.atoms):
                    v2 = {x: (Fraction(0) if x in e.resets else v) for x, v in val.items()}
                    if ok(e.dst, v2):
                        cands.append((e.dst, v2))
            for l2, v2 in cands:
                key = (l2, tuple(sorted(v2.items())))
                if key not in seen:
                    seen.add(key)
                    nxt.append(key)
        frontier = nxt
    return {(loc, _naive_region(dict(vals), K)) for loc, vals in seen}
