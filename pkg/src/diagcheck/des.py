"""Fault diagnosis for discrete-event systems given as finite automata.

The plant is paired with itself: a left copy that may take the fault (and
remembers it) and a right copy from which the fault transitions are removed.
Both copies synchronize on observable events, so every joint run is a pair of
plant runs with the same observable trace.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .automata import (
    TAU,
    FaRun,
    FiniteAutomaton,
    ModelError,
    complete_deadlocks,
    select_fault,
)
from .buchi import AnalysisGraph, LassoWitness, check_buchi_emptiness, check_final_emptiness

NO_FAULT = -1


@dataclass(frozen=True)
class Twin:
    """Joint state space of the faulty and fault-free copies.

    Nodes are ``(left, right)`` for the bounded twin, with ``left = (q, counter)``,
    and ``(left, right, z)`` for the Büchi twin, with ``left = (q, flag)``.  Edge
    tags are ``(label, left_transition, right_transition)``; the transitions are
    triples of the plant (``None`` when that copy idles).
    """

    plant: FiniteAutomaton
    fault: str | None
    graph: AnalysisGraph

    def to_automaton(self) -> FiniteAutomaton:
        name = {n: _node_name(n) for n in self.graph.nodes}
        return FiniteAutomaton(
            set(name.values()),
            name[self.graph.initial],
            self.plant.events,
            {(name[s], tag[0], name[d]) for s, tag, d in self.graph.edges},
            frozenset(),
            {name[n] for n in self.graph.final},
            {name[n] for n in self.graph.repeated},
        )


def _node_name(node) -> str:
    (q, n), q2, *z = node
    out = f"{q}:{n}|{q2}"
    return out + (f"|z{z[0]}" if z else "")


@dataclass(frozen=True)
class DiagVerdict:
    diagnosable: bool
    fault: str | None = None
    delta: int | None = None
    bound_used: int | None = None
    witness: tuple[FaRun, FaRun] | None = None
    lasso: LassoWitness | None = None
    path: tuple | None = None


def prepare(a: FiniteAutomaton, fault: str | None = None, complete: bool = True):
    """Return ``(plant, fault)``: the plant completed and the analysed fault label."""
    fault = select_fault(a.faults, a.used_faults(), fault)
    if complete:
        a = complete_deadlocks(a)
    return a, fault


def _left_moves(a: FiniteAutomaton, fault, q):
    """(label seen by the product, plant transition, is_fault) for the faulty copy."""
    for lab, dst in a.successors[q]:
        if lab == fault:
            yield TAU, (q, lab, dst), True
        elif a.kind(lab) == "obs":
            yield lab, (q, lab, dst), False
        else:
            yield TAU, (q, lab, dst), False


def _right_moves(a: FiniteAutomaton, fault, q):
    for lab, dst in a.successors[q]:
        if lab == fault:
            continue
        yield (lab if a.kind(lab) == "obs" else TAU), (q, lab, dst)


def _twin_steps(a, fault, q1, q2):
    """Joint moves ``(label, t1, t2, is_fault)`` from the plant pair ``(q1, q2)``."""
    right = list(_right_moves(a, fault, q2))
    for lab, t1, is_fault in _left_moves(a, fault, q1):
        if lab == TAU:
            yield TAU, t1, None, is_fault
        else:
            for lab2, t2 in right:
                if lab2 == lab:
                    yield lab, t1, t2, False
    for lab2, t2 in right:
        if lab2 == TAU:
            yield TAU, None, t2, False


def _explore(initial, step):
    nodes = [initial]
    seen = {initial}
    edges = []
    todo = deque([initial])
    while todo:
        cur = todo.popleft()
        for tag, nxt in step(cur):
            edges.append((cur, tag, nxt))
            if nxt not in seen:
                seen.add(nxt)
                nodes.append(nxt)
                todo.append(nxt)
    return nodes, edges


def build_delta_twin(a: FiniteAutomaton, delta: int, fault: str | None = None, complete: bool = True) -> Twin:
    """Twin whose final nodes witness a run with ``delta`` steps after the fault.

    The faulty copy counts steps since the fault (``-1`` before it), saturating
    at ``delta``; a joint run reaching counter ``delta`` pairs a ``delta``-faulty
    run with a non-faulty one of the same trace.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    a, fault = prepare(a, fault, complete)

    def step(node):
        (q1, n), q2 = node
        for lab, t1, t2, is_fault in _twin_steps(a, fault, q1, q2):
            if t1 is None:
                n2 = n
            elif is_fault or n != NO_FAULT:
                n2 = min(n + 1, delta)
            else:
                n2 = n
            yield (lab, t1, t2), ((t1[2] if t1 else q1, n2), t2[2] if t2 else q2)

    initial = ((a.initial, NO_FAULT), a.initial)
    nodes, edges = _explore(initial, step)
    final = {nd for nd in nodes if nd[0][1] == delta}
    return Twin(a, fault, AnalysisGraph(nodes, initial, edges, final=final))


def build_buchi_twin(a: FiniteAutomaton, fault: str | None = None, complete: bool = True) -> Twin:
    """Twin with the fault flag and the bit recording whether the faulty copy just moved."""
    a, fault = prepare(a, fault, complete)

    def step(node):
        (q1, flag), q2, _ = node
        for lab, t1, t2, is_fault in _twin_steps(a, fault, q1, q2):
            left = (t1[2], 1 if is_fault else flag) if t1 else (q1, flag)
            yield (lab, t1, t2), (left, t2[2] if t2 else q2, int(t1 is not None))

    initial = ((a.initial, 0), a.initial, 0)
    nodes, edges = _explore(initial, step)
    repeated = {nd for nd in nodes if nd[0][1] == 1 and nd[2] == 1}
    return Twin(a, fault, AnalysisGraph(nodes, initial, edges, repeated=repeated))


def diagnosability_bound(a: FiniteAutomaton) -> int:
    """Delay that suffices for every diagnosable plant: ``2 * |Q|**2``."""
    return 2 * len(a.states) ** 2


def runs_from_path(twin: Twin, path) -> tuple[FaRun, FaRun]:
    """Split a joint path into the faulty (left) and non-faulty (right) plant runs."""
    a = twin.plant
    runs = []
    for side in (1, 2):
        states, labels = [a.initial], []
        for _, tag, _ in path:
            t = tag[side]
            if t is not None:
                labels.append(t[1])
                states.append(t[2])
        runs.append(FaRun(tuple(states), tuple(labels)))
    return runs[0], runs[1]


def _post_fault_left_moves(path, fault) -> int:
    count, seen = 0, False
    for _, tag, _ in path:
        t1 = tag[1]
        if t1 is None:
            continue
        if seen:
            count += 1
        elif t1[1] == fault:
            seen = True
    return count


def unroll_for(twin: Twin, lasso: LassoWitness, at_least: int):
    """Unroll ``lasso`` until the faulty run has more than ``at_least`` post-fault steps."""
    times = 1
    while _post_fault_left_moves(lasso.unroll(times), twin.fault) <= at_least:
        times += 1
    return lasso.unroll(times)


def check_diagnosable(a: FiniteAutomaton, fault: str | None = None, complete: bool = True) -> DiagVerdict:
    twin = build_buchi_twin(a, fault, complete)
    bound = diagnosability_bound(a)
    lasso = check_buchi_emptiness(twin.graph)
    if lasso is None:
        return DiagVerdict(True, twin.fault, bound_used=bound)
    path = unroll_for(twin, lasso, bound)
    return DiagVerdict(False, twin.fault, bound_used=bound, witness=runs_from_path(twin, path), lasso=lasso)


def check_delta_diagnosable(
    a: FiniteAutomaton,
    delta: int,
    fault: str | None = None,
    complete: bool = True,
    shortcut: bool = True,
) -> DiagVerdict:
    """Is every fault announced within ``delta`` steps?

    With ``shortcut`` set, ``delta >= 2|Q|^2`` is answered by the Büchi check,
    which is equivalent at that range and cheaper.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if shortcut and delta >= diagnosability_bound(a):
        v = check_diagnosable(a, fault, complete)
        if v.diagnosable:
            return DiagVerdict(True, v.fault, delta, v.bound_used)
        twin = build_buchi_twin(a, fault, complete)
        path = unroll_for(twin, v.lasso, delta)
        return DiagVerdict(False, v.fault, delta, delta, runs_from_path(twin, path), v.lasso)
    twin = build_delta_twin(a, delta, fault, complete)
    path = check_final_emptiness(twin.graph)
    if path is None:
        return DiagVerdict(True, twin.fault, delta, delta)
    return DiagVerdict(False, twin.fault, delta, delta, runs_from_path(twin, path), path=path)


def max_delay(a: FiniteAutomaton, fault: str | None = None, complete: bool = True) -> int | None:
    """Least ``delta`` for which the plant is ``delta``-diagnosable; ``None`` if never."""
    if not check_diagnosable(a, fault, complete).diagnosable:
        return None
    lo, hi = 0, diagnosability_bound(a)
    while lo < hi:
        mid = (lo + hi) // 2
        if check_delta_diagnosable(a, mid, fault, complete).diagnosable:
            hi = mid
        else:
            lo = mid + 1
    return lo


def isolate_fault(a: FiniteAutomaton, fault: str) -> FiniteAutomaton:
    """Keep ``fault`` as the only fault; every other fault label becomes ``tau``."""
    if fault not in a.faults:
        raise ModelError(f"{fault!r} is not a declared fault label", "unknown-label")
    others = {f: TAU for f in a.faults if f != fault}
    return a.relabel(others, faults={fault})


def multi_fault(a: FiniteAutomaton, complete: bool = True, workers: int | None = None) -> dict[str, DiagVerdict]:
    """One diagnosability verdict per declared fault label."""
    if not a.faults:
        raise ModelError("the model declares no fault label", "no-fault")
    labels = sorted(a.faults)

    def one(f):
        return check_diagnosable(isolate_fault(a, f), f, complete)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return dict(zip(labels, pool.map(one, labels)))
    return {f: one(f) for f in labels}
