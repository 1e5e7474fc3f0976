"""Seeded random plants and graphs for property tests and the acceptance suite."""

from __future__ import annotations

import random

from .automata import TAU, ClockAtom, Edge, FiniteAutomaton, Guard, TimedAutomaton
from .buchi import AnalysisGraph

EVENT_POOL = ("a", "b", "c")


def random_fa(
    rng: random.Random,
    max_states: int = 6,
    max_events: int = 3,
    branching: float = 1.6,
    fault_density: float = 0.15,
    tau_density: float = 0.15,
    force_fault: float = 0.85,
) -> FiniteAutomaton:
    n = rng.randint(1, max_states)
    states = [f"q{i}" for i in range(n)]
    events = EVENT_POOL[: rng.randint(1, max_events)]
    trans = set()
    for q in states:
        for _ in range(max(1, round(rng.expovariate(1 / branching)))):
            r = rng.random()
            if r < fault_density:
                lab = "f"
            elif r < fault_density + tau_density:
                lab = TAU
            else:
                lab = rng.choice(events)
            trans.add((q, lab, rng.choice(states)))
    if rng.random() < force_fault and not any(l == "f" for _, l, _ in trans):
        trans.add((rng.choice(states), "f", rng.choice(states)))
    return FiniteAutomaton(set(states), "q0", set(events), trans)


def _random_guard(rng, clocks, K, upper_only=False) -> Guard:
    atoms = []
    for x in clocks:
        if rng.random() < 0.5:
            ops = ("<", "<=") if upper_only else ("<", "<=", "==", ">=", ">")
            op = rng.choice(ops)
            low = 1 if op == "<" else 0
            atoms.append(ClockAtom(x, op, rng.randint(low, K)))
    return Guard(tuple(atoms))


def random_ta(
    rng: random.Random,
    max_locations: int = 3,
    max_clocks: int = 1,
    K: int = 3,
    fault_density: float = 0.2,
    tau_density: float = 0.2,
    invariant_density: float = 0.3,
    with_faults: bool = True,
) -> TimedAutomaton:
    n = rng.randint(1, max_locations)
    locs = [f"l{i}" for i in range(n)]
    clocks = ["x", "y"][: rng.randint(1, max_clocks)]
    events = ("a", "b")
    invariants = {}
    for loc in locs[1:]:
        if rng.random() < invariant_density:
            g = _random_guard(rng, clocks, K, upper_only=True)
            if g.atoms:
                invariants[loc] = g
    edges = {}
    for loc in locs:
        for _ in range(rng.randint(1, 2)):
            r = rng.random()
            if with_faults and r < fault_density:
                lab = "f"
            elif r < fault_density + tau_density:
                lab = TAU
            else:
                lab = rng.choice(events)
            resets = frozenset(x for x in clocks if rng.random() < 0.4)
            e = Edge(loc, lab, rng.choice(locs), _random_guard(rng, clocks, K), resets)
            edges[e.sort_key()] = e
    return TimedAutomaton(set(locs), "l0", set(clocks), set(events), tuple(edges.values()), invariants)


def random_graph(rng: random.Random, max_nodes: int = 200, density: float | None = None) -> AnalysisGraph:
    n = rng.randint(1, max_nodes)
    if density is None:
        density = rng.choice((0.5, 1.0, 1.5, 2.5)) / n
    edges = set()
    for i in range(n):
        for j in range(n):
            if rng.random() < density:
                edges.add((i, None, j))
    k = rng.choice((0, 1, 2, max(1, n // 10)))
    repeated = rng.sample(range(n), min(k, n))
    return AnalysisGraph(range(n), 0, sorted(edges), repeated=repeated)
