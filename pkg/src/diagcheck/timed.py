"""Fault diagnosis for timed automata through region graphs.

The faulty copy of the plant carries a fault flag in its locations (``"l:0"``
and ``"l:1"``); the fault-free copy runs on renamed clocks.  For the bounded
problem a fresh clock measures the time since the first fault and a ``Bad``
location becomes reachable once it exceeds the delay.  For the unbounded
problem a two-location ticking automaton is added so that only time-divergent
ambiguous runs count.
"""

from __future__ import annotations

from collections import deque
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .automata import (
    TAU,
    Edge,
    Guard,
    ModelError,
    TaRun,
    TimedAutomaton,
    fresh_name,
    pair_name,
    product,
    select_fault,
)
from .buchi import (
    AnalysisGraph,
    LassoWitness,
    check_buchi_emptiness,
    check_final_emptiness,
    strongly_connected_components,
)
from .regions import DELAY, RegionGraph, build_region_graph, concretize, max_constants

BAD = "Bad"
TICK = "tick"


def flagged(loc: str, flag: int) -> str:
    return f"{loc}:{flag}"


@dataclass(frozen=True)
class TaTwin:
    """Product used by the timed checks, with the bookkeeping needed to read it back."""

    plant: TimedAutomaton
    fault: str | None
    product: TimedAutomaton
    flag_of: dict[str, int]
    div_of: dict[str, int] | None = None
    bad: frozenset[str] = frozenset()
    fresh_clocks: dict[str, str] = field(default_factory=dict)

    def components(self, edge: Edge):
        """Split a product edge into ``(plant edge of the faulty copy, plant edge of the
        fault-free copy, is_tick)``; idle components give ``None``."""
        tag = edge.tag
        tick = False
        if self.div_of is not None:
            e12, ediv = tag
            tick = ediv is not None
            tag = e12.tag if e12 is not None else (None, None)
        e1, e2 = tag
        return (e1.tag if e1 is not None else None), (e2.tag if e2 is not None else None), tick


@dataclass(frozen=True)
class TimelockReport:
    free: bool
    offending: tuple = ()
    checked: int = 0

    def __bool__(self):
        return self.free


@dataclass(frozen=True)
class TaDiagVerdict:
    diagnosable: bool
    fault: str | None = None
    delta: int | None = None
    witness_lasso: LassoWitness | None = None
    witness_path: tuple | None = None
    witness: tuple[TaRun, TaRun] | None = None
    cycle_ticks: int | None = None
    timelock_warning: str | None = None
    alpha_bound: int | None = None
    stats: dict = field(default_factory=dict)


def _plant_fault(a: TimedAutomaton, fault):
    return select_fault(a.faults, a.used_faults(), fault)


def _classify(a: TimedAutomaton, fault, label):
    """Label seen by the twin for a plant label: the event itself or ``tau``."""
    if label == fault:
        return None
    return label if a.kind(label) == "obs" else TAU


def build_a1(a: TimedAutomaton, fault: str | None = None, delta: int | None = None, clock: str | None = None):
    """Flag-annotated faulty copy; with ``delta`` it also gets the clock and ``Bad``.

    Returns ``(automaton, fault, clock)`` where ``clock`` is the fresh clock
    name used to measure time since the fault (``None`` without ``delta``).
    """
    fault = _plant_fault(a, fault)
    timed = delta is not None
    if timed:
        if delta < 0 or int(delta) != delta:
            raise ValueError("delta must be a nonnegative integer")
        clock = clock or fresh_name("t", a.clocks)
        if clock in a.clocks:
            raise ModelError(f"clock {clock!r} already used by the plant", "clock-clash")
    edges = []
    for e in a.edges:
        lab = _classify(a, fault, e.label)
        for flag in (0, 1):
            src = flagged(e.src, flag)
            if lab is None:
                resets = e.resets | ({clock} if timed and flag == 0 else set())
                edges.append(Edge(src, TAU, flagged(e.dst, 1), e.guard, resets, e))
            else:
                edges.append(Edge(src, lab, flagged(e.dst, flag), e.guard, e.resets, e))
    locations = {flagged(l, n) for l in a.locations for n in (0, 1)}
    clocks = set(a.clocks)
    if timed:
        locations.add(BAD)
        clocks.add(clock)
        for l in sorted(a.locations):
            edges.append(Edge(flagged(l, 1), TAU, BAD, Guard.of((clock, ">=", int(delta))), (), BAD))
    invs = {flagged(l, n): a.invariant(l) for l in a.locations for n in (0, 1)}
    a1 = TimedAutomaton(locations, flagged(a.initial, 0), clocks, a.events, tuple(edges), invs, frozenset())
    return a1, fault, (clock if timed else None)


def build_a1_delta(a: TimedAutomaton, delta: int, fault: str | None = None) -> TimedAutomaton:
    return build_a1(a, fault, delta)[0]


def build_a2_renamed(a: TimedAutomaton, fault: str | None = None, suffix: str = "_2") -> TimedAutomaton:
    """Fault-free copy over renamed clocks; fault edges are dropped."""
    fault = _plant_fault(a, fault)
    taken = set(a.clocks)
    rename = {}
    for x in sorted(a.clocks):
        rename[x] = fresh_name(x + suffix, taken)
        taken.add(rename[x])
    edges = []
    for e in a.edges:
        lab = _classify(a, fault, e.label)
        if lab is None:
            continue
        edges.append(Edge(e.src, lab, e.dst, e.guard.rename(rename), {rename[x] for x in e.resets}, e))
    invs = {l: g.rename(rename) for l, g in a.invariants.items()}
    return TimedAutomaton(a.locations, a.initial, set(rename.values()), a.events, tuple(edges), invs, frozenset())


def build_div(clock: str = "x") -> TimedAutomaton:
    """Two locations swapping on every integer instant; entering ``1`` marks a tick."""
    tick = Guard.of((clock, "==", 1))
    inv = Guard.of((clock, "<=", 1))
    edges = (Edge("0", TAU, "1", tick, {clock}, TICK), Edge("1", TAU, "0", tick, {clock}, TICK))
    return TimedAutomaton({"0", "1"}, "0", {clock}, (), edges, {"0": inv, "1": inv}, frozenset(), repeated={"1"})


def _div_clock(*automata) -> str:
    taken = set().union(*(a.clocks for a in automata))
    return fresh_name("div", taken)


def build_delta_product(a: TimedAutomaton, delta: int, fault: str | None = None) -> TaTwin:
    a1, fault, t = build_a1(a, fault, delta)
    a2 = build_a2_renamed(a, fault)
    if t in a2.clocks:
        a1, fault, t = build_a1(a, fault, delta, fresh_name("t", a.clocks | a2.clocks))
    d = product(a1, a2)
    flag_of, bad = {}, set()
    for l1 in a1.locations:
        for l2 in a2.locations:
            name = pair_name(l1, l2)
            if name in d.locations:
                flag_of[name] = 1 if l1 == BAD or l1.endswith(":1") else 0
                if l1 == BAD:
                    bad.add(name)
    return TaTwin(a, fault, d, flag_of, None, frozenset(bad), {"t": t})


def build_buchi_product(a: TimedAutomaton, fault: str | None = None) -> TaTwin:
    a1, fault, _ = build_a1(a, fault)
    a2 = build_a2_renamed(a, fault)
    x = _div_clock(a1, a2)
    d = product(product(a1, a2), build_div(x))
    flag_of, div_of = {}, {}
    for l1 in a1.locations:
        for l2 in a2.locations:
            for ld in ("0", "1"):
                name = pair_name(pair_name(l1, l2), ld)
                if name in d.locations:
                    flag_of[name] = 1 if l1.endswith(":1") else 0
                    div_of[name] = int(ld)
    return TaTwin(a, fault, d, flag_of, div_of, frozenset(), {"div": x})


def _is_tick(tag) -> bool:
    return tag != DELAY and tag.tag[1] is not None


def tick_graph(rg: RegionGraph, flag_of) -> AnalysisGraph:
    """Region graph with a bit telling whether the last move was a tick.

    Repeated nodes are faulty and just ticked: an accepted run is faulty from
    some point on and performs infinitely many ticks, hence lets time diverge.
    """
    g = rg.graph
    initial = (g.initial, 0)
    nodes, seen, edges = [initial], {initial}, []
    todo = deque([initial])
    while todo:
        cur = todo.popleft()
        for src, tag, dst in g.out[cur[0]]:
            nxt = (dst, int(_is_tick(tag)))
            edges.append((cur, tag, nxt))
            if nxt not in seen:
                seen.add(nxt)
                nodes.append(nxt)
                todo.append(nxt)
    repeated = {n for n in nodes if n[1] == 1 and flag_of[n[0][0]] == 1}
    return AnalysisGraph(nodes, initial, edges, repeated=repeated)


def check_timelock_free(a2: TimedAutomaton) -> TimelockReport:
    """Can time diverge from every reachable state of ``a2``?

    Every reachable state of the region graph of ``a2 x Div`` must reach a
    cycle containing a tick.
    """
    x = _div_clock(a2)
    rg = build_region_graph(product(a2, build_div(x)))
    g = rg.graph
    comp_of = {}
    comps = strongly_connected_components(g)
    for i, comp in enumerate(comps):
        for n in comp:
            comp_of[n] = i
    good = set()
    for src, tag, dst in g.edges:
        if _is_tick(tag) and comp_of[src] == comp_of[dst]:
            good.update(comps[comp_of[src]])
    # backward closure
    preds = {n: [] for n in g.nodes}
    for src, _, dst in g.edges:
        preds[dst].append(src)
    todo = deque(good)
    while todo:
        n = todo.popleft()
        for p in preds[n]:
            if p not in good:
                good.add(p)
                todo.append(p)
    bad = tuple(n for n in g.nodes if n not in good)
    return TimelockReport(not bad, bad, len(g.nodes))


def _describe_state(state) -> str:
    loc, r = state
    return f"{loc} | {r}"


def _timelock_warning(a: TimedAutomaton, fault) -> str | None:
    report = check_timelock_free(build_a2_renamed(a, fault))
    if report.free:
        return None
    sample = "; ".join(_describe_state(s) for s in report.offending[:3])
    return f"fault-free copy is not timelock-free ({len(report.offending)} region states, e.g. {sample})"


def project_runs(twin: TaTwin, run: TaRun) -> tuple[TaRun, TaRun]:
    """Faulty and non-faulty plant runs inside a concrete product run."""
    left, right = [], []
    for m in run.moves:
        if isinstance(m, Edge):
            e1, e2, _ = twin.components(m)
            if e1 is not None and e1 != BAD:
                left.append(e1)
            if e2 is not None:
                right.append(e2)
        else:
            for side in (left, right):
                if side and not isinstance(side[-1], Edge):
                    side[-1] += m
                else:
                    side.append(m)
    return TaRun(tuple(left)), TaRun(tuple(right))


def check_delta_diagnosable_ta(a: TimedAutomaton, delta: int, fault: str | None = None) -> TaDiagVerdict:
    """Is every fault announced within ``delta`` time units?"""
    if isinstance(delta, Fraction) and delta.denominator != 1:
        raise ValueError("delta must be an integer number of time units")
    twin = build_delta_product(a, int(delta), fault)
    rg = build_region_graph(twin.product, stop=lambda s: s[0] in twin.bad)
    g = AnalysisGraph(rg.graph.nodes, rg.graph.initial, rg.graph.edges,
                      final={s for s in rg.graph.nodes if s[0] in twin.bad})
    stats = {"region_states": len(rg), "region_bound": _twin_region_bound(a, delta), "explored_fully": rg.complete}
    path = check_final_emptiness(g)
    if path is None:
        return TaDiagVerdict(True, twin.fault, delta, stats=stats)
    run = concretize(twin.product, rg.K, path)
    return TaDiagVerdict(False, twin.fault, delta, witness_path=path, witness=project_runs(twin, run), stats=stats)


def _twin_region_bound(a: TimedAutomaton, delta: int) -> int:
    L, X = len(a.locations), len(a.clocks)
    K = max_constants(a)
    return ((2 * L * L + L) * math.factorial(2 * X + 1) * 2 ** (2 * X + 1)
            * math.prod((2 * K[x] + 2) ** 2 for x in a.clocks) * (2 * delta + 2))


def buchi_region_graph(a: TimedAutomaton, fault: str | None = None):
    twin = build_buchi_product(a, fault)
    return twin, build_region_graph(twin.product)


def check_diagnosable_ta(
    a: TimedAutomaton,
    fault: str | None = None,
    check_timelock: bool = True,
    unroll: int = 2,
) -> TaDiagVerdict:
    """Decide diagnosability with the Büchi check on ``(A1 x A2) x Div``."""
    fault = _plant_fault(a, fault)
    warning = _timelock_warning(a, fault) if check_timelock else None
    twin, rg = buchi_region_graph(a, fault)
    alpha = len(rg)
    g = tick_graph(rg, twin.flag_of)
    # for odd alpha the bound rounds half a unit down
    stats = {"region_states": alpha, "alpha_odd": alpha % 2 == 1, "tick_graph_nodes": len(g.nodes)}
    lasso = check_buchi_emptiness(g)
    if lasso is None:
        return TaDiagVerdict(True, fault, timelock_warning=warning, alpha_bound=alpha // 2 + 1, stats=stats)
    path = tuple((s[0], tag, d[0]) for s, tag, d in lasso.unroll(unroll))
    run = concretize(twin.product, rg.K, path)
    ticks = sum(1 for _, tag, _ in lasso.cycle if _is_tick(tag))
    return TaDiagVerdict(
        False, fault, witness_lasso=lasso, witness_path=path, witness=project_runs(twin, run),
        cycle_ticks=ticks, timelock_warning=warning, alpha_bound=alpha // 2 + 1, stats=stats,
    )


def alpha(a: TimedAutomaton, fault: str | None = None) -> int:
    """Number of states of the region graph of ``A1 x A2 x Div``."""
    return len(buchi_region_graph(a, fault)[1])


def alpha_bound(a: TimedAutomaton, fault: str | None = None) -> int:
    """Delay ``floor(alpha / 2) + 1`` that suffices for every diagnosable plant."""
    return alpha(a, fault) // 2 + 1


def max_delay_ta(a: TimedAutomaton, fault: str | None = None) -> int | None:
    verdict = check_diagnosable_ta(a, fault, check_timelock=False)
    if not verdict.diagnosable:
        return None
    lo, hi = 0, verdict.alpha_bound
    while lo < hi:
        mid = (lo + hi) // 2
        if check_delta_diagnosable_ta(a, mid, fault).diagnosable:
            hi = mid
        else:
            lo = mid + 1
    return lo


def reduce_reachability(a: TimedAutomaton, end: str, fault: str = "f") -> TimedAutomaton:
    """Add ``tau`` and fault self-loops at ``end``.

    The result is non-diagnosable exactly when ``end`` is reachable.  So that
    time can always diverge once ``end`` is entered, its invariant is moved
    onto the edges entering it (checked after their resets) and dropped.
    This leaves the runs up to the first visit of ``end`` unchanged.
    """
    if end not in a.locations:
        raise ModelError(f"unknown location {end!r}", "unknown-state")
    if a.used_faults():
        raise ModelError("reachability reduction expects a fault-free automaton", "not-fault-free")
    inv = a.invariant(end)
    edges = []
    for e in a.edges:
        if e.dst == end and inv.atoms:
            if not all(at.holds(0) for at in inv.atoms if at.clock in e.resets):
                continue
            kept = Guard(tuple(at for at in inv.atoms if at.clock not in e.resets))
            e = Edge(e.src, e.label, e.dst, e.guard & kept, e.resets, e.tag)
        edges.append(e)
    edges += [Edge(end, TAU, end), Edge(end, fault, end)]
    edges = list({e.sort_key(): e for e in edges}.values())
    invariants = {l: g for l, g in a.invariants.items() if l != end}
    return TimedAutomaton(a.locations, a.initial, a.clocks, a.events - {fault}, tuple(edges), invariants,
                          a.faults | {fault}, a.final, a.repeated)


def reachable_locations(a: TimedAutomaton) -> set[str]:
    return build_region_graph(a).locations_reached()


def isolate_fault_ta(a: TimedAutomaton, fault: str) -> TimedAutomaton:
    """Keep ``fault`` as the only fault; edges carrying another fault label become ``tau``."""
    if fault not in a.faults:
        raise ModelError(f"{fault!r} is not a declared fault label", "unknown-label")
    edges = {}
    for e in a.edges:
        lab = TAU if e.label in a.faults and e.label != fault else e.label
        e2 = Edge(e.src, lab, e.dst, e.guard, e.resets)
        edges[e2.sort_key()] = e2
    return TimedAutomaton(a.locations, a.initial, a.clocks, a.events, tuple(edges.values()),
                          a.invariants, {fault}, a.final, a.repeated)
