"""Region abstraction of timed automata.

A region fixes, for every clock, its integer part (or that it exceeds the
clock's maximal constant) and the order of the fractional parts of the bounded
clocks.  Clocks that are inactive at a location (always reset before being
read again) are dropped from the region; this keeps the graph finite-state
equivalent and much smaller when a clock only matters after some event.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Mapping

from .automata import ClockAtom, Edge, Guard, TaRun, TimedAutomaton
from .buchi import AnalysisGraph

DELAY = "delay"


@dataclass(frozen=True)
class Region:
    ints: tuple[tuple[str, int | None], ...]
    zero: tuple[str, ...] = ()
    fracs: tuple[tuple[str, ...], ...] = ()

    @cached_property
    def int_of(self) -> dict[str, int | None]:
        return dict(self.ints)

    @classmethod
    def zero_region(cls, clocks) -> Region:
        clocks = tuple(sorted(clocks))
        return cls(tuple((x, 0) for x in clocks), clocks, ())

    def is_canonical(self) -> bool:
        bounded = {x for x, n in self.ints if n is not None}
        placed = list(self.zero) + [x for b in self.fracs for x in b]
        return (
            list(self.ints) == sorted(self.ints, key=lambda p: p[0])
            and len(placed) == len(set(placed))
            and set(placed) == bounded
            and list(self.zero) == sorted(self.zero)
            and all(b and list(b) == sorted(b) for b in self.fracs)
        )

    def __str__(self):
        parts = []
        for x, n in self.ints:
            if n is None:
                parts.append(f"{x}>K")
            elif x in self.zero:
                parts.append(f"{x}={n}")
            else:
                parts.append(f"{n}<{x}<{n + 1}")
        if sum(map(len, self.fracs)) > 1:
            parts.append(" < ".join("{" + ",".join(b) + "}" for b in self.fracs))
        return ", ".join(parts) if parts else "true"


def time_successor(r: Region, K: Mapping[str, int]) -> Region:
    """The next region reached by letting time elapse; all-unbounded regions are fixpoints."""
    ints = r.int_of
    if r.zero:
        movers = []
        new_ints = dict(ints)
        for x in r.zero:
            if ints[x] >= K[x]:
                new_ints[x] = None
            else:
                movers.append(x)
        fracs = ((tuple(movers),) if movers else ()) + r.fracs
        return Region(tuple(sorted(new_ints.items())), (), fracs)
    if r.fracs:
        top = r.fracs[-1]
        new_ints = dict(ints)
        for x in top:
            new_ints[x] += 1
        return Region(tuple(sorted(new_ints.items())), top, r.fracs[:-1])
    return r


def atom_holds(r: Region, atom: ClockAtom) -> bool:
    n = r.int_of.get(atom.clock, "inactive")
    if n == "inactive":
        raise KeyError(f"clock {atom.clock} is inactive in region {r}")
    c, op = atom.bound, atom.op
    if n is None:  # beyond the maximal constant, which is >= c
        return op in (">", ">=")
    if atom.clock in r.zero:
        return atom.holds(n)
    # n < value < n + 1
    if op in ("<", "<="):
        return n + 1 <= c
    if op == "==":
        return False
    return n >= c


def satisfies(r: Region, guard: Guard) -> bool:
    return all(atom_holds(r, a) for a in guard.atoms)


def reset(r: Region, clocks, keep=None) -> Region:
    """Reset ``clocks`` to zero, then keep only the clocks in ``keep`` (default: all)."""
    ints = r.int_of
    keep = set(ints) | set(clocks) if keep is None else set(keep)
    new_ints = {x: (0 if x in clocks else n) for x, n in ints.items() if x in keep}
    for x in clocks:
        if x in keep:
            new_ints[x] = 0
    zero = tuple(sorted({x for x in r.zero if x in keep and x not in clocks} | {x for x in clocks if x in keep}))
    fracs = tuple(
        b2 for b2 in (tuple(x for x in b if x in keep and x not in clocks) for b in r.fracs) if b2
    )
    return Region(tuple(sorted(new_ints.items())), zero, fracs)


def max_constants(a: TimedAutomaton) -> dict[str, int]:
    """Largest constant compared against each clock (0 for clocks never compared)."""
    K = {x: 0 for x in a.clocks}
    guards = [e.guard for e in a.edges] + list(a.invariants.values())
    for g in guards:
        for atom in g.atoms:
            K[atom.clock] = max(K[atom.clock], atom.bound)
    return K


def active_clocks(a: TimedAutomaton) -> dict[str, frozenset[str]]:
    """Clocks that may be read at or after each location before their next reset."""
    active = {l: set(a.invariant(l).clocks()) | {c for e in a.out_edges[l] for c in e.guard.clocks()}
              for l in a.locations}
    changed = True
    while changed:
        changed = False
        for e in a.edges:
            extra = active[e.dst] - e.resets - active[e.src]
            if extra:
                active[e.src] |= extra
                changed = True
    return {l: frozenset(v) for l, v in active.items()}


def region_bound(a: TimedAutomaton, K: Mapping[str, int] | None = None) -> int:
    """Upper bound |L| * |X|! * 2^|X| * prod(2 K_x + 2) on the number of region states."""
    K = max_constants(a) if K is None else K
    n = len(a.clocks)
    return len(a.locations) * math.factorial(n) * 2**n * math.prod(2 * K[x] + 2 for x in a.clocks)


State = tuple[str, Region]


def discrete_successor(a: TimedAutomaton, state: State, edge: Edge, active=None) -> State | None:
    loc, r = state
    if edge.src != loc:
        raise ValueError(f"edge {edge} does not leave {loc}")
    if not satisfies(r, edge.guard):
        return None
    keep = None if active is None else active[edge.dst]
    r2 = reset(r, edge.resets, keep)
    if not satisfies(r2, a.invariant(edge.dst)):
        return None
    return edge.dst, r2


@dataclass(frozen=True)
class RegionGraph:
    """Reachable part of the region graph.  Edge tags are ``DELAY`` or source ``Edge`` objects."""

    automaton: TimedAutomaton
    K: Mapping[str, int]
    graph: AnalysisGraph
    complete: bool = True

    @property
    def states(self) -> tuple[State, ...]:
        return self.graph.nodes

    def __len__(self):
        return len(self.graph.nodes)

    def locations_reached(self) -> set[str]:
        return {loc for loc, _ in self.graph.nodes}


def build_region_graph(
    a: TimedAutomaton,
    K: Mapping[str, int] | None = None,
    reduce_inactive: bool = True,
    stop: Callable[[State], bool] | None = None,
) -> RegionGraph:
    """Explore the region graph from ``(l0, 0)`` breadth first.

    ``stop`` ends the exploration as soon as a state satisfying it is
    discovered; the partial graph then still contains a path to that state.
    """
    K = dict(max_constants(a) if K is None else K)
    active = active_clocks(a) if reduce_inactive else None

    def keep(loc):
        return a.clocks if active is None else active[loc]

    init_region = Region.zero_region(keep(a.initial))
    initial = (a.initial, init_region)
    nodes = [initial]
    seen = {initial}
    edges = []
    todo = deque([initial])
    finished = True
    while todo:
        state = todo.popleft()
        loc, r = state
        inv = a.invariant(loc)
        succs = []
        r2 = time_successor(r, K)
        if r2 == r:
            succs.append((DELAY, state))
        elif satisfies(r2, inv):
            succs.append((DELAY, (loc, r2)))
        for e in a.out_edges[loc]:
            nxt = discrete_successor(a, state, e, active)
            if nxt is not None:
                succs.append((e, nxt))
        hit = False
        for tag, nxt in succs:
            edges.append((state, tag, nxt))
            if nxt not in seen:
                seen.add(nxt)
                nodes.append(nxt)
                todo.append(nxt)
                if stop is not None and stop(nxt):
                    hit = True
        if hit:
            finished = False
            break
    final = {s for s in nodes if s[0] in a.final}
    repeated = {s for s in nodes if s[0] in a.repeated}
    graph = AnalysisGraph(nodes, initial, edges, final=final, repeated=repeated)
    return RegionGraph(a, K, graph, finished)


def region_of(valuation: Mapping[str, Fraction], K: Mapping[str, int], clocks=None) -> Region:
    """Region containing a concrete valuation (restricted to ``clocks`` if given)."""
    clocks = sorted(valuation if clocks is None else clocks)
    ints, zero, frac_of = [], [], {}
    for x in clocks:
        v = Fraction(valuation[x])
        if v > K[x]:
            ints.append((x, None))
            continue
        n = math.floor(v)
        ints.append((x, n))
        if v == n:
            zero.append(x)
        else:
            frac_of[x] = v - n
    blocks: dict[Fraction, list[str]] = {}
    for x, fr in frac_of.items():
        blocks.setdefault(fr, []).append(x)
    fracs = tuple(tuple(sorted(blocks[fr])) for fr in sorted(blocks))
    return Region(tuple(ints), tuple(sorted(zero)), fracs)


# ---------------------------------------------------------------------------
# concrete runs along region paths


class UnrealizablePath(ValueError):
    pass


def _solve_difference_constraints(n, constraints):
    """Solve ``T[a] - T[b] <= c`` (``<`` when strict) exactly over the rationals.

    Distances are pairs ``(c, k)`` standing for ``c + k*eps`` with an
    infinitesimal ``eps``; a strict bound subtracts one ``eps``.  The returned
    solution substitutes a concrete ``eps`` small enough for every constraint.
    """
    adj = [[] for _ in range(n)]
    for a, b, c, strict in constraints:
        adj[b].append((a, (c, -1 if strict else 0)))
    dist = [(0, 0)] * n
    in_queue = [True] * n
    queue = deque(range(n))
    relaxed = [0] * n
    while queue:
        b = queue.popleft()
        in_queue[b] = False
        db = dist[b]
        for a, (c, k) in adj[b]:
            cand = (db[0] + c, db[1] + k)
            if cand < dist[a]:
                dist[a] = cand
                relaxed[a] += 1
                if relaxed[a] > n + 1:
                    raise UnrealizablePath("region path has no concrete realization")
                if not in_queue[a]:
                    in_queue[a] = True
                    queue.append(a)
    eps = Fraction(1)
    for a, b, c, strict in constraints:
        da, ka = dist[a]
        db, kb = dist[b]
        gap = c - (da - db)
        slope = ka - kb
        if gap > 0 and slope > 0:
            eps = min(eps, Fraction(gap, slope))
    eps /= 2
    return [Fraction(d) + k * eps for d, k in dist]


def concretize(a: TimedAutomaton, K: Mapping[str, int], path) -> TaRun:
    """Pick exact rational delays realizing a region-graph path of ``a``.

    ``path`` is a sequence of region-graph edges ``((loc, r), tag, (loc2, r2))``
    starting at the initial state.  Consecutive states joined by discrete edges
    share a time point; every region membership and fractional ordering is a
    difference constraint between time points.
    """
    if not path:
        return TaRun(())
    states = [path[0][0]] + [e[2] for e in path]
    # time point index of every path position
    point = [0]
    for _, tag, _ in path:
        point.append(point[-1] + 1 if tag == DELAY else point[-1])
    n_points = point[-1] + 1
    cons = []
    for i in range(n_points - 1):
        cons.append((i, i + 1, 0, False))  # T[i] <= T[i+1]
    last_reset = {x: 0 for x in a.clocks}
    for pos, (loc, r) in enumerate(states):
        if pos > 0:
            tag = path[pos - 1][1]
            if tag != DELAY:
                for x in tag.resets:
                    last_reset[x] = point[pos]
        now = point[pos]
        ints = r.int_of
        for x, nx in ints.items():
            src = last_reset[x]
            if nx is None:
                cons.append((src, now, -K[x], True))  # value > K
            elif x in r.zero:
                cons.append((now, src, nx, False))
                cons.append((src, now, -nx, False))
            else:
                cons.append((src, now, -nx, True))
                cons.append((now, src, nx + 1, True))
        blocks = r.fracs
        for bi, block in enumerate(blocks):
            for x, y in zip(block, block[1:]):
                # frac(x) == frac(y)  <=>  T[ry] - T[rx] == n_x - n_y
                d = ints[x] - ints[y]
                cons.append((last_reset[y], last_reset[x], d, False))
                cons.append((last_reset[x], last_reset[y], -d, False))
            if bi + 1 < len(blocks):
                x, y = block[0], blocks[bi + 1][0]
                cons.append((last_reset[y], last_reset[x], ints[x] - ints[y], True))
    cons.append((0, 0, 0, False))
    times = _solve_difference_constraints(n_points, cons)
    base = times[0]
    times = [t - base for t in times]
    moves = []
    for pos, (_, tag, _) in enumerate(path):
        if tag == DELAY:
            d = times[point[pos + 1]] - times[point[pos]]
            if d:
                moves.append(d)
        else:
            moves.append(tag)
    return TaRun(tuple(moves))
