"""Emptiness checks on explicit finite graphs.

Both checks iterate nodes and edges in the order the graph was built, so
witnesses are reproducible for a deterministic construction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable

import numpy as np

GraphEdge = tuple[Hashable, object, Hashable]

ORACLE_MAX_NODES = 2000


@dataclass(frozen=True)
class AnalysisGraph:
    nodes: tuple[Hashable, ...]
    initial: Hashable
    edges: tuple[GraphEdge, ...]
    final: frozenset = frozenset()
    repeated: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(dict.fromkeys(self.nodes)))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "final", frozenset(self.final))
        object.__setattr__(self, "repeated", frozenset(self.repeated))
        known = set(self.nodes)
        if self.initial not in known:
            raise ValueError("initial node is not a node")
        for src, _, dst in self.edges:
            if src not in known or dst not in known:
                raise ValueError(f"edge {src!r} -> {dst!r} leaves the node set")
        if not self.final <= known or not self.repeated <= known:
            raise ValueError("final/repeated must be subsets of the nodes")

    @cached_property
    def out(self) -> dict[Hashable, list[GraphEdge]]:
        adj: dict[Hashable, list[GraphEdge]] = {n: [] for n in self.nodes}
        for e in self.edges:
            adj[e[0]].append(e)
        return adj


@dataclass(frozen=True)
class LassoWitness:
    stem: tuple[GraphEdge, ...]
    cycle: tuple[GraphEdge, ...]
    anchor: Hashable = field(default=None)

    def unroll(self, times: int) -> tuple[GraphEdge, ...]:
        return self.stem + self.cycle * times

    def cycle_nodes(self) -> list[Hashable]:
        return [e[0] for e in self.cycle]


class WitnessError(AssertionError):
    pass


def validate_path(g: AnalysisGraph, path: Iterable[GraphEdge], start=None) -> Hashable:
    """Check that ``path`` is a chain of graph edges; return its last node."""
    edge_set = set(g.edges) if len(g.edges) < 50_000 else None
    cur = g.initial if start is None else start
    for e in path:
        if e[0] != cur:
            raise WitnessError(f"path breaks at {cur!r}")
        if edge_set is not None and e not in edge_set:
            raise WitnessError(f"edge {e!r} is not in the graph")
        if edge_set is None and e not in g.out[cur]:
            raise WitnessError(f"edge {e!r} is not in the graph")
        cur = e[2]
    return cur


def validate_lasso(g: AnalysisGraph, lasso: LassoWitness) -> None:
    end = validate_path(g, lasso.stem)
    if end != lasso.anchor:
        raise WitnessError("stem does not end at the anchor")
    if not lasso.cycle:
        raise WitnessError("empty cycle")
    if validate_path(g, lasso.cycle, start=lasso.anchor) != lasso.anchor:
        raise WitnessError("cycle does not return to the anchor")
    if not any(e[0] in g.repeated for e in lasso.cycle):
        raise WitnessError("cycle visits no repeated node")


def _bfs_parents(g: AnalysisGraph, source, allowed=None):
    parent = {source: None}
    todo = deque([source])
    while todo:
        cur = todo.popleft()
        for e in g.out[cur]:
            nxt = e[2]
            if nxt in parent or (allowed is not None and nxt not in allowed):
                continue
            parent[nxt] = e
            todo.append(nxt)
    return parent


def _path_to(parent, node) -> tuple[GraphEdge, ...]:
    path = []
    while parent[node] is not None:
        e = parent[node]
        path.append(e)
        node = e[0]
    return tuple(reversed(path))


def check_final_emptiness(g: AnalysisGraph) -> tuple[GraphEdge, ...] | None:
    """Return a shortest path from the initial node to a final node, or ``None``."""
    if not g.final:
        return None
    if g.initial in g.final:
        return ()
    parent = {g.initial: None}
    todo = deque([g.initial])
    while todo:
        cur = todo.popleft()
        for e in g.out[cur]:
            nxt = e[2]
            if nxt in parent:
                continue
            parent[nxt] = e
            if nxt in g.final:
                return _path_to(parent, nxt)
            todo.append(nxt)
    return None


def strongly_connected_components(g: AnalysisGraph, reachable_from=None) -> list[list[Hashable]]:
    """Iterative Tarjan over the nodes reachable from ``reachable_from`` (default: initial)."""
    roots = [g.initial if reachable_from is None else reachable_from]
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    comps: list[list] = []
    counter = 0
    for root in roots:
        if root in index:
            continue
        work = [(root, iter(g.out[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for e in it:
                nxt = e[2]
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(g.out[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                comps.append(comp)
    return comps


def _is_cyclic(g: AnalysisGraph, comp: set) -> bool:
    if len(comp) > 1:
        return True
    (n,) = comp
    return any(e[2] == n for e in g.out[n])


def check_buchi_emptiness(g: AnalysisGraph) -> LassoWitness | None:
    """Return a lasso through a repeated node, or ``None`` when no accepting run exists."""
    if not g.repeated:
        return None
    accepting_comps = []
    for comp in strongly_connected_components(g):
        members = set(comp)
        if members & g.repeated and _is_cyclic(g, members):
            accepting_comps.append(members)
    if not accepting_comps:
        return None
    in_comp = {n: c for c in accepting_comps for n in c}
    # the repeated node of an accepting component closest to the initial node
    parent = _bfs_parents(g, g.initial)
    anchor = None
    for n in parent:  # insertion order is BFS order
        if n in g.repeated and n in in_comp:
            anchor = n
            break
    comp = in_comp[anchor]
    stem = _path_to(parent, anchor)
    cycle = _shortest_cycle(g, anchor, comp)
    lasso = LassoWitness(stem, cycle, anchor)
    validate_lasso(g, lasso)
    return lasso


def _shortest_cycle(g: AnalysisGraph, anchor, comp: set) -> tuple[GraphEdge, ...]:
    for e in g.out[anchor]:
        if e[2] == anchor:
            return (e,)
    parent = {}
    todo = deque()
    for e in g.out[anchor]:
        if e[2] in comp and e[2] not in parent:
            parent[e[2]] = e
            todo.append(e[2])
    while todo:
        cur = todo.popleft()
        for e in g.out[cur]:
            nxt = e[2]
            if nxt == anchor:
                path = [e]
                node = cur
                while node != anchor:
                    pe = parent[node]
                    path.append(pe)
                    node = pe[0]
                return tuple(reversed(path))
            if nxt in comp and nxt not in parent:
                parent[nxt] = e
                todo.append(nxt)
    raise AssertionError("anchor of a cyclic component has no cycle")


def transitive_closure_oracle(g: AnalysisGraph, max_nodes: int = ORACLE_MAX_NODES) -> bool:
    """Decide Büchi non-emptiness by boolean matrix closure (test oracle only)."""
    n = len(g.nodes)
    if n > max_nodes:
        raise ValueError(f"oracle refuses graphs with more than {max_nodes} nodes (got {n})")
    idx = {v: i for i, v in enumerate(g.nodes)}
    adj = np.zeros((n, n), dtype=bool)
    for src, _, dst in g.edges:
        adj[idx[src], idx[dst]] = True
    # plus[i, j]: j reachable from i by one or more edges
    plus = adj.copy()
    while True:
        nxt = plus | ((plus.astype(np.int32) @ plus.astype(np.int32)) > 0)
        if (nxt == plus).all():
            break
        plus = nxt
    init = idx[g.initial]
    for r in g.repeated:
        i = idx[r]
        if (i == init or plus[init, i]) and plus[i, i]:
            return True
    return False
