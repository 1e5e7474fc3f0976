"""Finite and timed automata over observable events, ``tau`` and fault labels.

Labels are plain strings.  ``"tau"`` is the reserved silent label; every
automaton carries the set of observable event names (``events``) and the set of
fault names (``faults``), which together classify each label.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Union

TAU = "tau"

OPS = ("<", "<=", "==", ">=", ">")
UPPER_OPS = ("<", "<=")


class ModelError(ValueError):
    """Raised when an automaton violates a structural invariant."""

    def __init__(self, message, code="invalid-model"):
        super().__init__(message)
        self.code = code


class ReplayError(ValueError):
    """Raised when a run cannot be replayed in its automaton."""


# ---------------------------------------------------------------------------
# clock constraints


@dataclass(frozen=True, order=True)
class ClockAtom:
    clock: str
    op: str
    bound: int

    def __post_init__(self):
        if self.op not in OPS:
            raise ModelError(f"unknown comparison {self.op!r}", "bad-atom")
        if self.bound < 0:
            raise ModelError(f"negative bound in {self}", "bad-atom")

    def holds(self, value) -> bool:
        c = self.bound
        return {
            "<": value < c,
            "<=": value <= c,
            "==": value == c,
            ">=": value >= c,
            ">": value > c,
        }[self.op]

    def __str__(self):
        return f"{self.clock}{self.op}{self.bound}"


@dataclass(frozen=True)
class Guard:
    """Conjunction of clock atoms; the empty conjunction is ``true``."""

    atoms: tuple[ClockAtom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted(set(self.atoms))))

    @classmethod
    def of(cls, *atoms: ClockAtom | tuple) -> Guard:
        return cls(tuple(a if isinstance(a, ClockAtom) else ClockAtom(*a) for a in atoms))

    def holds(self, valuation: Mapping[str, Fraction]) -> bool:
        return all(a.holds(valuation[a.clock]) for a in self.atoms)

    def clocks(self) -> frozenset[str]:
        return frozenset(a.clock for a in self.atoms)

    def is_upper_bound(self) -> bool:
        return all(a.op in UPPER_OPS for a in self.atoms)

    def rename(self, mapping: Mapping[str, str]) -> Guard:
        return Guard(tuple(ClockAtom(mapping.get(a.clock, a.clock), a.op, a.bound) for a in self.atoms))

    def __and__(self, other: Guard) -> Guard:
        return Guard(self.atoms + other.atoms)

    def __str__(self):
        return "&&".join(str(a) for a in self.atoms) if self.atoms else "true"


TRUE = Guard()


# ---------------------------------------------------------------------------
# finite automata


def _label_kind(label, events, faults):
    if label == TAU:
        return "tau"
    if label in faults:
        return "fault"
    if label in events:
        return "obs"
    raise ModelError(f"label {label!r} is neither tau, a fault nor a declared event", "unknown-label")


def _check_alphabet(events, faults):
    if TAU in events or TAU in faults:
        raise ModelError("'tau' is reserved and cannot be declared", "reserved-name")
    clash = set(events) & set(faults)
    if clash:
        raise ModelError(f"labels declared both as event and fault: {sorted(clash)}", "reserved-name")
    for name in events:
        if not name:
            raise ModelError("empty event name", "bad-name")


@dataclass(frozen=True)
class FiniteAutomaton:
    states: frozenset[str]
    initial: str
    events: frozenset[str]
    transitions: frozenset[tuple[str, str, str]]
    faults: frozenset[str] = frozenset({"f"})
    final: frozenset[str] = frozenset()
    repeated: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("states", "events", "transitions", "faults", "final", "repeated"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        _check_alphabet(self.events, self.faults)
        if self.initial not in self.states:
            raise ModelError(f"initial state {self.initial!r} is not a state", "unknown-state")
        for src, label, dst in self.transitions:
            if src not in self.states or dst not in self.states:
                raise ModelError(f"transition {src} -{label}-> {dst} uses an unknown state", "unknown-state")
            _label_kind(label, self.events, self.faults)
        if not self.final <= self.states or not self.repeated <= self.states:
            raise ModelError("final/repeated sets must be subsets of the states", "unknown-state")

    def kind(self, label: str) -> str:
        """Return ``"obs"``, ``"tau"`` or ``"fault"``."""
        return _label_kind(label, self.events, self.faults)

    @cached_property
    def sorted_transitions(self) -> tuple[tuple[str, str, str], ...]:
        return tuple(sorted(self.transitions))

    @cached_property
    def successors(self) -> dict[str, tuple[tuple[str, str], ...]]:
        out: dict[str, list] = {q: [] for q in self.states}
        for src, label, dst in self.sorted_transitions:
            out[src].append((label, dst))
        return {q: tuple(v) for q, v in out.items()}

    def used_faults(self) -> frozenset[str]:
        return frozenset(lab for _, lab, _ in self.transitions if lab in self.faults)

    def relabel(self, mapping: Mapping[str, str], faults=None) -> FiniteAutomaton:
        faults = self.faults if faults is None else faults
        return FiniteAutomaton(
            self.states,
            self.initial,
            self.events,
            {(s, mapping.get(l, l), d) for s, l, d in self.transitions},
            faults,
            self.final,
            self.repeated,
        )


def complete_deadlocks(a: FiniteAutomaton) -> FiniteAutomaton:
    """Add a ``tau`` self-loop to every state without outgoing transitions."""
    dead = [q for q in a.states if not a.successors[q]]
    if not dead:
        return a
    return FiniteAutomaton(
        a.states, a.initial, a.events, a.transitions | {(q, TAU, q) for q in dead},
        a.faults, a.final, a.repeated,
    )


def select_fault(faults: Iterable[str], used: Iterable[str], fault: str | None) -> str | None:
    """Pick the fault label to analyse; ``None`` when the model has no fault edges."""
    faults = frozenset(faults)
    if fault is not None:
        if fault not in faults:
            raise ModelError(f"{fault!r} is not a declared fault label", "unknown-label")
        return fault
    used = sorted(set(used))
    if len(used) > 1:
        raise ModelError(f"several fault labels present {used}; select one", "ambiguous-fault")
    return used[0] if used else None


# ---------------------------------------------------------------------------
# timed automata


@dataclass(frozen=True)
class Edge:
    """A timed-automaton edge.  ``tag`` records where an edge of a derived automaton came from."""

    src: str
    label: str
    dst: str
    guard: Guard = TRUE
    resets: frozenset[str] = frozenset()
    tag: object = None

    def __post_init__(self):
        object.__setattr__(self, "resets", frozenset(self.resets))

    def sort_key(self):
        return (self.src, self.label, self.dst, str(self.guard), tuple(sorted(self.resets)), repr(self.tag))

    def __str__(self):
        out = f"{self.src} -{self.label}-> {self.dst}"
        if self.guard.atoms:
            out += f" [{self.guard}]"
        if self.resets:
            out += " {" + ",".join(sorted(self.resets)) + ":=0}"
        return out


@dataclass(frozen=True)
class TimedAutomaton:
    locations: frozenset[str]
    initial: str
    clocks: frozenset[str]
    events: frozenset[str]
    edges: tuple[Edge, ...]
    invariants: Mapping[str, Guard] = field(default_factory=dict)
    faults: frozenset[str] = frozenset({"f"})
    final: frozenset[str] = frozenset()
    repeated: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("locations", "clocks", "events", "faults", "final", "repeated"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        edges = tuple(sorted(self.edges, key=Edge.sort_key))
        if len(set(edges)) != len(edges):
            raise ModelError("duplicate edge", "duplicate")
        object.__setattr__(self, "edges", edges)
        invs = {l: g for l, g in dict(self.invariants).items() if g.atoms}
        object.__setattr__(self, "invariants", invs)
        _check_alphabet(self.events, self.faults)
        if self.initial not in self.locations:
            raise ModelError(f"initial location {self.initial!r} is unknown", "unknown-state")
        for e in edges:
            if e.src not in self.locations or e.dst not in self.locations:
                raise ModelError(f"edge {e} uses an unknown location", "unknown-state")
            _label_kind(e.label, self.events, self.faults)
            if not e.guard.clocks() <= self.clocks or not e.resets <= self.clocks:
                raise ModelError(f"edge {e} uses an undeclared clock", "unknown-clock")
        for loc, inv in invs.items():
            if loc not in self.locations:
                raise ModelError(f"invariant on unknown location {loc!r}", "unknown-state")
            if not inv.clocks() <= self.clocks:
                raise ModelError(f"invariant of {loc} uses an undeclared clock", "unknown-clock")
            if not inv.is_upper_bound():
                raise ModelError(f"invariant of {loc} must only use < or <=", "bad-invariant")
        if not self.final <= self.locations or not self.repeated <= self.locations:
            raise ModelError("final/repeated sets must be subsets of the locations", "unknown-state")
        if not self.invariant(self.initial).holds(zero_valuation(self.clocks)):
            raise ModelError("initial state violates the initial invariant", "vacuous-model")

    def invariant(self, loc: str) -> Guard:
        return self.invariants.get(loc, TRUE)

    def kind(self, label: str) -> str:
        return _label_kind(label, self.events, self.faults)

    @cached_property
    def out_edges(self) -> dict[str, tuple[Edge, ...]]:
        out: dict[str, list] = {l: [] for l in self.locations}
        for e in self.edges:
            out[e.src].append(e)
        return {l: tuple(v) for l, v in out.items()}

    def used_faults(self) -> frozenset[str]:
        return frozenset(e.label for e in self.edges if e.label in self.faults)

    def max_constant(self) -> int:
        consts = [a.bound for e in self.edges for a in e.guard.atoms]
        consts += [a.bound for g in self.invariants.values() for a in g.atoms]
        return max(consts, default=0)


def as_timed(a: FiniteAutomaton) -> TimedAutomaton:
    """View a finite automaton as the clockless timed automaton it denotes."""
    return TimedAutomaton(
        a.states, a.initial, (), a.events,
        tuple(Edge(s, l, d) for s, l, d in a.sorted_transitions),
        {}, a.faults, a.final, a.repeated,
    )


def zero_valuation(clocks: Iterable[str]) -> dict[str, Fraction]:
    return {x: Fraction(0) for x in clocks}


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    name = base
    while name in taken:
        name += "_"
    return name


# ---------------------------------------------------------------------------
# synchronized product


def product(a1, a2, prune: bool = True):
    """Synchronized product of two automata of the same kind.

    Shared non-``tau`` labels synchronize, everything else interleaves.  Product
    locations are named ``"l1|l2"``.  For timed automata every product edge is
    tagged ``(e1, e2)`` with the component edges (``None`` for the idle side).
    """
    if isinstance(a1, FiniteAutomaton) and isinstance(a2, FiniteAutomaton):
        return _product_fa(a1, a2, prune)
    return _product_ta(_timed(a1), _timed(a2), prune)


def _timed(a):
    return as_timed(a) if isinstance(a, FiniteAutomaton) else a


def pair_name(l1: str, l2: str) -> str:
    return f"{l1}|{l2}"


def _sync_labels(a1, a2):
    return ((a1.events | a1.faults) & (a2.events | a2.faults)) - {TAU}


def _product_moves(a1_succ, a2_succ, shared, l1, l2):
    """Yield (label, move1, move2) for one product location; moves are opaque."""
    for label, m1 in a1_succ(l1):
        if label in shared:
            for label2, m2 in a2_succ(l2):
                if label2 == label:
                    yield label, m1, m2
        else:
            yield label, m1, None
    for label, m2 in a2_succ(l2):
        if label not in shared:
            yield label, None, m2


def _explore(initial, expand, prune, all_pairs):
    if not prune:
        return list(all_pairs)
    seen = {initial}
    todo = deque([initial])
    while todo:
        cur = todo.popleft()
        for nxt in expand(cur):
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return list(seen)


def _product_fa(a1, a2, prune):
    shared = _sync_labels(a1, a2)
    s1 = lambda q: a1.successors[q]
    s2 = lambda q: a2.successors[q]

    def moves(pair):
        q1, q2 = pair
        for label, d1, d2 in _product_moves(s1, s2, shared, q1, q2):
            yield label, (d1 if d1 is not None else q1, d2 if d2 is not None else q2)

    pairs = _explore(
        (a1.initial, a2.initial), lambda p: (t for _, t in moves(p)), prune,
        ((p, q) for p in a1.states for q in a2.states),
    )
    trans = {(pair_name(*p), lab, pair_name(*t)) for p in pairs for lab, t in moves(p)}
    return FiniteAutomaton(
        {pair_name(*p) for p in pairs},
        pair_name(a1.initial, a2.initial),
        a1.events | a2.events,
        trans,
        a1.faults | a2.faults,
        {pair_name(p, q) for p, q in pairs if p in a1.final and q in a2.final},
        {pair_name(p, q) for p, q in pairs if p in a1.repeated or q in a2.repeated},
    )


def _product_ta(a1: TimedAutomaton, a2: TimedAutomaton, prune: bool) -> TimedAutomaton:
    overlap = a1.clocks & a2.clocks
    if overlap:
        raise ModelError(f"product needs disjoint clock sets, both use {sorted(overlap)}", "clock-clash")
    shared = _sync_labels(a1, a2)
    s1 = lambda l: ((e.label, e) for e in a1.out_edges[l])
    s2 = lambda l: ((e.label, e) for e in a2.out_edges[l])

    def moves(pair):
        l1, l2 = pair
        for label, e1, e2 in _product_moves(s1, s2, shared, l1, l2):
            guard = (e1.guard if e1 else TRUE) & (e2.guard if e2 else TRUE)
            resets = (e1.resets if e1 else frozenset()) | (e2.resets if e2 else frozenset())
            tgt = (e1.dst if e1 else l1, e2.dst if e2 else l2)
            yield label, guard, resets, tgt, (e1, e2)

    pairs = _explore(
        (a1.initial, a2.initial), lambda p: (m[3] for m in moves(p)), prune,
        ((p, q) for p in a1.locations for q in a2.locations),
    )
    edges = [
        Edge(pair_name(*p), label, pair_name(*tgt), guard, resets, tag)
        for p in pairs
        for label, guard, resets, tgt, tag in moves(p)
    ]
    return TimedAutomaton(
        {pair_name(*p) for p in pairs},
        pair_name(a1.initial, a2.initial),
        a1.clocks | a2.clocks,
        a1.events | a2.events,
        tuple(edges),
        {pair_name(p, q): a1.invariant(p) & a2.invariant(q) for p, q in pairs},
        a1.faults | a2.faults,
        {pair_name(p, q) for p, q in pairs if p in a1.final and q in a2.final},
        {pair_name(p, q) for p, q in pairs if p in a1.repeated or q in a2.repeated},
    )


# ---------------------------------------------------------------------------
# timed words, runs and traces


@dataclass(frozen=True)
class TimedWord:
    """``d0 a0 d1 a1 ... dn``: each label is preceded by a delay, plus a tail delay."""

    steps: tuple[tuple[Fraction, str], ...] = ()
    tail: Fraction = Fraction(0)

    def __post_init__(self):
        steps = tuple((Fraction(d), lab) for d, lab in self.steps)
        if any(d < 0 for d, _ in steps) or Fraction(self.tail) < 0:
            raise ValueError("durations must be nonnegative")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "tail", Fraction(self.tail))

    @classmethod
    def parse(cls, *items) -> TimedWord:
        """Build from an alternating sequence, e.g. ``parse(0.4, "a", 1, "b")``.

        Floats are read through their decimal representation.
        """
        steps, pending = [], Fraction(0)
        for item in items:
            if isinstance(item, str):
                steps.append((pending, item))
                pending = Fraction(0)
            else:
                pending += Fraction(str(item)) if isinstance(item, float) else Fraction(item)
        return cls(tuple(steps), pending)

    def labels(self) -> tuple[str, ...]:
        return tuple(lab for _, lab in self.steps)

    def duration(self) -> Fraction:
        return sum((d for d, _ in self.steps), Fraction(0)) + self.tail

    def __str__(self):
        parts = []
        for d, lab in self.steps:
            parts += [str(d), lab]
        parts.append(str(self.tail))
        return " ".join(parts)


def untime(word: TimedWord) -> tuple[str, ...]:
    return word.labels()


def project(word: TimedWord, keep: Iterable[str]) -> TimedWord:
    """Erase letters outside ``keep``, folding their delays into the next kept letter."""
    keep = frozenset(keep)
    steps, pending = [], Fraction(0)
    for d, lab in word.steps:
        pending += d
        if lab in keep:
            steps.append((pending, lab))
            pending = Fraction(0)
    return TimedWord(tuple(steps), pending + word.tail)


@dataclass(frozen=True)
class FaRun:
    states: tuple[str, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.states) != len(self.labels) + 1:
            raise ValueError("a run needs exactly one more state than labels")

    def fault_index(self, faults: Iterable[str]) -> int | None:
        faults = frozenset(faults)
        return next((i for i, lab in enumerate(self.labels) if lab in faults), None)

    def steps_after_fault(self, faults: Iterable[str]) -> int | None:
        i = self.fault_index(faults)
        return None if i is None else len(self.labels) - i - 1

    def replay(self, a: FiniteAutomaton) -> None:
        if self.states[0] != a.initial:
            raise ReplayError(f"run starts in {self.states[0]}, not {a.initial}")
        for i, lab in enumerate(self.labels):
            if (self.states[i], lab, self.states[i + 1]) not in a.transitions:
                raise ReplayError(f"step {i}: no transition {self.states[i]} -{lab}-> {self.states[i + 1]}")

    def trace(self, a: FiniteAutomaton) -> tuple[str, ...]:
        self.replay(a)
        return tuple(lab for lab in self.labels if lab in a.events)


Move = Union[Fraction, Edge]


@dataclass(frozen=True)
class TaRun:
    """Alternating delays (``Fraction``) and discrete moves (``Edge``) from the initial state."""

    moves: tuple[Move, ...] = ()

    def replay(self, a: TimedAutomaton) -> list[tuple[str, dict[str, Fraction]]]:
        """Check the run step by step; return the state after every move."""
        loc, val = a.initial, zero_valuation(a.clocks)
        states = [(loc, dict(val))]
        for i, m in enumerate(self.moves):
            if isinstance(m, Edge):
                if m.src != loc:
                    raise ReplayError(f"move {i}: edge {m} does not leave {loc}")
                if m not in a.out_edges[loc]:
                    raise ReplayError(f"move {i}: {m} is not an edge of the automaton")
                if not m.guard.holds(val):
                    raise ReplayError(f"move {i}: guard {m.guard} fails at {fmt_valuation(val)}")
                val = {x: (Fraction(0) if x in m.resets else v) for x, v in val.items()}
                loc = m.dst
                if not a.invariant(loc).holds(val):
                    raise ReplayError(f"move {i}: invariant of {loc} fails on entry")
            else:
                d = Fraction(m)
                if d < 0:
                    raise ReplayError(f"move {i}: negative delay {d}")
                val = {x: v + d for x, v in val.items()}
                # invariants are upper bounds, so the end point decides the whole delay
                if not a.invariant(loc).holds(val):
                    raise ReplayError(f"move {i}: delay {d} leaves the invariant of {loc}")
            states.append((loc, dict(val)))
        return states

    def word(self) -> TimedWord:
        steps, pending = [], Fraction(0)
        for m in self.moves:
            if isinstance(m, Edge):
                steps.append((pending, m.label))
                pending = Fraction(0)
            else:
                pending += m
        return TimedWord(tuple(steps), pending)

    def trace(self, a: TimedAutomaton) -> TimedWord:
        self.replay(a)
        return project(self.word(), a.events)

    def fault_index(self, faults: Iterable[str]) -> int | None:
        faults = frozenset(faults)
        return next((i for i, m in enumerate(self.moves) if isinstance(m, Edge) and m.label in faults), None)

    def duration_after_fault(self, faults: Iterable[str]) -> Fraction | None:
        i = self.fault_index(faults)
        if i is None:
            return None
        return sum((m for m in self.moves[i + 1:] if not isinstance(m, Edge)), Fraction(0))

    def duration(self) -> Fraction:
        return sum((m for m in self.moves if not isinstance(m, Edge)), Fraction(0))


def fmt_valuation(val: Mapping[str, Fraction]) -> str:
    return "{" + ", ".join(f"{x}={v}" for x, v in sorted(val.items())) + "}"
