"""The ``.diag`` text format, DOT export and JSON verdicts.

A model file holds one declaration per line::

    system timed
    name a_alpha_3
    clocks x
    events a b
    locations l0 l1 l2
    initial l0
    inv l1 "x<=6"
    trans l0 a l1 reset x
    trans l1 f l2 guard "x>3"

``#`` starts a comment.  ``states`` and ``locations`` are synonyms, ``faults``
defaults to ``f``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .automata import (
    TAU,
    ClockAtom,
    Edge,
    FaRun,
    FiniteAutomaton,
    Guard,
    ModelError,
    TaRun,
    TimedAutomaton,
)
from .regions import DELAY, RegionGraph

KEYWORDS = ("system", "name", "clocks", "events", "faults", "states", "locations",
            "initial", "inv", "trans", "final", "repeated")
TIMED_ONLY = ("clocks", "inv")

_TOKEN = re.compile(r'"[^"]*"|[^\s"]+|"')
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-']*$")
_ATOM = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*(<=|>=|==|<|>)\s*(\d+)$")


class ModelParseError(ModelError):
    def __init__(self, message, code, line=0, column=0):
        super().__init__(message, code)
        self.line = line
        self.column = column

    def __str__(self):
        return f"line {self.line}, column {self.column}: {self.args[0]} [{self.code}]"


@dataclass(frozen=True)
class ModelDocument:
    kind: str
    name: str | None
    automaton: FiniteAutomaton | TimedAutomaton
    faults: frozenset[str]
    spans: dict = field(default_factory=dict, compare=False, repr=False)


# ---------------------------------------------------------------------------
# parsing


def _tokens(line: str):
    """``(column, token)`` pairs of a line, comments removed.  Columns are 1-based."""
    out = []
    for m in _TOKEN.finditer(line):
        tok = m.group()
        if tok.startswith("#"):
            break
        if tok == '"':
            raise ModelParseError("unterminated string", "syntax", column=m.start() + 1)
        if "#" in tok and not tok.startswith('"'):
            tok = tok[: tok.index("#")]
            out.append((m.start() + 1, tok))
            break
        out.append((m.start() + 1, tok))
    return out


def parse_guard(text: str, line: int = 0, column: int = 0) -> Guard:
    text = text.strip()
    if text in ("", "true"):
        return Guard()
    atoms = []
    for part in text.split("&&"):
        m = _ATOM.match(part.strip())
        if not m:
            raise ModelParseError(f"malformed clock constraint {part.strip()!r}", "bad-atom", line, column)
        atoms.append(ClockAtom(m.group(1), m.group(2), int(m.group(3))))
    return Guard(tuple(atoms))


class _Parser:
    def __init__(self, text: str):
        self.lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        self.decl: dict[str, tuple[int, list]] = {}
        self.invs: list = []
        self.trans: list = []
        self.spans: dict = {}

    def fail(self, message, code, line, col=1):
        raise ModelParseError(message, code, line, col)

    def run(self) -> ModelDocument:
        for no, raw in enumerate(self.lines, 1):
            try:
                toks = _tokens(raw)
            except ModelParseError as exc:
                self.fail(exc.args[0], exc.code, no, exc.column)
            if not toks:
                continue
            col, kw = toks[0]
            if kw not in KEYWORDS:
                self.fail(f"unknown declaration {kw!r}", "unknown-keyword", no, col)
            if kw == "locations":
                kw = "states"
            if kw != "system" and "system" not in self.decl:
                self.fail("the first declaration must be 'system des' or 'system timed'", "missing-system", no, col)
            if kw == "inv":
                self.invs.append((no, toks))
            elif kw == "trans":
                self.trans.append((no, toks))
            elif kw in self.decl:
                self.fail(f"duplicate {kw!r} declaration (first on line {self.decl[kw][0]})", "duplicate-declaration", no, col)
            else:
                self.decl[kw] = (no, toks)
        return self.build()

    def idents(self, kw, at_least=0, at_most=None):
        if kw not in self.decl:
            return None, []
        no, toks = self.decl[kw]
        args = toks[1:]
        if len(args) < at_least or (at_most is not None and len(args) > at_most):
            self.fail(f"wrong number of arguments for {kw!r}", "syntax", no, toks[0][0])
        seen = set()
        for col, name in args:
            if not _IDENT.match(name):
                self.fail(f"invalid name {name!r}", "bad-name", no, col)
            if name in seen:
                self.fail(f"{name!r} listed twice", "duplicate-name", no, col)
            seen.add(name)
            self.spans.setdefault((kw, name), (no, col))
        return no, [n for _, n in args]

    def build(self) -> ModelDocument:
        if "system" not in self.decl:
            self.fail("empty model: 'system' declaration missing", "missing-system", max(1, len(self.lines)))
        no, toks = self.decl["system"]
        if len(toks) != 2 or toks[1][1] not in ("des", "timed"):
            self.fail("expected 'system des' or 'system timed'", "syntax", no, toks[0][0])
        kind = toks[1][1]
        if kind == "des":
            for kw in TIMED_ONLY:
                if kw in self.decl:
                    self.fail(f"{kw!r} is only allowed in timed models", "timed-only", self.decl[kw][0])
            if self.invs:
                self.fail("'inv' is only allowed in timed models", "timed-only", self.invs[0][0])
        _, name = self.idents("name", 1, 1)
        _, clocks = self.idents("clocks", 1)
        ev_line, events = self.idents("events")
        fl_line, faults = self.idents("faults", 1)
        if fl_line is None:
            faults = ["f"]
        st_line, states = self.idents("states", 1)
        if st_line is None:
            self.fail("no 'states' declaration", "missing-declaration", self.decl["system"][0])
        in_line, initial = self.idents("initial", 1, 1)
        if in_line is None:
            self.fail("no 'initial' declaration", "missing-declaration", self.decl["system"][0])
        _, final = self.idents("final")
        _, repeated = self.idents("repeated")

        for kw, names in (("events", events), ("faults", faults)):
            for n in names:
                if n == TAU:
                    self.fail("'tau' is reserved", "reserved-name", *self.spans[(kw, n)])
        for n in events:
            if n in faults:
                self.fail(f"{n!r} is declared as a fault label and cannot be observable", "reserved-name",
                          *self.spans[("events", n)])
        state_set = set(states)
        for kw, names in (("initial", initial), ("final", final), ("repeated", repeated)):
            for n in names:
                if n not in state_set:
                    self.fail(f"unknown state {n!r}", "unknown-state", *self.spans[(kw, n)])
        clock_set = set(clocks)
        labels = set(events) | set(faults) | {TAU}

        invariants = {}
        for no, toks in self.invs:
            if len(toks) != 3 or not toks[2][1].startswith('"'):
                self.fail('expected inv <state> "<constraint>"', "syntax", no, toks[0][0])
            (_, _), (scol, s), (gcol, text) = toks
            if s not in state_set:
                self.fail(f"unknown state {s!r}", "unknown-state", no, scol)
            if s in invariants:
                self.fail(f"second invariant for {s!r}", "duplicate-declaration", no, toks[0][0])
            g = parse_guard(text[1:-1], no, gcol)
            self.check_clocks(g, clock_set, no, gcol)
            if not g.is_upper_bound():
                self.fail(f"invariant of {s!r} must only use < and <=", "bad-invariant", no, gcol)
            invariants[s] = g
            self.spans[("inv", s)] = (no, toks[0][0])

        edges = []
        seen_edges = {}
        for no, toks in self.trans:
            if len(toks) < 4:
                self.fail("expected trans <src> <label> <dst> [guard \"...\"] [reset x,y]", "syntax", no, toks[0][0])
            (_, _), (c1, src), (c2, lab), (c3, dst) = toks[:4]
            for col, s in ((c1, src), (c3, dst)):
                if s not in state_set:
                    self.fail(f"unknown state {s!r}", "unknown-state", no, col)
            if lab not in labels:
                self.fail(f"unknown label {lab!r}", "unknown-label", no, c2)
            guard, resets = Guard(), frozenset()
            rest = toks[4:]
            seen_opts = set()
            while rest:
                (col, opt), *rest = rest
                if opt in seen_opts or opt not in ("guard", "reset") or not rest:
                    self.fail(f"unexpected {opt!r}", "syntax", no, col)
                if kind == "des":
                    self.fail(f"{opt!r} is only allowed in timed models", "timed-only", no, col)
                seen_opts.add(opt)
                (acol, arg), *rest = rest
                if opt == "guard":
                    if not arg.startswith('"'):
                        self.fail("guard must be quoted", "syntax", no, acol)
                    guard = parse_guard(arg[1:-1], no, acol)
                    self.check_clocks(guard, clock_set, no, acol)
                else:
                    names = arg.split(",")
                    for n in names:
                        if n not in clock_set:
                            self.fail(f"unknown clock {n!r}", "unknown-clock", no, acol)
                    resets = frozenset(names)
            key = (src, lab, dst, guard, resets)
            if key in seen_edges:
                self.fail(f"duplicate transition (first on line {seen_edges[key]})", "duplicate-declaration", no, toks[0][0])
            seen_edges[key] = no
            edges.append(Edge(src, lab, dst, guard, resets))
            self.spans[("trans", len(edges) - 1)] = (no, toks[0][0])

        try:
            if kind == "des":
                a = FiniteAutomaton(set(states), initial[0], set(events),
                                    {(e.src, e.label, e.dst) for e in edges}, set(faults),
                                    set(final), set(repeated))
            else:
                a = TimedAutomaton(set(states), initial[0], set(clocks), set(events), tuple(edges),
                                   invariants, set(faults), set(final), set(repeated))
        except ModelError as exc:
            raise ModelParseError(exc.args[0], exc.code, in_line, 1) from None
        return ModelDocument(kind, name[0] if name else None, a, frozenset(faults), self.spans)

    def check_clocks(self, g: Guard, clocks, no, col):
        for c in sorted(g.clocks()):
            if c not in clocks:
                self.fail(f"unknown clock {c!r}", "unknown-clock", no, col)


def parse_model(text: str) -> ModelDocument:
    return _Parser(text).run()


def load_model(path) -> ModelDocument:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_model(fh.read())


def serialize_model(doc: ModelDocument) -> str:
    a = doc.automaton
    timed = isinstance(a, TimedAutomaton)
    out = [f"system {'timed' if timed else 'des'}"]
    if doc.name:
        out.append(f"name {doc.name}")
    if timed and a.clocks:
        out.append("clocks " + " ".join(sorted(a.clocks)))
    out.append("events " + " ".join(sorted(a.events)))
    if a.faults != {"f"}:
        out.append("faults " + " ".join(sorted(a.faults)))
    states = a.locations if timed else a.states
    out.append(f"{'locations' if timed else 'states'} " + " ".join(sorted(states)))
    out.append(f"initial {a.initial}")
    if timed:
        for loc in sorted(a.invariants):
            out.append(f'inv {loc} "{a.invariants[loc]}"')
        for e in a.edges:
            line = f"trans {e.src} {e.label} {e.dst}"
            if e.guard.atoms:
                line += f' guard "{e.guard}"'
            if e.resets:
                line += " reset " + ",".join(sorted(e.resets))
            out.append(line)
    else:
        out.extend(f"trans {s} {l} {d}" for s, l, d in a.sorted_transitions)
    if a.final:
        out.append("final " + " ".join(sorted(a.final)))
    if a.repeated:
        out.append("repeated " + " ".join(sorted(a.repeated)))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# DOT


def _q(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def is_tick_edge(e: Edge) -> bool:
    if e.tag == "tick":
        return True
    if isinstance(e.tag, tuple):
        return any(isinstance(c, Edge) and is_tick_edge(c) for c in e.tag)
    return False


def _edge_label(e: Edge) -> str:
    text = e.label
    if e.guard.atoms:
        text += f" [{e.guard}]"
    if e.resets:
        text += " {" + ",".join(sorted(e.resets)) + "}"
    return text


def export_dot(obj, name: str = "model") -> str:
    """Graphviz source for an automaton or a region graph, nodes and edges sorted."""
    lines = [f"digraph {_q(name)} {{", "  rankdir=LR;"]
    if isinstance(obj, RegionGraph):
        nodes = sorted(obj.graph.nodes, key=lambda s: (s[0], str(s[1])))
        ids = {n: f"s{i}" for i, n in enumerate(nodes)}
        for n in nodes:
            shape = "doublecircle" if n == obj.graph.initial else "box"
            lines.append(f"  {ids[n]} [label={_q(f'{n[0]} | {n[1]}')}, shape={shape}];")
        rows = []
        for src, tag, dst in obj.graph.edges:
            if tag == DELAY:
                rows.append((ids[src], ids[dst], "delay", "style=dashed"))
            else:
                style = "style=bold, color=blue" if is_tick_edge(tag) else ""
                rows.append((ids[src], ids[dst], tag.label, style))
        for s, d, lab, style in sorted(set(rows)):
            attrs = f"label={_q(lab)}" + (f", {style}" if style else "")
            lines.append(f"  {s} -> {d} [{attrs}];")
    elif isinstance(obj, TimedAutomaton):
        for loc in sorted(obj.locations):
            label = loc + (f" ({obj.invariant(loc)})" if loc in obj.invariants else "")
            shape = "doublecircle" if loc == obj.initial else "circle"
            lines.append(f"  {_q(loc)} [label={_q(label)}, shape={shape}];")
        for e in obj.edges:
            style = ", style=bold, color=blue" if is_tick_edge(e) else ""
            lines.append(f"  {_q(e.src)} -> {_q(e.dst)} [label={_q(_edge_label(e))}{style}];")
    elif isinstance(obj, FiniteAutomaton):
        for q in sorted(obj.states):
            shape = "doublecircle" if q == obj.initial else "circle"
            lines.append(f"  {_q(q)} [shape={shape}];")
        for s, l, d in obj.sorted_transitions:
            style = ", style=dashed" if obj.kind(l) != "obs" else ""
            lines.append(f"  {_q(s)} -> {_q(d)} [label={_q(l)}{style}];")
    else:
        raise TypeError(f"cannot export {type(obj).__name__} to DOT")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON


def _num(x: Fraction) -> str:
    return str(Fraction(x))


def run_steps(run, initial: str | None = None) -> list[dict]:
    """JSON steps of a run; timed runs need the initial location to name their first state."""
    if isinstance(run, FaRun):
        steps = [{"state": run.states[0]}]
        steps += [{"state": s, "label": l} for l, s in zip(run.labels, run.states[1:])]
        return steps
    if isinstance(run, TaRun):
        loc = initial
        steps = [{"state": loc}]
        for m in run.moves:
            if isinstance(m, Edge):
                loc = m.dst
                steps.append({"state": loc, "label": m.label})
            else:
                steps.append({"state": loc, "delay": _num(m)})
        return steps
    raise TypeError(f"not a run: {run!r}")


_MISSING = object()


def verdict_dict(verdict, problem: str, model: str | None, max_delay=_MISSING, initial: str | None = None) -> dict:
    out = {"problem": problem, "model": model, "fault": verdict.fault, "diagnosable": verdict.diagnosable}
    if verdict.delta is not None:
        out["delta"] = verdict.delta
    if max_delay is not _MISSING:
        out["maxDelay"] = max_delay
    bound = getattr(verdict, "bound_used", None)
    if bound is None:
        bound = getattr(verdict, "alpha_bound", None)
    if bound is not None:
        out["boundUsed"] = bound
    if getattr(verdict, "timelock_warning", None):
        out["timelockWarning"] = verdict.timelock_warning
    if verdict.witness is not None:
        r1, r2 = verdict.witness
        w = {"faultyRun": run_steps(r1, initial), "nonFaultyRun": run_steps(r2, initial)}
        if getattr(verdict, "cycle_ticks", None) is not None:
            w["cycleTicks"] = verdict.cycle_ticks
        out["witness"] = w
    return out


def render_verdict_json(verdict, problem: str = "diagnosability", model: str | None = None,
                        max_delay=_MISSING, initial: str | None = None) -> str:
    return json.dumps(verdict_dict(verdict, problem, model, max_delay, initial), indent=2) + "\n"

