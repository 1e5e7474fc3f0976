import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagcheck import FiniteAutomaton, TimedAutomaton
from diagcheck.des import check_diagnosable
from diagcheck.modelio import (
    ModelDocument,
    ModelParseError,
    export_dot,
    parse_model,
    render_verdict_json,
    serialize_model,
)
from diagcheck.randgen import random_fa, random_ta
from diagcheck.regions import build_region_graph
from diagcheck.timed import build_div, check_diagnosable_ta

from conftest import EXAMPLES, LOOP_A_A

SHIPPED = sorted(EXAMPLES.glob("*.diag"))


def test_parse_a3(example):
    doc = example("a_alpha_3.diag")
    a = doc.automaton
    assert doc.kind == "timed" and doc.name == "a_alpha_3"
    assert isinstance(a, TimedAutomaton)
    assert len(a.locations) == 6 and a.clocks == {"x"} and a.events == {"a", "b"}
    assert doc.faults == {"f"}
    assert doc.spans[("trans", 0)] == (12, 1)


def test_minimal_des():
    doc = parse_model("system des\nevents a\nstates q0\ninitial q0\n")
    assert isinstance(doc.automaton, FiniteAutomaton)
    assert doc.automaton.states == {"q0"} and doc.automaton.transitions == frozenset()


def test_comments_crlf_and_aliases():
    text = "# plant\r\nsystem timed   # kind\r\nclocks x\r\nevents a\r\nlocations l0 l1\r\ninitial l0\r\n" \
           'trans l0 a l1 guard "x >= 1 && x<3" reset x # edge\r\n'
    a = parse_model(text).automaton
    (e,) = a.edges
    assert str(e.guard) == "x<3&&x>=1" and e.resets == {"x"}


@pytest.mark.parametrize(
    "text, code, line",
    [
        ("system des\nevents a\nstates q0\ninitial q0\ntrans q0 a q9\n", "unknown-state", 5),
        ("system des\nevents a\nstates q0\ninitial q1\n", "unknown-state", 4),
        ("system des\nevents a\nstates q0\ninitial q0\ntrans q0 c q0\n", "unknown-label", 5),
        ("system des\nevents tau\nstates q0\ninitial q0\n", "reserved-name", 2),
        ("system des\nevents a f\nstates q0\ninitial q0\n", "reserved-name", 2),
        ("system timed\nclocks x\nevents a\nstates q0\ninitial q0\ninv q0 \"x>1\"\n", "bad-invariant", 6),
        ("system timed\nclocks x\nevents a\nstates q0\ninitial q0\ninv q0 \"y<1\"\n", "unknown-clock", 6),
        ("system timed\nclocks x\nevents a\nstates q0\ninitial q0\ntrans q0 a q0 reset z\n", "unknown-clock", 6),
        ("system timed\nclocks x\nevents a\nstates q0\ninitial q0\ntrans q0 a q0 guard \"x<1||x>2\"\n", "bad-atom", 6),
        ("system des\nevents a\nevents b\nstates q0\ninitial q0\n", "duplicate-declaration", 3),
        ("system des\nevents a\nstates q0 q0\ninitial q0\n", "duplicate-name", 3),
        ("system des\nevents a\nstates q0\ninitial q0\ntrans q0 a q0\ntrans q0 a q0\n", "duplicate-declaration", 6),
        ("events a\n", "missing-system", 1),
        ("system des\nevents a\ninitial q0\n", "missing-declaration", 1),
        ("system des\nclocks x\nevents a\nstates q0\ninitial q0\n", "timed-only", 2),
        ("system des\nevents a\nstates q0\ninitial q0\nfoo bar\n", "unknown-keyword", 5),
        ("system timed\nclocks x\nevents a\nstates q0\ninitial q0\ninv q0 \"x<0\"\n", "vacuous-model", 5),
        ('system timed\nclocks x\nevents a\nstates q0\ninitial q0\ntrans q0 a q0 guard "x<1\n', "syntax", 6),
    ],
)
def test_errors_carry_code_and_line(text, code, line):
    with pytest.raises(ModelParseError) as exc:
        parse_model(text)
    assert exc.value.code == code
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_error_column_points_at_token():
    with pytest.raises(ModelParseError) as exc:
        parse_model("system des\nevents a\nstates q0\ninitial q0\ntrans q0 a   q9\n")
    assert exc.value.column == 14


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.name)
def test_shipped_examples_round_trip(path):
    doc = parse_model(path.read_text())
    text = serialize_model(doc)
    again = parse_model(text)
    assert again == doc
    assert serialize_model(again) == text


def test_random_models_round_trip():
    for seed in range(100):
        rng = random.Random(seed)
        for a, kind in ((random_fa(rng), "des"), (random_ta(rng, 4, 2, 3), "timed")):
            doc = ModelDocument(kind, f"m{seed}", a, a.faults)
            assert parse_model(serialize_model(doc)) == doc


names = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True).filter(lambda s: s not in ("tau", "f"))


@settings(max_examples=60)
@given(st.lists(names, min_size=1, max_size=4, unique=True), st.lists(names, max_size=3, unique=True),
       st.data())
def test_round_trip_property(states, events, data):
    events = [e for e in events if e not in states]
    labels = events + ["tau", "f"]
    trans = data.draw(st.lists(st.tuples(st.sampled_from(states), st.sampled_from(labels), st.sampled_from(states)),
                               max_size=6))
    a = FiniteAutomaton(set(states), states[0], set(events), set(trans))
    doc = ModelDocument("des", None, a, a.faults)
    assert parse_model(serialize_model(doc)) == doc


# -- DOT ----------------------------------------------------------------------------


def test_dot_of_div():
    dot = export_dot(build_div("x"), "div")
    node_lines = [l for l in dot.splitlines() if "shape=" in l]
    edge_lines = [l for l in dot.splitlines() if "->" in l]
    assert len(node_lines) == 2 and len(edge_lines) == 2
    assert all("style=bold" in l for l in edge_lines)


def test_dot_is_deterministic(a3):
    rg = build_region_graph(a3)
    assert export_dot(rg) == export_dot(build_region_graph(a3))
    assert '"l1 | 3<x<4"' in export_dot(rg)
    assert export_dot(a3) == export_dot(parse_model(serialize_model(ModelDocument("timed", None, a3, a3.faults))).automaton)
    assert "style=dashed" in export_dot(LOOP_A_A)


def test_dot_rejects_other_objects():
    with pytest.raises(TypeError):
        export_dot(42)


# -- JSON ---------------------------------------------------------------------------


def test_verdict_json_for_a2(a2):
    v = check_diagnosable_ta(a2)
    text = render_verdict_json(v, "diagnosability", "a_alpha_2", initial=a2.initial)
    out = json.loads(text)
    assert out["diagnosable"] is False
    assert set(out["witness"]) == {"faultyRun", "nonFaultyRun", "cycleTicks"}
    assert out["witness"]["faultyRun"][0] == {"state": "l0"}
    assert any(s.get("label") == "f" for s in out["witness"]["faultyRun"])
    assert "timelockWarning" in out
    assert text == render_verdict_json(check_diagnosable_ta(a2), "diagnosability", "a_alpha_2", initial=a2.initial)


def test_verdict_json_for_des():
    out = json.loads(render_verdict_json(check_diagnosable(LOOP_A_A), model="loops"))
    assert out["problem"] == "diagnosability" and out["fault"] == "f" and out["boundUsed"] == 18
    steps = out["witness"]["faultyRun"]
    assert steps[0] == {"state": "q0"} and steps[1] == {"state": "q1", "label": "f"}
    assert "cycleTicks" not in out["witness"]
