from pathlib import Path

import pytest

from diagcheck import FiniteAutomaton, load_model, parse_model

EXAMPLES = Path(__file__).resolve().parent.parent / "examples"

A_ALPHA = """\
system timed
name a_alpha_{k}
clocks x
events a b
locations l0 l1 l2 l3 l4 l5
initial l0
inv l1 "x<=6"
inv l2 "x<=6"
inv l4 "x<=3"
trans l0 a l1 reset x
trans l1 f l2 guard "x>{k}"
trans l1 tau l4 guard "x<=3"
trans l2 b l3
trans l4 b l5
"""


def a_alpha(k):
    """The timed plant whose fault can be told apart from the silent branch iff k >= 3."""
    return parse_model(A_ALPHA.format(k=k)).automaton


def fa(transitions, events=("a", "b"), initial="q0", faults=("f",)):
    states = {initial} | {s for s, _, _ in transitions} | {d for _, _, d in transitions}
    return FiniteAutomaton(states, initial, set(events), set(transitions), set(faults))


# f then a forever, or silently b forever
FAULT_A_TAU_B = fa([("q0", "f", "q1"), ("q1", "a", "q2"), ("q2", "a", "q2"),
                    ("q0", "tau", "q3"), ("q3", "b", "q4"), ("q4", "b", "q4")])
# f then a forever, or silently a forever
FAULT_A_TAU_A = fa([("q0", "f", "q1"), ("q1", "a", "q2"), ("q2", "a", "q2"),
                    ("q0", "tau", "q3"), ("q3", "a", "q4"), ("q4", "a", "q4")])
LOOP_A_A = fa([("q0", "f", "q1"), ("q1", "a", "q1"), ("q0", "tau", "q2"), ("q2", "a", "q2")])
LOOP_A_B = fa([("q0", "f", "q1"), ("q1", "a", "q1"), ("q0", "tau", "q2"), ("q2", "b", "q2")])
FAULT_FREE = fa([("q0", "a", "q1"), ("q1", "b", "q0"), ("q1", "tau", "q1")])


@pytest.fixture(scope="session")
def a3():
    return a_alpha(3)


@pytest.fixture(scope="session")
def a2():
    return a_alpha(2)


@pytest.fixture
def example():
    return lambda name: load_model(EXAMPLES / name)


# -- acceptance report ----------------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, ok, detail)`` then assert ``ok``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[n] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
