"""Fault diagnosability of finite and timed automata."""

from .automata import (
    TAU,
    TRUE,
    ClockAtom,
    Edge,
    FaRun,
    FiniteAutomaton,
    Guard,
    ModelError,
    ReplayError,
    TaRun,
    TimedAutomaton,
    TimedWord,
    as_timed,
    complete_deadlocks,
    product,
    project,
    untime,
)
from .buchi import AnalysisGraph, LassoWitness, check_buchi_emptiness, check_final_emptiness
from .des import (
    DiagVerdict,
    build_buchi_twin,
    build_delta_twin,
    check_delta_diagnosable,
    check_diagnosable,
    diagnosability_bound,
    max_delay,
    multi_fault,
)
from .modelio import ModelDocument, ModelParseError, export_dot, load_model, parse_model, render_verdict_json, serialize_model
from .regions import Region, RegionGraph, build_region_graph, concretize, region_bound
from .timed import (
    TaDiagVerdict,
    alpha,
    alpha_bound,
    build_div,
    check_delta_diagnosable_ta,
    check_diagnosable_ta,
    check_timelock_free,
    max_delay_ta,
    reduce_reachability,
)

__version__ = "0.1.0"

__all__ = [
    "TAU",
    "TRUE",
    "ClockAtom",
    "Edge",
    "FaRun",
    "FiniteAutomaton",
    "Guard",
    "ModelError",
    "ReplayError",
    "TaRun",
    "TimedAutomaton",
    "TimedWord",
    "as_timed",
    "complete_deadlocks",
    "product",
    "project",
    "untime",
    "DiagVerdict",
    "build_buchi_twin",
    "build_delta_twin",
    "check_delta_diagnosable",
    "check_diagnosable",
    "diagnosability_bound",
    "max_delay",
    "multi_fault",
    "TaDiagVerdict",
    "alpha",
    "alpha_bound",
    "build_div",
    "check_delta_diagnosable_ta",
    "check_diagnosable_ta",
    "check_timelock_free",
    "max_delay_ta",
    "reduce_reachability",
    "AnalysisGraph",
    "LassoWitness",
    "check_buchi_emptiness",
    "check_final_emptiness",
    "ModelDocument",
    "ModelParseError",
    "export_dot",
    "load_model",
    "parse_model",
    "render_verdict_json",
    "serialize_model",
    "Region",
    "RegionGraph",
    "build_region_graph",
    "concretize",
    "region_bound",
]
