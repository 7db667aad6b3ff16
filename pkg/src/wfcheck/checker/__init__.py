from .core import (
    DEADLOCK, HOLDS, MODEL_ERROR, VIOLATED, ReachabilityReport, ShapeUnsupported,
    SimulationResult, VacuityReport, Verdict, check_deadlock, check_ltl_property,
    detect_vacuity, explore_statespace, simulate,
)
from .graph import STUTTER, Limits, StateGraph, explore
from .search import BACKEND
from .trace import (
    Trace, TraceReplayError, TraceStep, build_trace, format_counterexample, replay,
    trace_records,
)

__all__ = [
    "BACKEND", "DEADLOCK", "HOLDS", "Limits", "MODEL_ERROR", "ReachabilityReport", "STUTTER",
    "ShapeUnsupported", "SimulationResult", "StateGraph", "Trace", "TraceReplayError",
    "TraceStep", "VIOLATED", "VacuityReport", "Verdict", "build_trace", "check_deadlock",
    "check_ltl_property", "detect_vacuity", "explore", "explore_statespace",
    "format_counterexample", "replay", "simulate", "trace_records",
]
