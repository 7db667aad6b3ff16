"""Operational semantics of the PROMELA subset used by the pattern translations."""

from .errors import (
    AssertionViolation, CompileError, DivideByZero, DStepViolation, IllegalTransition,
    IndexOutOfBounds, InvalidChannel, ModelError, ProcessLimit, UnboundName,
)
from .model import (
    MAX_PROCESSES, Model, ProcessInstance, ProcessView, SystemState, Transition,
    apply_transition, canonical_encoding, canonical_state_digest, enabled_transitions,
    eval_expr, is_valid_end_state,
)
from .syntax import *  # noqa: F401,F403
