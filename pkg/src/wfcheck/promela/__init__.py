"""PROMELA emission: the pattern library and complete model files."""

from .emit import (
    EmitError, EmitUnsupported, check_config, emit_files, emit_ltl, emit_model_source,
    merge_sizes, required_sizes,
)
from .library import (
    CANCEL_CASE, EXCLUSIVE_CHOICE, PARALLEL_SPLIT, RECV, SEND, SYNCHRONIZATION, EmitConfig,
    emit_pattern_library, simple_merge,
)
from .spin import SpinResult, spin_available, syntax_check, verify

__all__ = [n for n in dir() if not n.startswith("_")]
