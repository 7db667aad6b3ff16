"""Backend selection for the product search kernels.

The compiled ``_search`` extension is used when it was built; otherwise,
or when ``WFCHECK_PURE_PYTHON`` is set, the pure-Python twin is used. Both
return identical results.
"""

from __future__ import annotations

import os
from array import array
from types import ModuleType

from . import _search_py


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("WFCHECK_PURE_PYTHON"):
        return _search_py, "python"
    try:
        from . import _search  # type: ignore[attr-defined]
    except ImportError:
        return _search_py, "python"
    return _search, "cython"


_impl, BACKEND = _load()


def backend(name: str | None = None) -> ModuleType:
    """The kernel module for ``name`` ("cython"/"python"), default the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _search_py
    if name == "cython":
        from . import _search  # type: ignore[attr-defined]
        return _search
    raise ValueError(f"unknown search backend {name!r}")


def _i64(xs) -> array:
    return xs if isinstance(xs, array) and xs.typecode == "q" else array("q", xs)


def _u64(xs) -> array:
    return xs if isinstance(xs, array) and xs.typecode == "Q" else array("Q", xs)


def _pad(a: array) -> array:
    # zero-length buffers cannot be addressed from the compiled side
    return a if len(a) else array(a.typecode, [0])


def ndfs(graph, automaton, impl: ModuleType | None = None):
    impl = impl or _impl
    b_off, b_tgt, b_pos, b_neg, b_acc = automaton
    return impl.ndfs(_i64(graph.offsets), _pad(_i64(graph.targets)), _u64(graph.labels),
                     _i64(b_off), _pad(_i64(b_tgt)), _pad(_u64(b_pos)), _pad(_u64(b_neg)),
                     array("B", b_acc), 0)


def accepting_scc(graph, automaton, fair: bool, impl: ModuleType | None = None):
    impl = impl or _impl
    b_off, b_tgt, b_pos, b_neg, b_acc = automaton
    return impl.accepting_scc(_i64(graph.offsets), _pad(_i64(graph.targets)),
                              _pad(_i64(graph.movers)), _u64(graph.labels), _i64(b_off),
                              _pad(_i64(b_tgt)), _pad(_u64(b_pos)), _pad(_u64(b_neg)),
                              array("B", b_acc), 0, fair)
