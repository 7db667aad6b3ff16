"""Fixture loading and mutation helpers shared by the test modules."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import wfcheck
from wfcheck.dsl import compile_to_kernel, parse_workflow

FIXTURES = Path(wfcheck.__file__).parent / "fixtures"
GOLDEN = FIXTURES / "travel_agency.wf"
REPAIRED = FIXTURES / "travel_agency_repaired.wf"
PATTERN_FIXTURES = sorted(p.name for p in FIXTURES.glob("pattern_*.wf"))
ALL_FIXTURES = sorted(p.name for p in FIXTURES.glob("*.wf"))


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def mutate(text: str, old: str, new: str = "") -> str:
    """Replace the single occurrence of ``old``; fails loudly if it is not unique."""
    assert text.count(old) == 1, f"{old!r} occurs {text.count(old)} times"
    return text.replace(old, new)


def compile_text(text: str, mode: str = "flags", **kw):
    return compile_to_kernel(parse_workflow(text), mode, **kw)


@lru_cache(maxsize=None)
def compiled(name: str, mode: str = "flags", strict: bool = False):
    return compile_text(fixture_text(name), mode, strict=strict)


# Book's escape path without the failure notice to SendFailure
NO_FAILURE_NOTICE = ("  } on_cancel {\n    send(q2, 1);\n  }", "  } on_cancel {\n  }")


def golden_without_failure_notice() -> str:
    return mutate(fixture_text("travel_agency.wf"), *NO_FAILURE_NOTICE)


def split_missing_one(name: str) -> str:
    """Book's parallel split sends one token fewer than the synchronization awaits."""
    return mutate(fixture_text(name), "parallel_split(qs, 2, 1);", "parallel_split(qs, 1, 1);")


MUTANTS = {
    "golden-nofail": lambda: golden_without_failure_notice(),
    "golden-split": lambda: split_missing_one("travel_agency.wf"),
    "repaired-split": lambda: split_missing_one("travel_agency_repaired.wf"),
}


@lru_cache(maxsize=None)
def compiled_mutant(key: str, mode: str = "flags"):
    return compile_text(MUTANTS[key](), mode)


@lru_cache(maxsize=None)
def graph_of(key: str, mode: str = "flags"):
    """Explored graph of a fixture file name or a mutant key, cached per session."""
    from wfcheck.checker import explore
    cw = compiled_mutant(key, mode) if key in MUTANTS else compiled(key, mode)
    return cw, explore(cw.model)


@lru_cache(maxsize=None)
def reach_of(key: str, mode: str = "flags"):
    """The independent BFS oracle's state space, cached like :func:`graph_of`."""
    from oracles import bfs
    return bfs(graph_of(key, mode)[0].model)
