"""Workflow definitions as parsed from ``.wf`` source.

Source positions are kept for diagnostics but excluded from equality, so a
definition compares equal to the result of re-parsing its printed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..kernel.syntax import Expr


@dataclass(frozen=True)
class Loc:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


_NOLOC = Loc()


def _loc():
    return field(default=_NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Reached(Expr):
    """Milestone ``k`` has been passed (``k = 0`` is the start of the case)."""

    milestone: int


# ---------------------------------------------------------------------------
# statements


class WfStmt:
    pass


@dataclass(frozen=True)
class SendStmt(WfStmt):
    chan: Expr
    msg: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class RecvStmt(WfStmt):
    chan: Expr
    target: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class AssignStmt(WfStmt):
    target: Expr
    expr: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class SkipStmt(WfStmt):
    loc: Loc = _loc()


@dataclass(frozen=True)
class VarStmt(WfStmt):
    name: str
    size: Optional[int] = None
    init: int = 0
    loc: Loc = _loc()


@dataclass(frozen=True)
class AliasStmt(WfStmt):
    """Local channel array whose elements refer to existing channels."""

    name: str
    chans: tuple  # tuple[Expr, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class RunStmt(WfStmt):
    process: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class MilestoneStmt(WfStmt):
    index: int
    loc: Loc = _loc()


@dataclass(frozen=True)
class NdetStmt(WfStmt):
    branches: tuple  # tuple[tuple[WfStmt, ...], ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class EndLabelStmt(WfStmt):
    """``end:`` marks the next location as a valid place to stop forever."""

    loc: Loc = _loc()


PATTERN_KINDS = ("parallel_split", "sync", "choice", "merge")


@dataclass(frozen=True)
class PatternStmt(WfStmt):
    """``parallel_split(qs, n, msg)``, ``sync(qs, n[, msgs])``,
    ``choice(qs, n, choice, msg)`` or ``merge(qs, n[, x])``."""

    kind: str
    chan: str
    size: int
    args: tuple = ()  # tuple[Expr, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class CancelActivityStmt(WfStmt):
    chan: Expr
    body: tuple
    loc: Loc = _loc()


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    size: Optional[int] = None
    capacity: int = 1
    cancel: bool = False
    loc: Loc = _loc()


@dataclass(frozen=True)
class GlobalVar:
    name: str
    size: Optional[int] = None
    init: int = 0
    parents: bool = False  # holds the process parent relation
    loc: Loc = _loc()


@dataclass(frozen=True)
class ProcessDef:
    name: str
    pid: Optional[int] = None
    parent: Optional[int] = None
    cancellable: bool = False
    body: tuple = ()
    on_cancel: tuple = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class PropDef:
    name: str
    pred: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class LtlDef:
    name: str
    formula: str
    bindings: tuple = ()  # tuple[PropDef, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class WorkflowDef:
    name: str
    channels: tuple = ()
    globals: tuple = ()
    processes: tuple = ()
    init: tuple = ()  # tuple[RunStmt, ...]
    props: tuple = ()
    ltls: tuple = ()
    loc: Loc = _loc()

    def process(self, name: str) -> Optional[ProcessDef]:
        return next((p for p in self.processes if p.name == name), None)

    def channel(self, name: str) -> Optional[ChannelSpec]:
        return next((c for c in self.channels if c.name == name), None)

    def ltl(self, name: str) -> Optional[LtlDef]:
        return next((x for x in self.ltls if x.name == name), None)


Stmt = Union[SendStmt, RecvStmt, AssignStmt, SkipStmt, VarStmt, AliasStmt, RunStmt,
             MilestoneStmt, NdetStmt, PatternStmt, CancelActivityStmt, EndLabelStmt]
