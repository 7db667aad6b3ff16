"""Static checks on parsed workflow definitions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..kernel.syntax import BinOp, Const, Expr, Index, Len, UnOp, Var
from ..ltl import LTLSyntaxError, UnknownProposition, parse_formula
from ..patterns import DEFAULT_MAX_ARRAY_SIZE, ProcessRegistry
from .ast import (
    AliasStmt, AssignStmt, CancelActivityStmt, Loc, MilestoneStmt, NdetStmt, PatternStmt,
    Reached, RecvStmt, RunStmt, SendStmt, VarStmt, WorkflowDef,
)

RESERVED = {"s", "done", "myRun", "init", "_pid", "timeout", "else"}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    loc: Loc = Loc()

    def __str__(self) -> str:
        return f"{self.loc}: {self.severity}: {self.code}: {self.message}"


def registry_of(d: WorkflowDef) -> Optional[ProcessRegistry]:
    """Process ids with the implicit case root ``0`` (parent -1), or None."""
    if not any(p.pid is not None for p in d.processes):
        return None
    reg = ProcessRegistry()
    if not any(p.pid == 0 for p in d.processes):
        reg.entries[0] = None
        reg.parents[0] = -1
    for p in d.processes:
        if p.pid is None:
            continue
        if p.pid in reg.entries:
            continue  # reported as DUPLICATE_ID
        reg.entries[p.pid] = p.name
        reg.parents[p.pid] = -1 if p.parent is None else p.parent
    return reg


def milestones_of(d: WorkflowDef) -> dict[int, str]:
    out: dict[int, str] = {}

    def walk(body, owner):
        for s in body:
            match s:
                case MilestoneStmt(k):
                    out.setdefault(k, owner)
                case NdetStmt(branches):
                    for b in branches:
                        walk(b, owner)
                case CancelActivityStmt(_, b):
                    walk(b, owner)

    for p in d.processes:
        walk(p.body, p.name)
        walk(p.on_cancel, p.name)
    return out


def _reached(e: Expr) -> list[int]:
    match e:
        case Reached(k):
            return [k]
        case BinOp(_, a, b):
            return _reached(a) + _reached(b)
        case UnOp(_, a):
            return _reached(a)
    return []


def validate_workflow(d: WorkflowDef, max_array_size: int = DEFAULT_MAX_ARRAY_SIZE
                      ) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    def err(code, msg, loc=Loc()):
        out.append(Diagnostic("error", code, msg, loc))

    def warn(code, msg, loc=Loc()):
        out.append(Diagnostic("warning", code, msg, loc))

    chans = {}
    for c in d.channels:
        if c.name in chans:
            err("DUPLICATE_NAME", f"channel '{c.name}' declared twice", c.loc)
        if c.name in RESERVED:
            err("RESERVED_NAME", f"'{c.name}' is reserved", c.loc)
        if c.size is not None and not 1 <= c.size:
            err("CHANNEL_ARITY", f"channel array '{c.name}' needs a positive size", c.loc)
        if c.capacity < 0:
            err("CHANNEL_CAPACITY", f"channel '{c.name}' has negative capacity", c.loc)
        chans[c.name] = c.size
    gvars = {}
    for g in d.globals:
        if g.name in chans or g.name in gvars:
            err("DUPLICATE_NAME", f"global '{g.name}' declared twice", g.loc)
        if g.name in RESERVED:
            err("RESERVED_NAME", f"'{g.name}' is reserved", g.loc)
        if g.size is not None and g.size < 1:
            err("ARRAY_SIZE", f"array '{g.name}' needs a positive size", g.loc)
        gvars[g.name] = g.size
    parents_vars = [g for g in d.globals if g.parents]
    if len(parents_vars) > 1:
        err("PARENTS_VAR", "only one global may hold the parent relation", parents_vars[1].loc)

    names = {}
    for p in d.processes:
        if p.name in names:
            err("DUPLICATE_PROCESS", f"process '{p.name}' declared twice", p.loc)
        if p.name in RESERVED:
            err("RESERVED_NAME", f"'{p.name}' is reserved", p.loc)
        names[p.name] = p
    ids = {}
    for p in d.processes:
        if p.pid is None:
            if p.parent is not None:
                err("MISSING_ID", f"process '{p.name}' has a parent but no id", p.loc)
            if p.cancellable:
                err("MISSING_ID", f"cancellable process '{p.name}' needs an id", p.loc)
            continue
        if p.pid in ids:
            err("DUPLICATE_ID", f"id {p.pid} used by '{ids[p.pid]}' and '{p.name}'", p.loc)
        ids[p.pid] = p.name
    reg = registry_of(d)
    if reg is not None:
        for code, msg in reg.problems():
            err(code, msg, d.loc)
        if not parents_vars and any(p.cancellable for p in d.processes):
            err("PARENTS_VAR", "cancel case needs a 'var ... parents;' array", d.loc)
        for g in parents_vars:
            if g.size is None or g.size < reg.size:
                err("PARENTS_VAR", f"'{g.name}' must hold {reg.size} entries", g.loc)

    cancel_chans = [c for c in d.channels if c.cancel]
    if any(p.cancellable for p in d.processes):
        if not cancel_chans:
            err("CANCEL_CHANNEL_MISSING", "cancellable processes need a 'cancel' channel array",
                d.loc)
        else:
            cc = cancel_chans[0]
            for p in d.processes:
                if p.cancellable and p.pid is not None and (cc.size is None or p.pid >= cc.size):
                    err("CANCEL_CHANNEL_MISSING",
                        f"'{cc.name}' has no slot for id {p.pid} of '{p.name}'", p.loc)
            if cc.size is not None and cc.size > max_array_size:
                err("SIZE_EXCEEDS_MAX", f"cancelCase sizeq {cc.size} ('{cc.name}') "
                    f"exceeds MAXARRAYSIZE {max_array_size}", cc.loc)
    if len(cancel_chans) > 1:
        err("CANCEL_CHANNEL", "only one channel array may be marked 'cancel'", cancel_chans[1].loc)

    for p in d.processes:
        local: dict[str, tuple[str, Optional[int]]] = {}
        _check_body(p.body, p, d, chans, gvars, local, names, reg, max_array_size, err, warn)
        _check_body(p.on_cancel, p, d, chans, gvars, local, names, reg, max_array_size,
                    err, warn)
        if p.on_cancel and not p.cancellable:
            warn("ON_CANCEL_UNUSED", f"'{p.name}' has on_cancel but is not cancellable", p.loc)
    for r in d.init:
        if r.process not in names:
            err("UNKNOWN_PROCESS", f"init runs undeclared process '{r.process}'", r.loc)

    ms = milestones_of(d)
    for k in ms:
        if k < 1:
            err("MILESTONE_INDEX", f"milestone {k} must be positive (0 is the start)", d.loc)
    all_props = {pr.name for pr in d.props}
    for pr in d.props:
        _check_pred(pr.pred, gvars, ms, err, pr.loc)
    for x in d.ltls:
        for b in x.bindings:
            _check_pred(b.pred, gvars, ms, err, b.loc)
        try:
            parse_formula(x.formula, all_props | {b.name for b in x.bindings})
        except LTLSyntaxError as exc:
            err("LTL_SYNTAX", f"property '{x.name}': {exc}", x.loc)
        except UnknownProposition as exc:
            err("UNKNOWN_PROPOSITION", f"property '{x.name}': {exc}", x.loc)
    return out


def _check_pred(e: Expr, gvars, ms, err, loc) -> None:
    for k in _reached(e):
        if k != 0 and k not in ms:
            err("UNKNOWN_MILESTONE", f"reached({k}) names no milestone", loc)
    for name in _names(e):
        if name not in gvars:
            err("UNKNOWN_NAME", f"proposition uses undeclared global '{name}'", loc)


def _names(e: Expr) -> list[str]:
    match e:
        case Var(n):
            return [n]
        case Index(n, i):
            return [n] + _names(i)
        case BinOp(_, a, b):
            return _names(a) + _names(b)
        case UnOp(_, a):
            return _names(a)
        case Len(c):
            return _names(c)
    return []


def _check_body(body, p, d, chans, gvars, local, procs, reg, max_size, err, warn) -> None:
    def chan_size(e: Expr, loc) -> Optional[int]:
        """Array size of the channel array named by ``e``; checks the reference."""
        name = e.name if isinstance(e, (Var, Index)) else None
        if name is None:
            err("UNKNOWN_CHANNEL", "channel reference expected", loc)
            return None
        if name in local and local[name][0] == "chan":
            size = local[name][1]
        elif name in chans:
            size = chans[name]
        else:
            err("UNKNOWN_CHANNEL", f"'{name}' is not a declared channel", loc)
            return None
        if isinstance(e, Index):
            if size is None:
                err("UNKNOWN_CHANNEL", f"'{name}' is not a channel array", loc)
            elif isinstance(e.index, Const) and not 0 <= e.index.value < size:
                err("INDEX_OUT_OF_RANGE", f"{name}[{e.index.value}] outside 0..{size - 1}", loc)
        elif size is not None:
            err("UNKNOWN_CHANNEL", f"'{name}' is a channel array; index it", loc)
        return size

    for s in body:
        match s:
            case VarStmt(name, size, _, loc):
                if name in local or name in RESERVED:
                    err("DUPLICATE_NAME", f"local '{name}' declared twice or reserved", loc)
                local[name] = ("int", size)
            case AliasStmt(name, cs, loc):
                if name in local:
                    err("DUPLICATE_NAME", f"local '{name}' declared twice", loc)
                for c in cs:
                    chan_size(c, loc)
                local[name] = ("chan", len(cs))
            case SendStmt(ch, _, loc):
                chan_size(ch, loc)
            case RecvStmt(ch, _, loc):
                chan_size(ch, loc)
            case RunStmt(name, loc):
                if name not in procs:
                    err("UNKNOWN_PROCESS", f"run of undeclared process '{name}'", loc)
            case PatternStmt(kind, chan, size, args, loc):
                arr = chan_size(Index(chan, Const(0)), loc) if (
                    chan in chans or chan in local) else chan_size(Var(chan), loc)
                if size < 1:
                    err("PATTERN_ARITY", f"{kind} needs a positive size", loc)
                if size > max_size:
                    err("SIZE_EXCEEDS_MAX", f"{kind} sizeq {size} exceeds MAXARRAYSIZE {max_size}",
                        loc)
                if arr is not None and size > arr:
                    err("CHANNEL_ARITY", f"{kind} over {size} channels but '{chan}' has {arr}", loc)
                want = {"parallel_split": (1,), "sync": (0, 1), "choice": (2,), "merge": (0, 1)}
                if len(args) not in want[kind]:
                    err("PATTERN_ARITY", f"{kind} takes {' or '.join(map(str, want[kind]))} "
                        f"argument(s) after the size", loc)
                elif kind == "choice" and isinstance(args[0], Const) and not 0 <= args[0].value < size:
                    warn("CHOICE_OUT_OF_RANGE",
                         f"choice {args[0].value} outside 0..{size - 1}; the choice is a no-op", loc)
                elif kind == "sync" and args and not (
                        isinstance(args[0], Var) and local.get(args[0].name, ("", None))[1]):
                    err("PATTERN_ARITY", "sync stores messages in a local array", loc)
            case NdetStmt(branches, loc):
                if len(branches) < 1:
                    err("NDET_EMPTY", "ndet needs at least one branch", loc)
                for b in branches:
                    _check_body(b, p, d, chans, gvars, local, procs, reg, max_size, err, warn)
            case CancelActivityStmt(ch, b, loc):
                chan_size(ch, loc)
                _check_body(b, p, d, chans, gvars, local, procs, reg, max_size, err, warn)
            case AssignStmt():
                pass
