"""Compile workflow definitions into kernel models via the pattern expansions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..kernel import CompileError, Model
from ..kernel.syntax import (
    Assign, Atomic, BinOp, ChannelDecl, Const, Decl, Expr, GlobalDecl, Index, ModelSource,
    If, Label, Observe, Recv, Run, Send, Skip, Template, UnOp, Var,
)
from ..ltl import Formula, UnknownProposition, parse_formula
from ..patterns import (
    DEFAULT_MAX_ARRAY_SIZE, MY_RUN, ProcessRegistry, build_my_run, expand_exclusive_choice,
    expand_parallel_split, expand_simple_merge, expand_synchronization, wrap_cancel_activity,
    wrap_cancel_case,
)
from .ast import (
    AliasStmt, AssignStmt, CancelActivityStmt, EndLabelStmt, MilestoneStmt, NdetStmt,
    PatternStmt, Reached, RecvStmt, RunStmt, SendStmt, SkipStmt, VarStmt, WorkflowDef,
)
from .validate import Diagnostic, milestones_of, registry_of, validate_workflow

MODES = ("flags", "scalar", "none")
SCALAR_VAR = "s"
FLAGS_VAR = "done"

# helper-local prefixes per pattern kind; repeated uses get a counter
_PREFIX = {"parallel_split": "ps", "sync": "sy", "choice": "ch", "merge": "mg"}


class WorkflowInvalid(CompileError):
    code = "WORKFLOW_INVALID"

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        errors = [d for d in diagnostics if d.severity == "error"]
        super().__init__("; ".join(str(d) for d in errors))


@dataclass
class CompiledWorkflow:
    model: Model
    source: ModelSource
    definition: WorkflowDef
    mode: str
    registry: Optional[ProcessRegistry]
    milestones: dict  # index -> owning process
    properties: dict = field(default_factory=dict)  # name -> (Formula, {prop: Expr})
    props: dict = field(default_factory=dict)  # workflow-level propositions
    strict: bool = False
    max_array_size: int = DEFAULT_MAX_ARRAY_SIZE

    def prop_table(self, name: str) -> dict:
        return self.properties[name][1]


def observe_expr(k: int, mode: str) -> Expr:
    """Kernel predicate for ``reached(k)``."""
    match mode:
        case "flags":
            return BinOp("==", Index(FLAGS_VAR, Const(k)), Const(1))
        case "scalar":
            return BinOp("==", Var(SCALAR_VAR), Const(k))
    raise CompileError("reached(k) needs an observation mode (flags or scalar)")


def lower_pred(e: Expr, mode: str) -> Expr:
    match e:
        case Reached(k):
            return observe_expr(k, mode)
        case BinOp(op, a, b):
            return BinOp(op, lower_pred(a, mode), lower_pred(b, mode))
        case UnOp(op, a):
            return UnOp(op, lower_pred(a, mode))
    return e


def _milestone(k: int, mode: str) -> tuple:
    match mode:
        case "flags":
            return (Observe((Assign(Index(FLAGS_VAR, Const(k)), Const(1)),)),)
        case "scalar":
            return (Observe((Assign(Var(SCALAR_VAR), Const(k)),)),)
    # an empty observation keeps the step structure of the observed modes
    return (Observe(()),)


class _Body:
    """Lowers one process body; owns the helper-prefix counters."""

    def __init__(self, d: WorkflowDef, mode: str, max_size: int):
        self.d = d
        self.mode = mode
        self.max_size = max_size
        self.counts: dict[str, int] = {}
        self.locals: dict[str, Optional[int]] = {}

    def prefix(self, kind: str) -> str:
        n = self.counts.get(kind, 0) + 1
        self.counts[kind] = n
        return f"{_PREFIX[kind]}{'' if n == 1 else n}_"

    def block(self, body) -> tuple:
        out: list = []
        for s in body:
            out.extend(self.stmt(s))
        return tuple(out)

    def stmt(self, s) -> tuple:
        match s:
            case SendStmt(ch, msg):
                return (Send(ch, msg),)
            case RecvStmt(ch, t):
                return (Recv(ch, t),)
            case AssignStmt(t, x):
                return (Assign(t, x),)
            case SkipStmt():
                return (Skip(),)
            case VarStmt(name, size, init):
                self.locals[name] = size
                return (Decl(name, "int", size, init),)
            case AliasStmt(name, chans):
                return (Decl(name, "chan", len(chans)),
                        *(Assign(Index(name, Const(i)), c) for i, c in enumerate(chans)))
            case RunStmt(name):
                p = self.d.process(name)
                if p is not None and p.pid is not None:
                    return (Run(MY_RUN, (Const(p.pid), Const(-1))),)
                return (Run(name),)
            case EndLabelStmt():
                n = self.counts.get("end", 0)
                self.counts["end"] = n + 1
                return (Label(f"end{n or ''}"),)
            case MilestoneStmt(k):
                return _milestone(k, self.mode)
            case NdetStmt(branches):
                return (If(tuple(self.block(b) or (Skip(),) for b in branches)),)
            case CancelActivityStmt(ch, body):
                return wrap_cancel_activity(self.block(body), ch)
            case PatternStmt():
                return self.pattern(s)
        raise CompileError(f"cannot compile statement {s!r}")

    def pattern(self, s: PatternStmt) -> tuple:
        kw = dict(max_array_size=self.max_size)
        match s.kind:
            case "parallel_split":
                (arg,) = s.args
                if isinstance(arg, Var) and self.locals.get(arg.name):
                    msgs = arg.name
                else:  # one expression for every branch
                    msgs = (arg,) * s.size
                return expand_parallel_split(s.chan, s.size, msgs, prefix=self.prefix(s.kind), **kw)
            case "sync":
                msgs = s.args[0].name if s.args else None
                return expand_synchronization(s.chan, s.size, msgs, prefix=self.prefix(s.kind),
                                              **kw)
            case "choice":
                choice, msg = s.args
                return expand_exclusive_choice(s.chan, s.size, choice, msg)
            case "merge":
                target = s.args[0] if s.args else None
                return expand_simple_merge(s.chan, s.size, target, prefix=self.prefix(s.kind),
                                           **kw)
        raise CompileError(f"unknown pattern '{s.kind}'")


def compile_to_kernel(d: WorkflowDef, mode: str = "flags", *, strict: bool = False,
                      max_array_size: int = DEFAULT_MAX_ARRAY_SIZE) -> CompiledWorkflow:
    """Validate ``d`` and build its kernel model.

    Milestones become observation assignments folded into the step of the
    preceding statement: ``done[k] = 1`` in flags mode, ``s = k`` in scalar
    mode, an empty observation in mode ``none`` so control flow is the same.
    """
    if mode not in MODES:
        raise CompileError(f"unknown observation mode '{mode}'")
    diags = validate_workflow(d, max_array_size)
    if any(x.severity == "error" for x in diags):
        raise WorkflowInvalid(diags)
    milestones = milestones_of(d)
    registry = registry_of(d)
    parents_var = next((g.name for g in d.globals if g.parents), None)
    cancel = next((c for c in d.channels if c.cancel), None)

    channels = tuple(ChannelDecl(c.name, c.size, c.capacity) for c in d.channels)
    globals_ = [GlobalDecl(g.name, "int", g.size, g.init) for g in d.globals]
    if mode == "flags":
        globals_.append(GlobalDecl(FLAGS_VAR, "int", max(milestones, default=0) + 1))
    elif mode == "scalar":
        globals_.append(GlobalDecl(SCALAR_VAR))

    templates = []
    if registry is not None and any(n is not None for n in registry.entries.values()):
        templates.append(build_my_run(registry, strict))
    for p in d.processes:
        lower = _Body(d, mode, max_array_size)
        body = lower.block(p.body)
        if p.cancellable:
            then = lower.block(p.on_cancel)
            body = wrap_cancel_case(body, cancel.name, cancel.size, registry, p.pid, then,
                                    parents=parents_var, prefix="cc_")
        templates.append(Template(p.name, (), body))

    init: list = []
    if registry is not None and parents_var is not None:
        init += [Assign(Index(parents_var, Const(i)), Const(v))
                 for i, v in enumerate(registry.parent_values())]
    init += _milestone(0, mode)
    init += [Run(r.process) for r in d.init]
    init_body = (Atomic(tuple(_unfold(init))),) if init else ()

    # without observation, propositions over milestones are dropped
    usable = (lambda e: mode != "none" or not _uses_reached(e))
    props = {pr.name: lower_pred(pr.pred, mode) for pr in d.props if usable(pr.pred)}
    source = ModelSource(tuple(templates), tuple(globals_), channels, init_body,
                         propositions=props)
    model = Model(source)
    properties = {}
    for x in d.ltls:
        if not all(usable(b.pred) for b in x.bindings):
            continue
        table = dict(props)
        table.update({b.name: lower_pred(b.pred, mode) for b in x.bindings})
        try:
            properties[x.name] = (parse_formula(x.formula, set(table)), table)
        except UnknownProposition:
            if mode != "none":
                raise
    return CompiledWorkflow(model, source, d, mode, registry, milestones, properties, props,
                            strict, max_array_size)


def _uses_reached(e: Expr) -> bool:
    match e:
        case Reached():
            return True
        case BinOp(_, a, b):
            return _uses_reached(a) or _uses_reached(b)
        case UnOp(_, a):
            return _uses_reached(a)
    return False


def _unfold(stmts) -> list:
    """Observation steps inside init's atomic run as plain assignments."""
    out = []
    for s in stmts:
        if isinstance(s, Observe):
            out.extend(s.assigns or (Skip(),))
        else:
            out.append(s)
    return out


def compile_formula(cw: CompiledWorkflow, text: str) -> tuple[Formula, dict]:
    """An ad-hoc formula over the workflow's propositions and ``reached_k`` names."""
    table = dict(cw.props)
    for k in [0, *cw.milestones]:
        if cw.mode != "none":
            table.setdefault(f"reached_{k}", observe_expr(k, cw.mode))
    return parse_formula(text, set(table)), table
