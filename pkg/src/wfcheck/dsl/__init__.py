"""Workflow definition language: parser, printer, validator and compiler."""

from .ast import (
    AliasStmt, AssignStmt, CancelActivityStmt, ChannelSpec, GlobalVar, Loc, LtlDef,
    MilestoneStmt, NdetStmt, PATTERN_KINDS, PatternStmt, ProcessDef, PropDef, Reached,
    RecvStmt, RunStmt, SendStmt, SkipStmt, VarStmt, WorkflowDef,
)
from .compile import (
    MODES, CompiledWorkflow, WorkflowInvalid, compile_formula, compile_to_kernel, lower_pred,
    observe_expr,
)
from .parser import WorkflowSyntaxError, parse_expr, parse_workflow
from .printer import format_wf_expr, print_workflow
from .validate import Diagnostic, milestones_of, registry_of, validate_workflow


def load_workflow(path) -> WorkflowDef:
    with open(path, encoding="utf-8") as fh:
        return parse_workflow(fh.read())


__all__ = [n for n in dir() if not n.startswith("_")]
