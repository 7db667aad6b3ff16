"""Canonical ``.wf`` rendering; ``parse_workflow(print_workflow(d)) == d``."""

from __future__ import annotations

from ..kernel.syntax import BinOp, Const, Expr, Index, Len, UnOp, Var
from .ast import (
    AliasStmt, AssignStmt, CancelActivityStmt, EndLabelStmt, MilestoneStmt, NdetStmt, PatternStmt, Reached,
    RecvStmt, RunStmt, SendStmt, SkipStmt, VarStmt, WorkflowDef,
)

_LEVEL = {"||": 0, "&&": 1, "==": 2, "!=": 2, "<": 3, "<=": 3, ">": 3, ">=": 3,
          "+": 4, "-": 4, "*": 5, "/": 5, "%": 5}


def format_wf_expr(e: Expr, level: int = 0) -> str:
    match e:
        case Const(v):
            return str(v)
        case Var(n):
            return n
        case Index(n, i):
            return f"{n}[{format_wf_expr(i)}]"
        case Len(c):
            return f"len({format_wf_expr(c)})"
        case Reached(k):
            return f"reached({k})"
        case UnOp(op, x):
            return f"{op}{format_wf_expr(x, 6)}"
        case BinOp(op, left, right):
            p = _LEVEL[op]
            s = f"{format_wf_expr(left, p)} {op} {format_wf_expr(right, p + 1)}"
            return f"({s})" if p < level else s
    raise TypeError(f"cannot print expression {e!r}")


def _stmt(s, ind: str) -> list[str]:
    f = format_wf_expr
    match s:
        case SendStmt(ch, msg):
            return [f"{ind}send({f(ch)}, {f(msg)});"]
        case RecvStmt(ch, t):
            return [f"{ind}recv({f(ch)}, {f(t)});"]
        case AssignStmt(t, x):
            return [f"{ind}{f(t)} = {f(x)};"]
        case EndLabelStmt():
            return [f"{ind}end:"]
        case SkipStmt():
            return [f"{ind}skip;"]
        case VarStmt(name, size, init):
            dim = f"[{size}]" if size is not None else ""
            return [f"{ind}var {name}{dim}" + (f" = {init}" if init else "") + ";"]
        case AliasStmt(name, chans):
            return [f"{ind}alias {name} = [{', '.join(f(c) for c in chans)}];"]
        case RunStmt(p):
            return [f"{ind}run {p};"]
        case MilestoneStmt(k):
            return [f"{ind}milestone {k};"]
        case PatternStmt(kind, chan, size, args):
            rest = "".join(f", {f(a)}" for a in args)
            return [f"{ind}{kind}({chan}, {size}{rest});"]
        case NdetStmt(branches):
            out = [f"{ind}ndet {{"]
            for i, b in enumerate(branches):
                if i:
                    out.append(f"{ind}|")
                for x in b:
                    out.extend(_stmt(x, ind + "  "))
            out.append(f"{ind}}}")
            return out
        case CancelActivityStmt(ch, body):
            return [f"{ind}cancel_activity({f(ch)}) {{", *_block(body, ind + "  "), f"{ind}}}"]
    raise TypeError(f"cannot print statement {s!r}")


def _block(body, ind: str) -> list[str]:
    out = []
    for s in body:
        out.extend(_stmt(s, ind))
    return out


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_workflow(d: WorkflowDef) -> str:
    out = [f"workflow {d.name} {{"]
    if d.channels:
        out.append("  channels {")
        for c in d.channels:
            dim = f"[{c.size}]" if c.size is not None else ""
            cap = f" capacity {c.capacity}" if c.capacity != 1 else ""
            out.append(f"    {c.name}{dim}{cap}{' cancel' if c.cancel else ''};")
        out.append("  }")
    for g in d.globals:
        dim = f"[{g.size}]" if g.size is not None else ""
        init = f" = {g.init}" if g.init else ""
        out.append(f"  var {g.name}{dim}{init}{' parents' if g.parents else ''};")
    for p in d.processes:
        head = f"  process {p.name}"
        if p.pid is not None:
            head += f" id {p.pid}"
        if p.parent is not None:
            head += f" parent {p.parent}"
        if p.cancellable:
            head += " cancellable"
        out.append("")
        out.append(head + " {")
        out.extend(_block(p.body, "    "))
        if p.on_cancel:
            out.append("  } on_cancel {")
            out.extend(_block(p.on_cancel, "    "))
        out.append("  }")
    if d.init:
        out.append("")
        out.append("  init {")
        out.extend(f"    run {r.process};" for r in d.init)
        out.append("  }")
    if d.props:
        out.append("")
    for pr in d.props:
        out.append(f"  prop {pr.name} = {format_wf_expr(pr.pred)};")
    for x in d.ltls:
        line = f"  ltl {x.name} {_quote(x.formula)}"
        if x.bindings:
            binds = " ".join(f"{b.name} = {format_wf_expr(b.pred)};" for b in x.bindings)
            line += f" {{ {binds} }}"
        out.append(line)
    out.append("}")
    return "\n".join(out) + "\n"
