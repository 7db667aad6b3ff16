"""PROMELA model files for a compiled workflow."""

from __future__ import annotations

import os
from dataclasses import replace

from ..dsl.ast import (
    AliasStmt, AssignStmt, CancelActivityStmt, EndLabelStmt, MilestoneStmt, NdetStmt,
    PatternStmt, RecvStmt, RunStmt, SendStmt, SkipStmt, VarStmt, WorkflowDef,
)
from ..dsl.compile import FLAGS_VAR, SCALAR_VAR, CompiledWorkflow
from ..kernel.syntax import Const, Var, format_expr
from ..ltl import format_formula, propositions
from .library import EmitConfig, emit_pattern_library

# locals declared by the library inlines, and the labels they use
_INLINE_LOCALS = {"parallelSplit": ("n",), "synchronization": ("j", "count", "aux", "S", "E"),
                  "cancelCase": ("i",)}
_SIMPLE = (SendStmt, RecvStmt, AssignStmt, SkipStmt, RunStmt)


class EmitError(ValueError):
    code = "EMIT_ERROR"


class EmitUnsupported(EmitError):
    code = "EMIT_UNSUPPORTED"


def _x(e) -> str:
    return format_expr(e)


def required_sizes(d: WorkflowDef) -> list[tuple[str, int]]:
    """(what, sizeq) for every array size bounded by MAXARRAYSIZE."""
    out = []

    def walk(body, owner):
        for s in body:
            match s:
                case PatternStmt(kind, chan, size):
                    out.append((f"{kind}({chan}, {size}) in {owner}", size))
                case NdetStmt(branches):
                    for b in branches:
                        walk(b, owner)
                case CancelActivityStmt(_, b):
                    walk(b, owner)

    for p in d.processes:
        walk(p.body, p.name)
        walk(p.on_cancel, p.name)
    for c in d.channels:
        if c.cancel and c.size is not None:
            out.append((f"cancel channel array {c.name}[{c.size}]", c.size))
    return out


def merge_sizes(d: WorkflowDef) -> tuple:
    sizes = set()

    def walk(body):
        for s in body:
            match s:
                case PatternStmt("merge", _, size):
                    sizes.add(size)
                case NdetStmt(branches):
                    for b in branches:
                        walk(b)
                case CancelActivityStmt(_, b):
                    walk(b)

    for p in d.processes:
        walk(p.body)
        walk(p.on_cancel)
    return tuple(sorted(sizes | {2}))


def check_config(cw: CompiledWorkflow, config: EmitConfig) -> None:
    for what, size in required_sizes(cw.definition):
        if size > config.max_array_size:
            raise EmitError(f"sizeq {size} of {what} exceeds MAXARRAYSIZE "
                            f"{config.max_array_size}")


class _Proc:
    """Renders one proctype body; tracks inline uses to avoid redeclarations."""

    def __init__(self, cw: CompiledWorkflow, name: str):
        self.cw = cw
        self.d = cw.definition
        self.name = name
        self.uses: dict[str, int] = {}
        self.names: set[str] = set()
        self.counts: dict[str, int] = {}

    def use(self, inline: str) -> None:
        self.uses[inline] = self.uses.get(inline, 0) + 1
        if self.uses[inline] > 1 and _INLINE_LOCALS.get(inline):
            raise EmitUnsupported(f"{self.name} uses {inline} twice; its locals would be "
                                  f"redeclared")
        clash = self.names & set(_INLINE_LOCALS.get(inline, ()))
        if clash:
            raise EmitUnsupported(f"{self.name}: local {sorted(clash)[0]!r} clashes with "
                                  f"the {inline} inline")

    def declare(self, name: str) -> None:
        for inline, locs in _INLINE_LOCALS.items():
            if inline in self.uses and name in locs:
                raise EmitUnsupported(f"{self.name}: local {name!r} clashes with the "
                                      f"{inline} inline")
        self.names.add(name)

    def prefix(self, kind: str) -> str:
        tag = {"parallel_split": "ps", "sync": "sy", "choice": "ch", "merge": "mg"}[kind]
        n = self.counts.get(kind, 0) + 1
        self.counts[kind] = n
        return f"{tag}{'' if n == 1 else n}_"

    def observe(self, k: int) -> str:
        match self.cw.mode:
            case "flags":
                return f"{FLAGS_VAR}[{k}]=1"
            case "scalar":
                return f"{SCALAR_VAR}={k}"
        return ""

    # statements ------------------------------------------------------------

    def block(self, body, ind: str) -> list[str]:
        out: list[str] = []
        items = list(body)
        i = 0
        while i < len(items):
            s = items[i]
            nxt = items[i + 1] if i + 1 < len(items) else None
            obs = self.observe(nxt.index) if isinstance(nxt, MilestoneStmt) else ""
            if obs and isinstance(s, _SIMPLE):
                text = self.simple(s)
                wrap = "atomic" if isinstance(s, RunStmt) else "d_step"
                comment = self.run_comment(s)
                out.append(f"{ind}{wrap} {{ {text}; {obs} }}{comment}")
                i += 2
                continue
            if obs and isinstance(s, AliasStmt):
                lines = self.alias(s)
                out.extend(f"{ind}{x}" for x in lines[:-1])
                out.append(f"{ind}d_step {{ {lines[-1].rstrip(';')}; {obs} }}")
                i += 2
                continue
            out.extend(self.stmt(s, ind))
            if isinstance(s, EndLabelStmt) and nxt is None:
                out.append(f"{ind}  skip;")
            i += 1
        return out

    def run_comment(self, s) -> str:
        if isinstance(s, RunStmt):
            p = self.d.process(s.process)
            if p is not None and p.pid is not None:
                return f" /* Run {p.name}. */"
        return ""

    def simple(self, s) -> str:
        match s:
            case SendStmt(ch, msg):
                return f"send({_x(ch)},{_x(msg)})"
            case RecvStmt(ch, t):
                return f"recv({_x(ch)},{_x(t)})"
            case AssignStmt(t, e):
                return f"{_x(t)}={_x(e)}"
            case SkipStmt():
                return "skip"
            case RunStmt(name):
                p = self.d.process(name)
                if p is not None and p.pid is not None:
                    return f"run myRun({p.pid}, -1)"
                return f"run {name}()"
        raise EmitUnsupported(f"no PROMELA image for {s!r}")

    def alias(self, s: AliasStmt) -> list[str]:
        self.declare(s.name)
        return [f"chan {s.name}[{len(s.chans)}];"] + [
            f"{s.name}[{i}]={_x(c)};" for i, c in enumerate(s.chans)]

    def stmt(self, s, ind: str) -> list[str]:
        match s:
            case _ if isinstance(s, _SIMPLE):
                return [f"{ind}{self.simple(s)};{self.run_comment(s)}"]
            case VarStmt(name, size, init):
                self.declare(name)
                dim = f"[{size}]" if size is not None else ""
                return [f"{ind}int {name}{dim}" + (f" = {init}" if init else "") + ";"]
            case AliasStmt():
                return [f"{ind}{x}" for x in self.alias(s)]
            case EndLabelStmt():
                n = self.counts.get("end", 0)
                self.counts["end"] = n + 1
                return [f"{ind}end{n or ''}:"]
            case MilestoneStmt(k):
                obs = self.observe(k)
                return [f"{ind}{obs};"] if obs else []
            case NdetStmt(branches):
                out = [f"{ind}if"]
                for b in branches:
                    lines = self.block(b, ind + "     ") or [f"{ind}     skip"]
                    first = lines[0].strip()
                    out.append(f"{ind}  :: {first}")
                    out.extend(lines[1:])
                out.append(f"{ind}fi;")
                return out
            case CancelActivityStmt(ch, body):
                inner = self.block(body, ind + "  ") or [f"{ind}  skip;"]
                return [f"{ind}{{", *inner, f"{ind}}} unless {{ len({_x(ch)})>0; skip; }}"]
            case PatternStmt():
                return [f"{ind}{x}" for x in self.pattern(s)]
        raise EmitUnsupported(f"no PROMELA image for {s!r}")

    def pattern(self, s: PatternStmt) -> list[str]:
        qs, size = s.chan, s.size
        match s.kind:
            case "parallel_split":
                self.use("parallelSplit")
                (arg,) = s.args
                if isinstance(arg, Var) and arg.name in self.names:
                    return [f"parallelSplit({qs},{size},{arg.name});"]
                arr = f"{self.prefix(s.kind)}msgs"
                self.declare(arr)
                if not isinstance(arg, Const):
                    fill = "; ".join(f"{arr}[{i}]={_x(arg)}" for i in range(size))
                    return [f"int {arr}[{size}];", f"d_step {{ {fill} }}",
                            f"parallelSplit({qs},{size},{arr});"]
                return [f"int {arr}[{size}] = {arg.value};", f"parallelSplit({qs},{size},{arr});"]
            case "sync":
                self.use("synchronization")
                if s.args:
                    return [f"synchronization({qs},{size},{s.args[0].name});"]
                arr = f"{self.prefix(s.kind)}msgs"
                self.declare(arr)
                return [f"int {arr}[{size}];", f"synchronization({qs},{size},{arr});"]
            case "choice":
                choice, msg = s.args
                return [f"exclusiveChoice({qs},{size},{_x(choice)},{_x(msg)});"]
            case "merge":
                if s.args:
                    return [f"simpleMerge{size}({qs},{_x(s.args[0])});"]
                x = f"{self.prefix(s.kind)}x"
                self.declare(x)
                return [f"int {x};", f"simpleMerge{size}({qs},{x});"]
        raise EmitUnsupported(f"no PROMELA image for pattern {s.kind}")


def _proctype(cw: CompiledWorkflow, p) -> list[str]:
    r = _Proc(cw, p.name)
    head = f"proctype {p.name}(){{"
    if p.pid is not None:
        head += f" /* {p.pid} is the id of this process. */"
    if not p.cancellable:
        body = r.block(p.body, "  ") or ["  skip; /* Do work. */"]
        return [head, *body, "}"]
    cancel = next(c for c in cw.definition.channels if c.cancel)
    parents = next(g.name for g in cw.definition.globals if g.parents)
    r.declare("cc_msgs")
    body = r.block(p.body, "  ") or ["  skip; /* Do work. */"]
    r.use("cancelCase")
    then = r.block(p.on_cancel, "          ")
    esc = [f"}} unless {{ len({cancel.name}[{p.pid}])>0;",
           f"          cancelCase({cancel.name},{cancel.size},{parents},cc_msgs,{p.pid});"]
    return [head, f"  int cc_msgs[{cancel.size}] = 1;", "{", *body, *esc, *then, "}}"]


def emit_model_source(cw: CompiledWorkflow, config: EmitConfig = EmitConfig()) -> str:
    """Complete ``.pml`` text: include, globals, myRun, proctypes, init."""
    check_config(cw, config)
    d = cw.definition
    out = ["/* File with the translations of the workflow patterns. */",
           f'#include "{config.include_name}"', ""]
    for c in d.channels:
        dim = f"[{c.size}]" if c.size is not None else ""
        out.append(f"chan {c.name}{dim} = [{c.capacity}] of {{int}};")
    for g in d.globals:
        dim = f"[{g.size}]" if g.size is not None else ""
        out.append(f"int {g.name}{dim}" + (f" = {g.init}" if g.init else "") + ";")
    if cw.mode == "flags":
        out.append(f"int {FLAGS_VAR}[{max(cw.milestones, default=0) + 1}];")
    elif cw.mode == "scalar":
        out.append(f"int {SCALAR_VAR};")
    reg = cw.registry
    if reg is not None and any(n is not None for n in reg.entries.values()):
        out += ["", "proctype myRun(int id, int n){", "    if"]
        for k, name in sorted(reg.entries.items()):
            if name is not None:
                out.append(f"        ::(id=={k}) -> run {name}()")
        out.append("    fi;}")
    for p in d.processes:
        out.append("")
        out.extend(_proctype(cw, p))
    steps = []
    parents = next((g.name for g in d.globals if g.parents), None)
    if reg is not None and parents is not None:
        steps += [f"{parents}[{i}]={v};" for i, v in enumerate(reg.parent_values())]
    if cw.mode == "flags":
        steps.append(f"{FLAGS_VAR}[0]=1;")
    steps += [f"run {r.process}();" for r in d.init]
    out.append("")
    if steps:
        out.append("init{ atomic{ " + " ".join(steps) + "}")
        out.append("}")
    else:
        out.append("init{ skip }")
    return "\n".join(out) + "\n"


def emit_ltl(cw: CompiledWorkflow) -> str:
    """``#define`` propositions and one ``ltl`` block per property.

    Each block undefines its names afterwards so properties may reuse
    ``p``, ``q``, ``r`` with different meanings.
    """
    out = [f"/* LTL properties of {cw.definition.name} ({cw.mode} observation). */"]
    for name, (f, table) in cw.properties.items():
        used = sorted(propositions(f))
        out.append("")
        out.append(f"/* {name} */")
        out += [f"#define {n} ({format_expr(table[n])})" for n in used]
        out.append(f"ltl {name} {{ {format_formula(f)} }}")
        out += [f"#undef {n}" for n in used]
    return "\n".join(out) + "\n"


def emit_files(cw: CompiledWorkflow, out_dir: str, config: EmitConfig = EmitConfig(),
               stem: str = "") -> list[str]:
    """Write ``<stem>.pml``, the library and ``<stem>.ltl``; returns the paths."""
    config = replace(config, merge_sizes=merge_sizes(cw.definition))
    files = {
        f"{stem or cw.definition.name}.pml": emit_model_source(cw, config),
        config.include_name: emit_pattern_library(config),
        f"{stem or cw.definition.name}.ltl": emit_ltl(cw),
    }
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for fname, text in files.items():
        path = os.path.join(out_dir, fname)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths
