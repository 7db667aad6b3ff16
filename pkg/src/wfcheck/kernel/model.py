"""Interleaving semantics over compiled templates.

States are immutable tuples so they can be hashed and shared freely.
``Model`` is the pure state transformer: nothing here mutates its inputs.
"""

from __future__ import annotations

import hashlib
from array import array
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .compiler import (
    CompiledTemplate, Edge, Scope, Slot, TemplateCompiler, chan_slot, compile_expr,
)
from .errors import (
    AssertionViolation, CompileError, DStepViolation, IllegalTransition, ModelError,
    ProcessLimit,
)
from .syntax import Expr, ModelSource, Template

MAX_PROCESSES = 255
INIT = "init"


class ProcessInstance(NamedTuple):
    pid: int
    template: str
    pc: int
    locals: tuple


class SystemState(NamedTuple):
    globals: tuple
    channels: tuple  # tuple of buffers, indexed by channel id - 1
    procs: tuple  # tuple[ProcessInstance, ...]
    holder: int = -1  # pid holding atomic control, or -1


class Transition(NamedTuple):
    pid: int
    edge: int
    partner: int = -1  # rendezvous receiver
    partner_edge: int = -1
    escape: bool = False


@dataclass(frozen=True)
class ProcessView:
    pid: int
    template: str
    pc: int
    label: str
    locals: dict
    escapes: tuple
    done: bool


class Model:
    """A compiled, instantiable kernel model."""

    def __init__(self, source: ModelSource):
        self.source = source
        self.global_layout: dict[str, Slot] = {}
        ginit: list[int] = []
        self.capacities: list[int] = []
        self.channel_names: list[str] = []
        for c in source.channels:
            n = 1 if c.size is None else c.size
            if c.name in self.global_layout:
                raise CompileError(f"redeclaration of global '{c.name}'")
            if c.capacity < 0:
                raise CompileError(f"negative capacity for channel '{c.name}'")
            self.global_layout[c.name] = Slot(len(ginit), c.size, "chan")
            for i in range(n):
                self.capacities.append(c.capacity)
                self.channel_names.append(c.name if c.size is None else f"{c.name}[{i}]")
                ginit.append(len(self.capacities))
        for d in source.globals:
            if d.name in self.global_layout:
                raise CompileError(f"redeclaration of global '{d.name}'")
            n = 1 if d.size is None else d.size
            self.global_layout[d.name] = Slot(len(ginit), d.size, d.kind)
            ginit.extend([d.init] * n)
        self.init_globals = tuple(ginit)

        bodies = [Template(INIT, (), tuple(source.init))] + list(source.templates)
        self.templates: dict[str, CompiledTemplate] = {}
        self.template_list: list[CompiledTemplate] = []
        for i, t in enumerate(bodies):
            if t.name in self.templates:
                raise CompileError(f"duplicate proctype '{t.name}'")
            ct = TemplateCompiler(t.name, i, t.params, t.body, self.global_layout,
                                  self.capacities).compile()
            self.templates[t.name] = ct
            self.template_list.append(ct)
        for ct in self.template_list:
            for e in ct.edges:
                if e.kind == "run":
                    target = self.templates.get(e.run_template)
                    if target is None or target.name == INIT:
                        raise CompileError(f"run of unknown proctype '{e.run_template}'",
                                           f"{ct.name}: {e.text}")
                    if len(target.params) != len(e.run_args):
                        raise CompileError(
                            f"{e.run_template} expects {len(target.params)} arguments",
                            f"{ct.name}: {e.text}")
        for name in source.active:
            t = self.templates.get(name)
            if t is None or t.name == INIT:
                raise CompileError(f"active proctype '{name}' is not defined")
            if t.params:
                raise CompileError(f"active proctype '{name}' cannot take parameters")
        if len(source.active) + 1 > MAX_PROCESSES:
            raise ProcessLimit(f"more than {MAX_PROCESSES} processes")
        self._gscope = Scope({}, self.global_layout, self.capacities)
        self.propositions = {name: compile_expr(expr, self._gscope)
                             for name, expr in source.propositions.items()}
        self.has_timeout = any(ct.has_timeout for ct in self.template_list)

    # ------------------------------------------------------------------
    # states

    def initial_state(self) -> SystemState:
        init = self.templates[INIT]
        procs = [ProcessInstance(0, INIT, init.entry, init.init_locals)]
        for name in self.source.active:
            t = self.templates[name]
            procs.append(ProcessInstance(len(procs), name, t.entry, t.init_locals))
        return SystemState(self.init_globals, tuple(() for _ in self.capacities),
                           tuple(procs), -1)

    def is_done(self, proc: ProcessInstance) -> bool:
        return proc.pc == self.templates[proc.template].final

    def view(self, state: SystemState, pid: int) -> ProcessView:
        p = state.procs[pid]
        t = self.templates[p.template]
        loc = t.locations[p.pc]
        names = {}
        for name, slot in t.layout.items():
            if slot.size is None:
                names[name] = p.locals[slot.offset]
            else:
                names[name] = list(p.locals[slot.offset:slot.offset + slot.size])
        return ProcessView(p.pid, p.template, p.pc, loc.label, names, loc.escapes,
                           p.pc == t.final)

    def read_global(self, state: SystemState, name: str):
        slot = self.global_layout[name]
        if slot.size is None:
            return state.globals[slot.offset]
        return list(state.globals[slot.offset:slot.offset + slot.size])

    def eval_expr(self, state: SystemState, pid: int, e: Expr) -> int:
        p = state.procs[pid]
        scope = Scope(self.templates[p.template].layout, self.global_layout, self.capacities)
        return compile_expr(e, scope)(state.globals, p.locals, state.channels)

    def compile_prop(self, expr: Expr):
        """Predicate over states for an expression on globals and channels."""
        f = compile_expr(expr, self._gscope)
        return lambda state: bool(f(state.globals, (), state.channels))

    def eval_prop(self, state: SystemState, name: str) -> bool:
        return bool(self.propositions[name](state.globals, (), state.channels))

    # ------------------------------------------------------------------
    # executability

    def _edge_enabled(self, e: Edge, g, l, ch) -> bool:
        k = e.kind
        if k == "guard":
            return bool(e.cond(g, l, ch))
        if k == "send":
            i = chan_slot(ch, e.chan(g, l, ch), e.text)
            cap = self.capacities[i]
            return cap > 0 and len(ch[i]) < cap
        if k == "recv":
            i = chan_slot(ch, e.chan(g, l, ch), e.text)
            return self.capacities[i] > 0 and len(ch[i]) > 0
        if k == "timeout":
            return False
        if k == "else":
            return not any(self._edge_enabled(s, g, l, ch) for s in e.siblings)
        if k == "dstep":
            return any(self._edge_enabled(x, g, l, ch) for x in e.first)
        return True

    def _rendezvous(self, state: SystemState, pid: int, e: Edge, g, l, ch) -> list:
        """Receivers able to take a message from a capacity-0 send."""
        cid = e.chan(g, l, ch)
        i = chan_slot(ch, cid, e.text)
        if self.capacities[i] != 0:
            return []
        out = []
        for q in state.procs:
            if q.pid == pid:
                continue
            qt = self.templates[q.template]
            for r in qt.locations[q.pc].edges:
                if r.kind == "recv" and r.chan(g, q.locals, ch) == cid:
                    out.append(Transition(pid, e.id, q.pid, r.id))
        return out

    def _proc_moves(self, state: SystemState, p: ProcessInstance, escapes: bool,
                    timeout_pass: bool) -> list:
        t = self.templates[p.template]
        loc = t.locations[p.pc]
        g, l, ch = state.globals, p.locals, state.channels
        try:
            if escapes and not timeout_pass:
                for eid in loc.escapes:
                    moves = [Transition(p.pid, e.id, escape=True)
                             for e in t.escape_edges[eid] if self._edge_enabled(e, g, l, ch)]
                    if moves:
                        return moves
            moves = []
            for e in loc.edges:
                if timeout_pass:
                    if e.kind == "timeout":
                        moves.append(Transition(p.pid, e.id))
                elif e.kind == "send" and self.capacities[chan_slot(ch, e.chan(g, l, ch))] == 0:
                    moves.extend(self._rendezvous(state, p.pid, e, g, l, ch))
                elif e.kind == "recv" and self.capacities[chan_slot(ch, e.chan(g, l, ch))] == 0:
                    continue
                elif self._edge_enabled(e, g, l, ch):
                    moves.append(Transition(p.pid, e.id))
            return moves
        except ModelError as exc:
            exc.where = exc.where or f"{p.template}[{p.pid}] @{loc.label}"
            raise

    def enabled_transitions(self, state: SystemState) -> list[Transition]:
        """Executable moves, lowest pid first, options in syntactic order."""
        if state.holder >= 0:
            p = state.procs[state.holder]
            moves = self._proc_moves(state, p, escapes=False, timeout_pass=False)
            if moves:
                return moves
        moves = []
        for p in state.procs:
            moves.extend(self._proc_moves(state, p, escapes=True, timeout_pass=False))
        if moves or not self.has_timeout:
            return moves
        for p in state.procs:
            moves.extend(self._proc_moves(state, p, escapes=True, timeout_pass=True))
        return moves

    # ------------------------------------------------------------------
    # effects

    def _exec(self, e: Edge, pid: int, tmpl: CompiledTemplate, g: list, l: list, ch: list,
              procs: list, received: Optional[int] = None) -> None:
        k = e.kind
        if k == "assign":
            is_local, off = e.lval(g, l, ch)
            (l if is_local else g)[off] = e.value(g, l, ch)
        elif k == "send":
            i = chan_slot(ch, e.chan(g, l, ch), e.text)
            ch[i] = ch[i] + (e.value(g, l, ch),)
        elif k == "recv":
            if received is None:
                i = chan_slot(ch, e.chan(g, l, ch), e.text)
                received, ch[i] = ch[i][0], ch[i][1:]
            is_local, off = e.lval(g, l, ch)
            (l if is_local else g)[off] = received
        elif k == "run":
            if len(procs) >= MAX_PROCESSES:
                raise ProcessLimit(f"more than {MAX_PROCESSES} processes", e.text)
            target = self.templates[e.run_template]
            loc = list(target.init_locals)
            for i, a in enumerate(e.run_args):
                loc[i] = a(g, l, ch)
            procs.append(ProcessInstance(len(procs), target.name, target.entry, tuple(loc)))
        elif k == "assert":
            if not e.cond(g, l, ch):
                raise AssertionViolation(e.message, f"{tmpl.name}[{pid}]")
        elif k == "dstep":
            self._run_dstep(e, pid, tmpl, g, l, ch, procs)
        for lv, val in e.post:
            is_local, off = lv(g, l, ch)
            (l if is_local else g)[off] = val(g, l, ch)

    def _run_dstep(self, e: Edge, pid: int, tmpl: CompiledTemplate, g, l, ch, procs) -> None:
        pc = e.dstep_entry
        for step in range(100_000):
            if pc == e.dstep_end:
                return
            enabled = [x for x in tmpl.locations[pc].edges if self._edge_enabled(x, g, l, ch)]
            if not enabled:
                raise DStepViolation("d_step blocked after its first statement",
                                     f"{tmpl.name}[{pid}]: {tmpl.locations[pc].edges[0].text}")
            if len(enabled) > 1:
                raise DStepViolation("nondeterministic choice inside d_step",
                                     f"{tmpl.name}[{pid}] @{tmpl.locations[pc].label}")
            x = enabled[0]
            self._exec(x, pid, tmpl, g, l, ch, procs)
            pc = x.target
        raise DStepViolation("d_step does not terminate", f"{tmpl.name}[{pid}]")

    def fire(self, state: SystemState, t: Transition) -> SystemState:
        """Successor state; assumes ``t`` is enabled."""
        procs = list(state.procs)
        p = procs[t.pid]
        tmpl = self.templates[p.template]
        e = tmpl.edges[t.edge]
        g, l, ch = list(state.globals), list(p.locals), list(state.channels)
        holder = -1
        try:
            if t.partner >= 0:
                q = procs[t.partner]
                qt = self.templates[q.template]
                r = qt.edges[t.partner_edge]
                msg = e.value(g, l, ch)
                for lv, val in e.post:
                    is_local, off = lv(g, l, ch)
                    (l if is_local else g)[off] = val(g, l, ch)
                procs[t.pid] = p._replace(pc=e.target, locals=tuple(l))
                ql = list(q.locals)
                self._exec(r, q.pid, qt, g, ql, ch, procs, received=msg)
                procs[t.partner] = q._replace(pc=r.target, locals=tuple(ql))
                if r.keep_atomic and r.target != qt.final:
                    holder = q.pid
                elif e.keep_atomic and e.target != tmpl.final:
                    holder = p.pid
            else:
                self._exec(e, p.pid, tmpl, g, l, ch, procs)
                procs[t.pid] = p._replace(pc=e.target, locals=tuple(l))
                if e.keep_atomic and e.target != tmpl.final:
                    holder = p.pid
        except ModelError as exc:
            exc.where = exc.where or f"{tmpl.name}[{p.pid}]: {e.text}"
            raise
        return SystemState(tuple(g), tuple(ch), tuple(procs), holder)

    def apply_transition(self, state: SystemState, t: Transition) -> SystemState:
        if t not in self.enabled_transitions(state):
            raise IllegalTransition(f"{t} is not enabled")
        return self.fire(state, t)

    def successors(self, state: SystemState) -> list[tuple[Transition, SystemState]]:
        return [(t, self.fire(state, t)) for t in self.enabled_transitions(state)]

    # ------------------------------------------------------------------
    # classification and hashing

    def is_valid_end_state(self, state: SystemState) -> bool:
        for p in state.procs:
            t = self.templates[p.template]
            if p.pc != t.final and not t.locations[p.pc].end_valid:
                return False
        return True

    def stuck_processes(self, state: SystemState) -> list[int]:
        return [p.pid for p in state.procs
                if p.pc != self.templates[p.template].final
                and not self.templates[p.template].locations[p.pc].end_valid]

    def canonical_encoding(self, state: SystemState) -> tuple:
        return canonical_encoding(self, state)

    def describe_edge(self, t: Transition, state: SystemState) -> tuple[str, str, str]:
        p = state.procs[t.pid]
        tmpl = self.templates[p.template]
        return p.template, tmpl.locations[p.pc].label, tmpl.edges[t.edge].text

    def transition_text(self, t: Transition, state: SystemState) -> str:
        name, label, text = self.describe_edge(t, state)
        if t.partner >= 0:
            q = state.procs[t.partner]
            text += f" <-> {q.template}[{q.pid}]"
        return text


def canonical_encoding(model: Model, state: SystemState) -> tuple:
    """Flat integer encoding; equal states encode identically."""
    out = [state.holder, len(state.globals), *state.globals, len(state.channels)]
    for buf in state.channels:
        out.append(len(buf))
        out.extend(buf)
    out.append(len(state.procs))
    for p in state.procs:
        out.append(model.templates[p.template].index)
        out.append(p.pc)
        out.append(len(p.locals))
        out.extend(p.locals)
    return tuple(out)


def canonical_state_digest(model: Model, state: SystemState) -> bytes:
    """128-bit BLAKE2b digest of the canonical encoding."""
    data = array("q", canonical_encoding(model, state)).tobytes()
    return hashlib.blake2b(data, digest_size=16).digest()


def enabled_transitions(model: Model, state: SystemState) -> list[Transition]:
    return model.enabled_transitions(state)


def apply_transition(model: Model, state: SystemState, t: Transition) -> SystemState:
    return model.apply_transition(state, t)


def is_valid_end_state(model: Model, state: SystemState) -> bool:
    return model.is_valid_end_state(state)


def eval_expr(model: Model, state: SystemState, pid: int, e: Expr) -> int:
    return model.eval_expr(state, pid, e)
