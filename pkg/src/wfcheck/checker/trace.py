"""Replayable execution traces and their text/structured renderings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..kernel import Model, SystemState, Transition, canonical_state_digest


class TraceReplayError(Exception):
    pass


@dataclass(frozen=True)
class TraceStep:
    pid: int
    template: str
    label: str
    stmt: str
    sends: tuple = ()
    recvs: tuple = ()
    assigns: tuple = ()

    def delta_text(self) -> str:
        parts = [*self.recvs, *self.sends, *self.assigns]
        return ", ".join(parts) if parts else "-"


@dataclass
class Trace:
    """Steps from the initial state.

    For a lasso, ``lasso_start`` is the step at which the loop re-enters;
    ``lasso_start == len(steps)`` means the final state repeats forever.
    """

    steps: list[TraceStep]
    transitions: list[Transition] = field(repr=False)
    lasso_start: Optional[int] = None
    final_digest: str = ""

    def __len__(self) -> int:
        return len(self.steps)


def _names(model: Model, template: str) -> list[tuple[str, int]]:
    out = []
    for name, slot in model.templates[template].layout.items():
        if slot.size is None:
            out.append((name, slot.offset))
        else:
            out.extend((f"{name}[{i}]", slot.offset + i) for i in range(slot.size))
    return out


def _global_names(model: Model) -> list[tuple[str, int]]:
    out = []
    for name, slot in model.global_layout.items():
        if slot.kind == "chan":
            continue
        if slot.size is None:
            out.append((name, slot.offset))
        else:
            out.extend((f"{name}[{i}]", slot.offset + i) for i in range(slot.size))
    return out


def step_delta(model: Model, before: SystemState, after: SystemState,
               t: Transition) -> TraceStep:
    template, label, _ = model.describe_edge(t, before)
    sends, recvs, assigns = [], [], []
    for k, (old, new) in enumerate(zip(before.channels, after.channels)):
        if old == new:
            continue
        name = model.channel_names[k]
        r = 0
        while old[r:] != new[:len(old) - r]:
            r += 1
        recvs.extend(f"{name}?{v}" for v in old[:r])
        sends.extend(f"{name}!{v}" for v in new[len(old) - r:])
    for name, off in _global_names(model):
        if before.globals[off] != after.globals[off]:
            assigns.append(f"{name}={after.globals[off]}")
    for pid in (t.pid, t.partner):
        if pid < 0:
            continue
        p0, p1 = before.procs[pid], after.procs[pid]
        prefix = "" if pid == t.pid else f"{p1.template}[{pid}]."
        for name, off in _names(model, p1.template):
            if p0.locals[off] != p1.locals[off]:
                assigns.append(f"{prefix}{name}={p1.locals[off]}")
    for p in after.procs[len(before.procs):]:
        assigns.append(f"run {p.template}[{p.pid}]")
    return TraceStep(t.pid, template, label, model.transition_text(t, before),
                     tuple(sends), tuple(recvs), tuple(assigns))


def build_trace(model: Model, transitions: Sequence[Transition],
                lasso_start: Optional[int] = None) -> tuple[Trace, SystemState]:
    """Replay ``transitions`` from the initial state, checking each is enabled."""
    state = model.initial_state()
    steps = []
    for t in transitions:
        nxt = model.apply_transition(state, t)
        steps.append(step_delta(model, state, nxt, t))
        state = nxt
    digest = canonical_state_digest(model, state).hex()
    return Trace(steps, list(transitions), lasso_start, digest), state


def replay(model: Model, trace: Trace) -> SystemState:
    """Re-execute ``trace`` and confirm every recorded delta; returns the final state."""
    try:
        again, state = build_trace(model, trace.transitions, trace.lasso_start)
    except Exception as exc:
        raise TraceReplayError(f"replay failed: {exc}") from exc
    if again.steps != trace.steps:
        for i, (a, b) in enumerate(zip(again.steps, trace.steps)):
            if a != b:
                raise TraceReplayError(f"step {i} differs on replay: {a} != {b}")
        raise TraceReplayError("step count differs on replay")
    if again.final_digest != trace.final_digest:
        raise TraceReplayError("final digest differs on replay")
    return state


def trace_records(trace: Trace) -> list[dict]:
    return [
        {"step": i, "pid": s.pid, "template": s.template, "label": s.label, "stmt": s.stmt,
         "sends": list(s.sends), "recvs": list(s.recvs), "assigns": list(s.assigns),
         "lassoStart": trace.lasso_start}
        for i, s in enumerate(trace.steps)
    ]


def format_counterexample(trace: Trace, style: str = "text") -> str:
    """``text``: one line per step; ``structured``: one JSON record per line."""
    if style == "structured":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in trace_records(trace))
    if style != "text":
        raise ValueError(f"unknown style {style!r}")
    lines = []
    n = len(trace.steps)
    for i, s in enumerate(trace.steps):
        mark = "loop> " if trace.lasso_start == i else ""
        line = f"{mark}{s.pid} {s.template} @{s.label} {s.stmt} => {s.delta_text()}"
        if i == n - 1 and trace.lasso_start == n:
            line += "  [final state repeats forever]"
        lines.append(line)
    if n == 0 and trace.lasso_start == 0:
        lines.append("[initial state repeats forever]")
    return "".join(line + "\n" for line in lines)
