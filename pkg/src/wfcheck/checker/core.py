"""Deadlock, LTL and vacuity checks over explored state graphs."""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from ..kernel import Expr, Model, ModelError, SystemState
from ..ltl import (
    Always, And, FalseF, Formula, Implies, Not, Or, Prop, TrueF, UnknownProposition,
    format_formula, is_temporal, ltl_to_buchi, normalize_negation, parse_formula, propositions,
)
from . import _search_py, search
from .graph import Limits, StateGraph, explore
from .trace import Trace, build_trace, format_counterexample, trace_records

HOLDS = "HOLDS"
VIOLATED = "VIOLATED"
DEADLOCK = "DEADLOCK"
MODEL_ERROR = "MODEL_ERROR"

PropTable = Mapping[str, Union[Expr, Callable[[SystemState], bool]]]


class ShapeUnsupported(ValueError):
    pass


@dataclass
class VacuityReport:
    vacuous: bool
    antecedent: str
    states_checked: int
    valuations: list[dict]  # distinct antecedent-proposition valuations seen
    witness: Optional[Trace] = None

    def to_dict(self) -> dict:
        return {
            "vacuous": self.vacuous,
            "antecedent": self.antecedent,
            "statesChecked": self.states_checked,
            "valuationsSeen": self.valuations,
            "witness": None if self.witness is None else trace_records(self.witness),
        }


@dataclass
class Verdict:
    outcome: str
    property: str
    states_explored: int
    transitions_explored: int
    trace: Optional[Trace] = None
    formula: Optional[str] = None
    mode: Optional[str] = None
    fairness: bool = False
    complete: bool = True
    vacuity: Optional[VacuityReport] = None
    error: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> Optional[bool]:
        return None if self.vacuity is None else self.vacuity.vacuous

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "property": self.property,
            "formula": self.formula,
            "mode": self.mode,
            "fairness": self.fairness,
            "statesExplored": self.states_explored,
            "transitionsExplored": self.transitions_explored,
            "limitExceeded": not self.complete,
            "vacuous": self.vacuous,
            "vacuity": None if self.vacuity is None else self.vacuity.to_dict(),
            "error": self.error,
            "trace": None if self.trace is None else {
                "lassoStart": self.trace.lasso_start,
                "finalDigest": self.trace.final_digest,
                "steps": trace_records(self.trace),
            },
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def describe(self) -> str:
        head = f"{self.property}: {self.outcome}"
        if self.vacuous:
            head += " (vacuously)"
        lines = [head, f"  states {self.states_explored}, transitions {self.transitions_explored}"]
        if not self.complete:
            lines.append("  search limit reached; result covers the explored part only")
        if self.error:
            lines.append(f"  {self.error}")
        if self.trace is not None:
            lines.append(format_counterexample(self.trace).rstrip("\n"))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# reachability


@dataclass
class ReachabilityReport:
    states: int
    transitions: int
    valid_end_states: list[int]
    invalid_end_states: list[int]
    complete: bool
    truncated: int
    graph: StateGraph = field(repr=False)


def explore_statespace(model: Model, limits: Limits = Limits(), order: str = "dfs") -> ReachabilityReport:
    g = explore(model, limits, order=order)
    if g.error is not None:
        raise g.error[1]
    valid = [s for s in g.quiescent if model.is_valid_end_state(g.states[s])]
    invalid = [s for s in g.quiescent if not model.is_valid_end_state(g.states[s])]
    return ReachabilityReport(len(g.states), g.transition_count, valid, invalid, g.complete,
                              len(g.truncated), g)


def _path_trace(g: StateGraph, s: int) -> Trace:
    trace, _ = build_trace(g.model, [g.transitions[e] for e in g.path_to(s)])
    return trace


def _error_verdict(g: StateGraph, prop: str, **kw) -> Verdict:
    s, exc = g.error
    return Verdict(MODEL_ERROR, prop, len(g.states), g.transition_count, _path_trace(g, s),
                   complete=False, error=str(exc), **kw)


def check_deadlock(model: Model, limits: Limits = Limits(), *, bfs: bool = False,
                   graph: Optional[StateGraph] = None) -> Verdict:
    """HOLDS iff every reachable quiescent state is a valid end state."""
    g = graph or explore(model, limits, order="bfs" if bfs else "dfs")
    if g.error is not None:
        return _error_verdict(g, "deadlock")
    bad = [s for s in g.quiescent if not model.is_valid_end_state(g.states[s])]
    if bad:
        s = min(bad, key=lambda i: (g.depth[i], i)) if bfs else bad[0]
        trace = _path_trace(g, s)
        trace.lasso_start = len(trace.steps)
        stuck = model.stuck_processes(g.states[s])
        names = ", ".join(f"{g.states[s].procs[p].template}[{p}]" for p in stuck)
        return Verdict(DEADLOCK, "deadlock", len(g.states), g.transition_count, trace,
                       complete=g.complete, error=f"invalid end state: stuck {names}")
    return Verdict(HOLDS, "deadlock", len(g.states), g.transition_count, complete=g.complete)


# ---------------------------------------------------------------------------
# LTL


def _predicates(model: Model, names, props: Optional[PropTable]) -> dict:
    out = {}
    for n in names:
        if props is not None and n in props:
            p = props[n]
            out[n] = p if callable(p) else model.compile_prop(p)
        elif n in model.propositions:
            out[n] = (lambda f: lambda st: bool(f(st.globals, (), st.channels)))(
                model.propositions[n])
        else:
            raise UnknownProposition(f"unknown proposition '{n}'")
    return out


def _as_formula(f: Union[str, Formula], model: Model, props: Optional[PropTable]) -> Formula:
    if isinstance(f, Formula):
        return f
    known = set(model.propositions) | set(props or {})
    return parse_formula(f, known)


def _lasso_trace(g: StateGraph, B: int, nodes, edges, loop_start) -> Trace:
    trans = []
    start = None
    for i, e in enumerate(edges):
        if i == loop_start:
            start = len(trans)
        t = g.transitions[e]
        if t is not None:
            trans.append(t)
    trace, _ = build_trace(g.model, trans, start)
    return trace


def _fair_lasso(g: StateGraph, automaton, members: list[int]):
    """Stem to an accepting node of the SCC plus a cycle inside it on which
    every process enabled throughout the SCC moves at least once."""
    b_off, b_tgt, b_pos, b_neg, b_acc = automaton
    B = len(b_off) - 1
    args = (B, g.offsets, g.targets, g.labels, b_off, b_tgt, b_pos, b_neg)
    inside = set(members)

    def succ(u):
        k = 0
        while True:
            v, e, k = _search_py._next(u, k, *args)
            if v < 0:
                return
            yield v, e

    def bfs(starts, goal, within=None, min_one=False):
        """Shortest list of (u, edge, v) steps from ``starts`` to a goal node."""
        if not min_one and any(goal(x) for x in starts):
            return []
        start_set = set(starts)
        seen = set() if min_one else set(starts)
        prev = {}
        queue = deque(starts)
        while queue:
            u = queue.popleft()
            for v, e in succ(u):
                if (within is not None and v not in within) or v in seen:
                    continue
                seen.add(v)
                prev[v] = (u, e)
                if goal(v):
                    steps, x = [], v
                    while True:
                        pu, pe = prev[x]
                        steps.append((pu, pe, x))
                        x = pu
                        if x in start_set:
                            break
                    steps.reverse()
                    return steps
                queue.append(v)
        raise AssertionError("no path inside a strongly connected component")

    acc = min(w for w in members if b_acc[w % B])
    inits = _search_py.initial_nodes(g.labels, b_off, b_tgt, b_pos, b_neg, 0)
    stem = bfs(inits, lambda v: v == acc)
    counts: dict[int, int] = {}
    for w in members:
        s = w // B
        for p in {g.movers[e] for e in range(g.offsets[s], g.offsets[s + 1])}:
            if p >= 0:
                counts[p] = counts.get(p, 0) + 1
    required = sorted(p for p, c in counts.items() if c == len(members))
    cycle: list = []
    cur = acc
    for p in required:
        sources = {u for u in members for v, e in succ(u) if v in inside and g.movers[e] == p}
        path = bfs([cur], lambda v: v in sources, inside)
        cycle += path
        if path:
            cur = path[-1][2]
        v, e = next((v, e) for v, e in succ(cur) if v in inside and g.movers[e] == p)
        cycle.append((cur, e, v))
        cur = v
    if cur != acc or not cycle:
        cycle += bfs([cur], lambda v: v == acc, inside, min_one=not cycle)
    steps = stem + cycle
    return [u for u, _, _ in steps], [e for _, e, _ in steps], len(stem)


def check_ltl_property(model: Model, formula: Union[str, Formula], *,
                       props: Optional[PropTable] = None, fair: bool = False,
                       limits: Limits = Limits(), graph: Optional[StateGraph] = None,
                       name: Optional[str] = None, mode: Optional[str] = None,
                       vacuity: bool = True, impl=None) -> Verdict:
    """Search the product with the automaton for ``!formula``.

    Terminating runs are extended by repeating their final state. With
    ``fair`` only weakly fair accepting cycles count as violations.
    """
    f = _as_formula(formula, model, props)
    text = format_formula(f)
    label = name or text
    names = sorted(propositions(f))
    preds = _predicates(model, names, props)
    g = graph or explore(model, limits)
    if g.error is not None:
        return _error_verdict(g, label, formula=text, mode=mode, fairness=fair)
    aut = ltl_to_buchi(normalize_negation(Not(f)))
    g.label({n: preds[n] for n in aut.propositions})
    enc = aut.encode()
    B = aut.states
    if fair:
        members = search.accepting_scc(g, enc, True, impl)
        found = None if members is None else _fair_lasso(g, enc, members)
    else:
        found = search.ndfs(g, enc, impl)
    report = None
    if vacuity:
        try:
            report = detect_vacuity(model, f, props=props, graph=g)
        except ShapeUnsupported:
            report = None
    common = dict(formula=text, mode=mode, fairness=fair, complete=g.complete, vacuity=report)
    if found is None:
        return Verdict(HOLDS, label, len(g.states), g.transition_count, **common)
    trace = _lasso_trace(g, B, *found)
    return Verdict(VIOLATED, label, len(g.states), g.transition_count, trace, **common)


# ---------------------------------------------------------------------------
# vacuity


def _eval_state(f: Formula, val: Mapping[str, bool]) -> bool:
    match f:
        case Prop(n):
            return bool(val[n])
        case TrueF():
            return True
        case FalseF():
            return False
        case Not(x):
            return not _eval_state(x, val)
        case And(a, b):
            return _eval_state(a, val) and _eval_state(b, val)
        case Or(a, b):
            return _eval_state(a, val) or _eval_state(b, val)
        case Implies(a, b):
            return (not _eval_state(a, val)) or _eval_state(b, val)
    raise ShapeUnsupported(f"temporal operator in state formula: {format_formula(f)}")


def detect_vacuity(model: Model, formula: Union[str, Formula], *,
                   props: Optional[PropTable] = None, limits: Limits = Limits(),
                   graph: Optional[StateGraph] = None) -> VacuityReport:
    """For ``[] (a -> c)`` with a state formula ``a``: is ``a`` never true?"""
    f = _as_formula(formula, model, props)
    if not (isinstance(f, Always) and isinstance(f.operand, Implies)) \
            or is_temporal(f.operand.left):
        raise ShapeUnsupported(f"vacuity needs [] (a -> c), got {format_formula(f)}")
    ante = f.operand.left
    names = sorted(propositions(ante))
    preds = _predicates(model, names, props)
    g = graph or explore(model, limits)
    seen: dict[tuple, None] = {}
    witness = None
    for i, st in enumerate(g.states):
        val = {n: preds[n](st) for n in names}
        seen.setdefault(tuple(val[n] for n in names), None)
        if witness is None and _eval_state(ante, val):
            witness = i
    valuations = [dict(zip(names, k)) for k in sorted(seen)]
    trace = None if witness is None else _path_trace(g, witness)
    return VacuityReport(witness is None, format_formula(ante), len(g.states), valuations, trace)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationResult:
    trace: Trace
    final: SystemState
    valid_end: bool
    finished: bool  # False when max_steps cut the run short
    error: Optional[str] = None


def simulate(model: Model, seed: int = 0, max_steps: int = 10_000) -> SimulationResult:
    """One pseudo-random maximal run, uniform over enabled transitions."""
    rng = random.Random(seed)
    state = model.initial_state()
    chosen = []
    error = None
    try:
        for _ in range(max_steps):
            moves = model.enabled_transitions(state)
            if not moves:
                break
            t = moves[rng.randrange(len(moves))]
            state = model.fire(state, t)
            chosen.append(t)
    except ModelError as exc:
        error = str(exc)
    finished = error is None and not model.enabled_transitions(state)
    trace, final = build_trace(model, chosen)
    return SimulationResult(trace, final, finished and model.is_valid_end_state(final),
                            finished, error)
