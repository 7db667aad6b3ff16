"""Command-line driver: ``wfcheck check|emit|simulate MODEL.wf``.

Exit codes: 0 holds / success, 1 property violated, 2 usage or model
error, 3 deadlock. Documents go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

from .checker import (
    DEADLOCK, MODEL_ERROR, VIOLATED, Limits, check_deadlock, check_ltl_property, explore,
    format_counterexample, simulate,
)
from .dsl import (
    MODES, WorkflowInvalid, WorkflowSyntaxError, compile_formula, compile_to_kernel,
    parse_workflow, validate_workflow,
)
from .kernel import CompileError
from .ltl import LTLSyntaxError, UnknownProposition
from .patterns import DEFAULT_MAX_ARRAY_SIZE, PatternError
from .promela import EmitConfig, EmitError, emit_files

EXIT_OK, EXIT_VIOLATED, EXIT_ERROR, EXIT_DEADLOCK = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model_path: str
    props: list = field(default_factory=list)
    formulas: list = field(default_factory=list)
    mode: Optional[str] = None
    fair: bool = False
    max_states: int = Limits().max_states
    max_depth: int = Limits().max_depth
    seed: int = 0
    out: Optional[str] = None
    bfs_safety: bool = False
    deadlock: bool = False
    strict_spin: bool = False
    max_array_size: int = DEFAULT_MAX_ARRAY_SIZE

    @property
    def effective_mode(self) -> str:
        # --strict-spin restores the literal scalar observation unless told otherwise
        return self.mode or ("scalar" if self.strict_spin else "flags")

    @property
    def limits(self) -> Limits:
        return Limits(self.max_states, self.max_depth)


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wfcheck", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("model", help="workflow definition (.wf)")
        p.add_argument("--mode", choices=[m for m in MODES if m != "none"],
                       help="observation mode (default flags; scalar with --strict-spin)")
        p.add_argument("--strict-spin", action="store_true",
                       help="SPIN fidelity: blocking myRun dispatch, scalar observation")
        p.add_argument("--max-states", type=_positive, default=Limits().max_states)
        p.add_argument("--max-depth", type=_positive, default=Limits().max_depth)
        p.add_argument("--max-array-size", type=_positive, default=DEFAULT_MAX_ARRAY_SIZE)
        p.add_argument("--out", "-o", help="output file (directory for emit)")

    c = sub.add_parser("check", help="deadlock and LTL verification")
    common(c)
    c.add_argument("--prop", action="append", default=[], help="named ltl property")
    c.add_argument("--prop-formula", action="append", default=[], help="inline LTL formula")
    c.add_argument("--fair", action="store_true", help="weak process fairness")
    c.add_argument("--bfs-safety", action="store_true",
                   help="breadth-first deadlock search (shortest trace)")
    c.add_argument("--deadlock", action="store_true",
                   help="also check deadlock when properties are selected")
    e = sub.add_parser("emit", help="write PROMELA files")
    common(e)
    s = sub.add_parser("simulate", help="one seeded random run")
    common(s)
    s.add_argument("--seed", type=int, default=0)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command, model_path=ns.model, props=getattr(ns, "prop", []),
        formulas=getattr(ns, "prop_formula", []), mode=ns.mode,
        fair=getattr(ns, "fair", False), max_states=ns.max_states, max_depth=ns.max_depth,
        seed=getattr(ns, "seed", 0), out=ns.out, bfs_safety=getattr(ns, "bfs_safety", False),
        deadlock=getattr(ns, "deadlock", False), strict_spin=ns.strict_spin,
        max_array_size=ns.max_array_size)


def _load(cfg: RunConfig):
    try:
        with open(cfg.model_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {cfg.model_path}: {exc.strerror}") from None
    d = parse_workflow(text)
    for diag in validate_workflow(d, cfg.max_array_size):
        if diag.severity == "warning":
            print(f"{cfg.model_path}:{diag}", file=sys.stderr)
    return compile_to_kernel(d, cfg.effective_mode, strict=cfg.strict_spin,
                             max_array_size=cfg.max_array_size)


def _write(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_check(cfg: RunConfig) -> int:
    cw = _load(cfg)
    for name in cfg.props:
        if name not in cw.properties:
            known = ", ".join(sorted(cw.properties)) or "none"
            raise UsageError(f"unknown property '{name}' (defined: {known})")
    selected = [(n, *cw.properties[n]) for n in cfg.props]
    for text in cfg.formulas:
        f, table = compile_formula(cw, text)
        selected.append((text, f, table))
    if not cfg.props and not cfg.formulas:
        selected = [(n, f, t) for n, (f, t) in cw.properties.items()]
    verdicts = []
    graph = explore(cw.model, cfg.limits) if selected else None
    if cfg.deadlock or not (cfg.props or cfg.formulas):
        # the breadth-first search needs its own graph for shortest traces
        shared = None if cfg.bfs_safety else graph
        verdicts.append(check_deadlock(cw.model, cfg.limits, bfs=cfg.bfs_safety, graph=shared))
    for name, f, table in selected:
        verdicts.append(check_ltl_property(cw.model, f, props=table, fair=cfg.fair,
                                           graph=graph, name=name, mode=cw.mode))
    outcomes = [v.outcome for v in verdicts]
    if MODEL_ERROR in outcomes:
        code = EXIT_ERROR
    elif VIOLATED in outcomes:
        code = EXIT_VIOLATED
    elif DEADLOCK in outcomes:
        code = EXIT_DEADLOCK
    else:
        code = EXIT_OK
    for v in verdicts:
        if not v.complete:
            print(f"warning: {v.property}: search limit reached, result is partial",
                  file=sys.stderr)
    doc = {"workflow": cw.definition.name, "mode": cw.mode, "fairness": cfg.fair,
           "exitCode": code, "verdicts": [v.to_dict() for v in verdicts]}
    _write(cfg, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return code


def cmd_emit(cfg: RunConfig) -> int:
    cw = _load(cfg)
    out_dir = cfg.out or "."
    try:
        paths = emit_files(cw, out_dir, EmitConfig(max_array_size=cfg.max_array_size))
    except OSError as exc:
        raise UsageError(f"cannot write to {out_dir}: {exc.strerror}") from None
    for p in paths:
        print(p)
    return EXIT_OK


def final_summary(model, state) -> str:
    done = [f"{p.template}[{p.pid}]" for p in state.procs if model.is_done(p)]
    stuck = [f"{state.procs[i].template}[{i}]" for i in model.stuck_processes(state)]
    head = "valid end state" if model.is_valid_end_state(state) else "invalid end state"
    line = f"end: {head}; done: {', '.join(done) or '-'}"
    if stuck:
        line += f"; blocked: {', '.join(stuck)}"
    return line


def cmd_simulate(cfg: RunConfig) -> int:
    cw = _load(cfg)
    r = simulate(cw.model, cfg.seed, cfg.max_depth)
    text = format_counterexample(r.trace)
    if r.error:
        text += f"error: {r.error}\n"
    elif not r.finished:
        text += f"stopped after {len(r.trace.steps)} steps (--max-depth)\n"
    else:
        text += final_summary(cw.model, r.final) + "\n"
    _write(cfg, text)
    if r.error:
        return EXIT_ERROR
    if r.finished and not r.valid_end:
        return EXIT_DEADLOCK
    return EXIT_OK


COMMANDS = {"check": cmd_check, "emit": cmd_emit, "simulate": cmd_simulate}


def run(cfg: RunConfig) -> int:
    try:
        return COMMANDS[cfg.command](cfg)
    except WorkflowSyntaxError as exc:
        print(f"{cfg.model_path}:{exc}", file=sys.stderr)
    except WorkflowInvalid as exc:
        for d in exc.diagnostics:
            print(f"{cfg.model_path}:{d}", file=sys.stderr)
    except (LTLSyntaxError, UnknownProposition) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except EmitError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (CompileError, PatternError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
