"""Workflow control-flow patterns expanded into kernel statements.

Every expansion mirrors the shape of the corresponding PROMELA ``inline``
definition, so the kernel executes the same steps SPIN would. Helper
locals are declared with ``Decl`` (hoisted to process creation) and carry a
caller-supplied ``prefix`` so several expansions can share one process.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Container, Optional, Sequence, Union

from .kernel.errors import CompileError
from .kernel.syntax import (
    Assert, Assign, Atomic, BinOp, Break, Const, Decl, Do, Expr, Goto, Guard, If, Index,
    Label, Len, Recv, Run, Send, Skip, Template, Timeout, Unless, Var,
)

DEFAULT_MAX_ARRAY_SIZE = 16
MY_RUN = "myRun"


class PatternError(CompileError):
    code = "PATTERN_ERROR"


class UnresolvedChannel(PatternError):
    code = "UNRESOLVED_CHANNEL"


class ArityMismatch(PatternError):
    code = "ARITY_MISMATCH"


class UnknownProcessId(PatternError):
    code = "UNKNOWN_PROCESS_ID"


class RegistryError(PatternError):
    code = "REGISTRY_ERROR"


def _c(v: int) -> Const:
    return Const(v)


def _v(name: str) -> Var:
    return Var(name)


def _ix(name: str, i: Expr) -> Index:
    return Index(name, i)


def _op(op: str, a: Expr, b: Expr) -> BinOp:
    return BinOp(op, a, b)


def _and(*xs: Expr) -> Expr:
    out = xs[0]
    for x in xs[1:]:
        out = BinOp("&&", out, x)
    return out


def _inc(name: str) -> Assign:
    return Assign(_v(name), _op("+", _v(name), _c(1)))


def _chan_name(ref: Union[str, Expr]) -> Optional[str]:
    if isinstance(ref, str):
        return ref
    if isinstance(ref, (Var, Index)):
        return ref.name
    return None


def _resolve(ref: Union[str, Expr], channels: Optional[Container[str]]) -> None:
    name = _chan_name(ref)
    if name is None:
        raise UnresolvedChannel(f"not a channel reference: {ref!r}")
    if channels is not None and name not in channels:
        raise UnresolvedChannel(f"unknown channel '{name}'")


def _check_size(sizeq: int, max_array_size: int = DEFAULT_MAX_ARRAY_SIZE) -> None:
    if sizeq < 1:
        raise ArityMismatch(f"sizeq must be at least 1, got {sizeq}")
    if sizeq > max_array_size:
        raise ArityMismatch(f"sizeq {sizeq} exceeds MAXARRAYSIZE {max_array_size}")


# ---------------------------------------------------------------------------
# basic control flow


def expand_sequence(q: Expr, msg: Optional[Expr] = None, side: str = "sender", *,
                    target: Optional[Expr] = None, prefix: str = "",
                    channels: Optional[Container[str]] = None) -> tuple:
    """``send(q, msg)`` for the sender, ``recv(q, x)`` for the receiver."""
    _resolve(q, channels)
    if side == "sender":
        return (Send(q, msg if msg is not None else _c(1)),)
    if side != "receiver":
        raise ValueError(f"side must be 'sender' or 'receiver', not {side!r}")
    if target is not None:
        return (Recv(q, target),)
    x = f"{prefix}x"
    return (Decl(x), Recv(q, _v(x)))


def expand_parallel_split(qs: str, sizeq: int, msgs: Union[str, Sequence[Expr]], *,
                          prefix: str = "", channels: Optional[Container[str]] = None,
                          max_array_size: int = DEFAULT_MAX_ARRAY_SIZE) -> tuple:
    """Atomic loop sending ``msgs[n]`` on ``qs[n]`` for every n below sizeq.

    ``msgs`` is either the name of an int array or one expression per
    branch; the latter is materialised into a helper array.
    """
    _resolve(qs, channels)
    _check_size(sizeq, max_array_size)
    n = f"{prefix}n"
    decls: list = [Decl(n)]
    setup: list = []
    if isinstance(msgs, str):
        arr = msgs
    else:
        msgs = tuple(msgs)
        if len(msgs) != sizeq:
            raise ArityMismatch(f"parallel split over {sizeq} channels given {len(msgs)} messages")
        arr = f"{prefix}msgs"
        values = {m.value for m in msgs if isinstance(m, Const)}
        if len(values) == 1 and all(isinstance(m, Const) for m in msgs):
            decls.append(Decl(arr, size=sizeq, init=values.pop()))
        else:
            decls.append(Decl(arr, size=sizeq))
            setup = [Assign(_ix(arr, _c(i)), m) for i, m in enumerate(msgs)]
    loop = Do((
        (Guard(_op("<", _v(n), _c(sizeq))), Send(_ix(qs, _v(n)), _ix(arr, _v(n))), _inc(n)),
        (Guard(_op(">=", _v(n), _c(sizeq))), Break()),
    ))
    return (*decls, Assign(_v(n), _c(0)), Atomic((*setup, loop)))


def expand_synchronization(qs: str, sizeq: int, msgs: Optional[str] = None, *,
                           prefix: str = "", channels: Optional[Container[str]] = None,
                           max_array_size: int = DEFAULT_MAX_ARRAY_SIZE) -> tuple:
    """Polling loop that receives exactly one message from each ``qs[n]``.

    Labels ``S`` and ``E`` and the ``timeout`` at the wrap-around are kept
    so the step structure matches the PROMELA inline one-for-one.
    """
    _resolve(qs, channels)
    _check_size(sizeq, max_array_size)
    n, count, aux = f"{prefix}n", f"{prefix}count", f"{prefix}aux"
    s_label, e_label = f"{prefix}S", f"{prefix}E"
    decls = [Decl(n), Decl(count), Decl(aux, size=max_array_size)]
    if msgs is None:
        msgs = f"{prefix}msgs"
        decls.append(Decl(msgs, size=sizeq))
    init_aux = Do((
        (Guard(_op("<", _v(n), _c(sizeq))), Assign(_ix(aux, _v(n)), _c(0)), _inc(n)),
        (Guard(_op("==", _v(n), _c(sizeq))), Assign(_v(n), _c(0)), Break()),
    ))
    poll = If((
        (Guard(_and(_op("==", _ix(aux, _v(n)), _c(0)),
                    _op(">", Len(_ix(qs, _v(n))), _c(0)),
                    _op("<", _v(count), _c(sizeq)))),
         Assign(_ix(aux, _v(n)), _c(1)), Recv(_ix(qs, _v(n)), _ix(msgs, _v(n))), _inc(count)),
        (Guard(_op(">=", _v(count), _c(sizeq))), Goto(e_label)),
    ), else_=(Skip(),))
    wrap = If((
        (Guard(_op("==", _v(n), _c(sizeq))), Assign(_v(n), _c(0)), Timeout()),
        (Guard(_op("<", _v(n), _c(sizeq))), Skip()),
    ))
    return (*decls, Assign(_v(n), _c(0)), Assign(_v(count), _c(0)), init_aux, Skip(),
            Label(s_label), poll, _inc(n), wrap, Goto(s_label), Label(e_label), Skip())


def expand_exclusive_choice(qs: str, sizeq: int, choice: Expr, msg: Expr, *,
                            channels: Optional[Container[str]] = None) -> tuple:
    """Send ``msg`` on ``qs[choice]`` when the index is in range, else skip."""
    _resolve(qs, channels)
    in_range = _and(_op(">=", choice, _c(0)), _op("<", choice, _c(sizeq)))
    return (If(((Guard(in_range), Send(_ix(qs, choice), msg)),), else_=(Skip(),)),)


def expand_simple_merge(qs: str, sizeq: int, target: Optional[Expr] = None, *,
                        prefix: str = "", channels: Optional[Container[str]] = None,
                        max_array_size: int = DEFAULT_MAX_ARRAY_SIZE) -> tuple:
    """First message on any ``qs[i]`` lets the flow continue; others stay queued."""
    _resolve(qs, channels)
    _check_size(sizeq, max_array_size)
    decls: tuple = ()
    if target is None:
        x = f"{prefix}x"
        decls, target = (Decl(x),), _v(x)
    options = tuple((Recv(_ix(qs, _c(i)), target), Break()) for i in range(sizeq))
    return (*decls, Do(options))


# ---------------------------------------------------------------------------
# cancellation


def wrap_cancel_activity(body: Sequence, q_cancel: Expr, *,
                         channels: Optional[Container[str]] = None) -> tuple:
    """``{ body } unless { len(qCancel)>0; skip; }``"""
    _resolve(q_cancel, channels)
    return (Unless(tuple(body), (Guard(_op(">", Len(q_cancel), _c(0))), Skip())),)


@dataclass
class ProcessRegistry:
    """Process identification numbers and the parent relation (``piIds``).

    ``entries`` maps an id to the template run for it; the root id maps to
    ``None`` because it stands for the workflow case itself.
    """

    entries: dict = field(default_factory=dict)
    parents: dict = field(default_factory=dict)

    def add(self, pid: int, template: Optional[str], parent: int) -> None:
        if pid in self.entries:
            raise RegistryError(f"process id {pid} registered twice")
        self.entries[pid] = template
        self.parents[pid] = parent

    @property
    def size(self) -> int:
        return max(self.entries, default=-1) + 1

    def children(self, pid: int) -> list[int]:
        return sorted(c for c, p in self.parents.items() if p == pid)

    def descendants(self, pid: int) -> list[int]:
        out, todo = [], self.children(pid)
        while todo:
            c = todo.pop(0)
            out.append(c)
            todo.extend(self.children(c))
        return out

    def problems(self) -> list[tuple[str, str]]:
        """(code, message) pairs; empty when the registry is well formed."""
        out = []
        ids = sorted(self.entries)
        if ids != list(range(len(ids))):
            out.append(("IDS_NOT_DENSE", f"process ids must be 0..{len(ids) - 1}, got {ids}"))
        roots = [i for i in ids if self.parents[i] == -1]
        if len(roots) != 1:
            out.append(("ROOT_COUNT", f"exactly one id must have parent -1, found {roots}"))
        for i in ids:
            p = self.parents[i]
            if p != -1 and p not in self.entries:
                out.append(("UNKNOWN_PARENT", f"id {i} has undeclared parent {p}"))
        for i in ids:
            seen, cur = set(), i
            while cur in self.parents and self.parents[cur] != -1 and cur not in seen:
                seen.add(cur)
                cur = self.parents[cur]
            if cur in seen:
                out.append(("PARENT_CYCLE", f"parent relation has a cycle through id {i}"))
                break
        return out

    def validate(self) -> None:
        issues = self.problems()
        if issues:
            raise RegistryError("; ".join(m for _, m in issues))

    def parent_values(self) -> list[int]:
        return [self.parents.get(i, 0) for i in range(self.size)]


def expand_cancel_case(qs_cancel: str, sizeq: int, registry: ProcessRegistry, pid: int, *,
                       parents: str = "piIds", msgs: Optional[str] = None,
                       prefix: str = "", channels: Optional[Container[str]] = None) -> tuple:
    """Send a cancel message to every direct child of ``pid``.

    Transitive cancellation comes from each child's own escape running this
    same loop. Without ``msgs`` a helper array of 1s is used.
    """
    if pid not in registry.entries:
        raise UnknownProcessId(f"process id {pid} is not registered")
    _resolve(qs_cancel, channels)
    i = f"{prefix}i"
    decls = [Decl(i, init=0)]
    if msgs is None:
        msgs = f"{prefix}cmsgs"
        decls.append(Decl(msgs, size=sizeq, init=1))
    loop = Do((
        (Guard(_and(_op("<", _v(i), _c(sizeq)), _op("==", _ix(parents, _v(i)), _c(pid)))),
         Send(_ix(qs_cancel, _v(i)), _ix(msgs, _v(i))), _inc(i)),
        (Guard(_op("==", _v(i), _c(sizeq))), Break()),
    ), else_=(_inc(i),))
    return (*decls, loop)


def cancel_case_escape(qs_cancel: str, sizeq: int, registry: ProcessRegistry, pid: int,
                       then: Sequence = (), **kw) -> tuple:
    """``len(qsCancel[id])>0; cancelCase(...); then...``"""
    guard = Guard(_op(">", Len(_ix(qs_cancel, _c(pid))), _c(0)))
    return (guard, *expand_cancel_case(qs_cancel, sizeq, registry, pid, **kw), *then)


def wrap_cancel_case(body: Sequence, qs_cancel: str, sizeq: int, registry: ProcessRegistry,
                     pid: int, then: Sequence = (), **kw) -> tuple:
    return (Unless(tuple(body), cancel_case_escape(qs_cancel, sizeq, registry, pid, then, **kw)),)


def build_my_run(registry: ProcessRegistry, strict: bool = False) -> Template:
    """Dispatcher ``myRun(id, n)`` running the template registered for ``id``.

    ``n`` is the instance identification (-1 when unused). An unregistered
    id blocks forever in strict mode, as in SPIN; otherwise it is an error.
    """
    options = tuple((Guard(_op("==", _v("id"), _c(k))), Run(name))
                    for k, name in sorted(registry.entries.items()) if name is not None)
    if not options:
        raise RegistryError("myRun needs at least one registered process")
    else_ = None if strict else (Assert(_c(0), "myRun: unknown process id"),)
    return Template(MY_RUN, ("id", "n"), (If(options, else_=else_),))


# ---------------------------------------------------------------------------
# invocation records


KINDS = ("sequence_send", "sequence_recv", "parallel_split", "synchronization",
         "exclusive_choice", "simple_merge", "cancel_case", "my_run")


@dataclass(frozen=True)
class PatternInvocation:
    kind: str
    chan_args: tuple = ()
    size: Optional[int] = None
    msg_args: tuple = ()
    choice: Optional[Expr] = None
    process_id: Optional[int] = None


def expand(inv: PatternInvocation, *, registry: Optional[ProcessRegistry] = None,
           prefix: str = "", channels: Optional[Container[str]] = None,
           max_array_size: int = DEFAULT_MAX_ARRAY_SIZE, parents: str = "piIds") -> tuple:
    """Expand one invocation; the argument shapes follow each ``expand_*``."""
    k = inv.kind
    if k not in KINDS:
        raise PatternError(f"unknown pattern kind '{k}'")
    if k in ("sequence_send", "sequence_recv"):
        if len(inv.chan_args) != 1:
            raise ArityMismatch(f"{k} takes one channel")
        if k == "sequence_send":
            msg = inv.msg_args[0] if inv.msg_args else None
            return expand_sequence(inv.chan_args[0], msg, "sender", channels=channels)
        target = inv.msg_args[0] if inv.msg_args else None
        return expand_sequence(inv.chan_args[0], None, "receiver", target=target,
                               prefix=prefix, channels=channels)
    if k == "my_run":
        if inv.process_id is None:
            raise ArityMismatch("my_run needs a process id")
        if registry is not None and registry.entries.get(inv.process_id) is None:
            raise UnknownProcessId(f"process id {inv.process_id} is not registered")
        return (Run(MY_RUN, (_c(inv.process_id), _c(-1))),)
    if len(inv.chan_args) != 1 or not isinstance(inv.chan_args[0], str) or inv.size is None:
        raise ArityMismatch(f"{k} takes a channel array and its size")
    qs, sizeq = inv.chan_args[0], inv.size
    if k == "parallel_split":
        msgs = inv.msg_args[0] if len(inv.msg_args) == 1 and isinstance(inv.msg_args[0], str) \
            else inv.msg_args
        return expand_parallel_split(qs, sizeq, msgs, prefix=prefix, channels=channels,
                                     max_array_size=max_array_size)
    if k == "synchronization":
        msgs = inv.msg_args[0] if inv.msg_args else None
        return expand_synchronization(qs, sizeq, msgs, prefix=prefix, channels=channels,
                                      max_array_size=max_array_size)
    if k == "exclusive_choice":
        if inv.choice is None or len(inv.msg_args) != 1:
            raise ArityMismatch("exclusive_choice needs a choice and one message")
        return expand_exclusive_choice(qs, sizeq, inv.choice, inv.msg_args[0], channels=channels)
    if k == "simple_merge":
        target = inv.msg_args[0] if inv.msg_args else None
        return expand_simple_merge(qs, sizeq, target, prefix=prefix, channels=channels,
                                   max_array_size=max_array_size)
    # cancel_case
    if registry is None or inv.process_id is None:
        raise ArityMismatch("cancel_case needs a registry and a process id")
    msgs = inv.msg_args[0] if inv.msg_args else None
    return expand_cancel_case(qs, sizeq, registry, inv.process_id, parents=parents,
                              msgs=msgs, prefix=prefix, channels=channels)
