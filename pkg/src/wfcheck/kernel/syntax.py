"""Abstract syntax of the PROMELA subset executed by the kernel."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Index(Expr):
    name: str
    index: Expr


@dataclass(frozen=True)
class Len(Expr):
    chan: Expr


@dataclass(frozen=True)
class ChanQuery(Expr):
    """``full``, ``empty``, ``nfull`` or ``nempty`` applied to a channel."""

    op: str
    chan: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str
    operand: Expr


LValue = Union[Var, Index]

ARITH_OPS = ("+", "-", "*", "/", "%")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||")


class Stmt:
    pass


Body = tuple  # tuple[Stmt, ...]


@dataclass(frozen=True)
class Skip(Stmt):
    pass


@dataclass(frozen=True)
class Assign(Stmt):
    target: LValue
    expr: Expr


@dataclass(frozen=True)
class Send(Stmt):
    chan: Expr
    msg: Expr


@dataclass(frozen=True)
class Recv(Stmt):
    chan: Expr
    target: LValue


@dataclass(frozen=True)
class Guard(Stmt):
    cond: Expr


@dataclass(frozen=True)
class If(Stmt):
    options: tuple  # tuple[Body, ...]
    else_: Optional[Body] = None


@dataclass(frozen=True)
class Do(Stmt):
    options: tuple
    else_: Optional[Body] = None


@dataclass(frozen=True)
class Break(Stmt):
    pass


@dataclass(frozen=True)
class Goto(Stmt):
    label: str


@dataclass(frozen=True)
class Label(Stmt):
    """Names the location of the statement that follows it."""

    name: str


@dataclass(frozen=True)
class Atomic(Stmt):
    body: Body


@dataclass(frozen=True)
class DStep(Stmt):
    body: Body


@dataclass(frozen=True)
class Unless(Stmt):
    main: Body
    escape: Body


@dataclass(frozen=True)
class Run(Stmt):
    template: str
    args: tuple = ()


@dataclass(frozen=True)
class Timeout(Stmt):
    pass


@dataclass(frozen=True)
class Assert(Stmt):
    cond: Expr
    message: str = ""


@dataclass(frozen=True)
class Decl(Stmt):
    """Local declaration; hoisted to process creation like SPIN does.

    ``size`` is ``None`` for scalars. ``init`` is applied to every element.
    """

    name: str
    kind: str = "int"
    size: Optional[int] = None
    init: int = 0


@dataclass(frozen=True)
class Observe(Stmt):
    """Observation assignments folded into the preceding statement's step."""

    assigns: tuple  # tuple[Assign, ...]


@dataclass(frozen=True)
class Template:
    name: str
    params: tuple = ()  # tuple[str, ...], all int-valued
    body: Body = ()


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    kind: str = "int"
    size: Optional[int] = None
    init: int = 0


@dataclass(frozen=True)
class ChannelDecl:
    name: str
    size: Optional[int] = None
    capacity: int = 1


@dataclass(frozen=True)
class ModelSource:
    """Everything needed to instantiate a kernel model.

    ``init`` is the body of the ``init`` process, which always gets pid 0.
    ``active`` names parameterless templates already running in the initial
    state (pids 1, 2, ... in order), like PROMELA's ``active proctype``.
    """

    templates: tuple = ()  # tuple[Template, ...]
    globals: tuple = ()  # tuple[GlobalDecl, ...]
    channels: tuple = ()  # tuple[ChannelDecl, ...]
    init: Body = ()
    active: tuple = ()  # tuple[str, ...]
    propositions: dict = field(default_factory=dict, compare=False, hash=False)


# ---------------------------------------------------------------------------
# pretty printing (PROMELA surface syntax)

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}


def format_expr(e: Expr, parent: int = 0) -> str:
    match e:
        case Const(v):
            return str(v)
        case Var(n):
            return n
        case Index(n, i):
            return f"{n}[{format_expr(i)}]"
        case Len(c):
            return f"len({format_expr(c)})"
        case ChanQuery(op, c):
            return f"{op}({format_expr(c)})"
        case UnOp(op, x):
            return f"{op}{format_expr(x, 7)}"
        case BinOp(op, l, r):
            p = _PREC[op]
            s = f"{format_expr(l, p)}{op}{format_expr(r, p + 1)}"
            return f"({s})" if p < parent else s
    raise TypeError(f"not an expression: {e!r}")


def format_stmt(s: Stmt) -> str:
    """One-line rendering used in traces."""
    match s:
        case Skip():
            return "skip"
        case Assign(t, x):
            return f"{format_expr(t)}={format_expr(x)}"
        case Send(c, m):
            return f"{format_expr(c)}!{format_expr(m)}"
        case Recv(c, t):
            return f"{format_expr(c)}?{format_expr(t)}"
        case Guard(c):
            return f"({format_expr(c)})"
        case If():
            return "if"
        case Do():
            return "do"
        case Break():
            return "break"
        case Goto(lbl):
            return f"goto {lbl}"
        case Label(n):
            return f"{n}:"
        case Atomic():
            return "atomic"
        case DStep(body):
            return "d_step { " + "; ".join(format_stmt(b) for b in body) + " }"
        case Unless():
            return "unless"
        case Run(t, args):
            return f"run {t}({', '.join(format_expr(a) for a in args)})"
        case Timeout():
            return "timeout"
        case Assert(c, _):
            return f"assert({format_expr(c)})"
        case Decl(n, k, size, init):
            dim = f"[{size}]" if size is not None else ""
            return f"{k} {n}{dim}" + (f"={init}" if init else "")
        case Observe(assigns):
            return "; ".join(format_stmt(a) for a in assigns) or "skip"
    raise TypeError(f"not a statement: {s!r}")
