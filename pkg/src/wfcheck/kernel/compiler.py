"""Lowering of process bodies to control-flow graphs.

Each template becomes a list of locations. A location owns the edges that
leave it; an edge is one indivisible step of the process. Compound
statements (``if``, ``do``, ``unless``, ``atomic``) leave no trace at run
time other than the location and edge attributes computed here:

* ``Location.escapes`` lists the unless-regions enclosing the location,
  outermost first. Escape priority is therefore a static property of the
  program counter.
* ``Edge.keep_atomic`` tells whether the process still holds atomic
  control after taking the edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

from .errors import CompileError, DivideByZero, IndexOutOfBounds, InvalidChannel, UnboundName
from .syntax import (
    Assert, Assign, Atomic, BinOp, Break, ChanQuery, Const, Decl, Do, DStep, Expr, Goto,
    Guard, If, Index, Label, Len, Observe, Recv, Run, Send, Skip, Stmt, Timeout, UnOp,
    Unless, Var, format_expr, format_stmt,
)

EvalFn = Callable[[tuple, tuple, tuple], int]

_INT_MIN = -(2**31)
_INT_SPAN = 2**32


def _wrap(v: int) -> int:
    if _INT_MIN <= v < -_INT_MIN:
        return v
    return (v - _INT_MIN) % _INT_SPAN + _INT_MIN


def _cdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


@dataclass(frozen=True)
class Slot:
    offset: int
    size: Optional[int]  # None for scalars
    kind: str  # "int" or "chan"


class Scope:
    """Name resolution: template locals shadow globals."""

    def __init__(self, local: dict[str, Slot], glob: dict[str, Slot], capacities=()):
        self.local = local
        self.glob = glob
        self.capacities = capacities

    def lookup(self, name: str) -> tuple[bool, Slot]:
        if name in self.local:
            return True, self.local[name]
        if name in self.glob:
            return False, self.glob[name]
        raise UnboundName(f"undeclared name '{name}'")


def chan_slot(ch: tuple, cid: int, where: str = "") -> int:
    if not 1 <= cid <= len(ch):
        raise InvalidChannel(f"channel value {cid} does not denote a channel", where)
    return cid - 1


def compile_expr(e: Expr, scope: Scope) -> EvalFn:
    match e:
        case Const(v):
            return lambda g, l, ch: v
        case Var(name):
            is_local, slot = scope.lookup(name)
            if slot.size is not None:
                raise CompileError(f"array '{name}' used without an index")
            off = slot.offset
            if is_local:
                return lambda g, l, ch: l[off]
            return lambda g, l, ch: g[off]
        case Index(name, idx):
            is_local, slot = scope.lookup(name)
            if slot.size is None:
                raise CompileError(f"scalar '{name}' used with an index")
            fi = compile_expr(idx, scope)
            off, size = slot.offset, slot.size

            def index(g, l, ch, _local=is_local):
                k = fi(g, l, ch)
                if not 0 <= k < size:
                    raise IndexOutOfBounds(f"{name}[{k}] outside 0..{size - 1}")
                return (l if _local else g)[off + k]

            return index
        case Len(c):
            fc = compile_expr(c, scope)
            return lambda g, l, ch: len(ch[chan_slot(ch, fc(g, l, ch))])
        case ChanQuery(op, c):
            fc = compile_expr(c, scope)
            caps = scope.capacities

            def query(g, l, ch):
                k = chan_slot(ch, fc(g, l, ch))
                n, cap = len(ch[k]), caps[k]
                full = n >= cap if cap > 0 else True
                return int({"full": full, "nfull": not full,
                            "empty": n == 0, "nempty": n > 0}[op])

            return query
        case UnOp("!", x):
            fx = compile_expr(x, scope)
            return lambda g, l, ch: 0 if fx(g, l, ch) else 1
        case UnOp("-", x):
            fx = compile_expr(x, scope)
            return lambda g, l, ch: _wrap(-fx(g, l, ch))
        case BinOp(op, a, b):
            fa, fb = compile_expr(a, scope), compile_expr(b, scope)
            return _binop(op, fa, fb)
    raise CompileError(f"unsupported expression {e!r}")


def _binop(op: str, fa: EvalFn, fb: EvalFn) -> EvalFn:
    if op == "&&":
        return lambda g, l, ch: 1 if fa(g, l, ch) and fb(g, l, ch) else 0
    if op == "||":
        return lambda g, l, ch: 1 if fa(g, l, ch) or fb(g, l, ch) else 0
    if op == "==":
        return lambda g, l, ch: int(fa(g, l, ch) == fb(g, l, ch))
    if op == "!=":
        return lambda g, l, ch: int(fa(g, l, ch) != fb(g, l, ch))
    if op == "<":
        return lambda g, l, ch: int(fa(g, l, ch) < fb(g, l, ch))
    if op == "<=":
        return lambda g, l, ch: int(fa(g, l, ch) <= fb(g, l, ch))
    if op == ">":
        return lambda g, l, ch: int(fa(g, l, ch) > fb(g, l, ch))
    if op == ">=":
        return lambda g, l, ch: int(fa(g, l, ch) >= fb(g, l, ch))
    if op == "+":
        return lambda g, l, ch: _wrap(fa(g, l, ch) + fb(g, l, ch))
    if op == "-":
        return lambda g, l, ch: _wrap(fa(g, l, ch) - fb(g, l, ch))
    if op == "*":
        return lambda g, l, ch: _wrap(fa(g, l, ch) * fb(g, l, ch))
    if op in ("/", "%"):
        def div(g, l, ch):
            a, b = fa(g, l, ch), fb(g, l, ch)
            if b == 0:
                raise DivideByZero(f"{'division' if op == '/' else 'modulo'} by zero")
            q = _cdiv(a, b)
            return _wrap(q if op == "/" else a - b * q)
        return div
    raise CompileError(f"unknown operator {op!r}")


LvalFn = Callable[[tuple, tuple, tuple], tuple[bool, int]]


def compile_lvalue(e: Expr, scope: Scope) -> LvalFn:
    """Returns ``f(g, l, ch) -> (is_local, absolute_offset)``."""
    match e:
        case Var(name):
            is_local, slot = scope.lookup(name)
            if slot.size is not None:
                raise CompileError(f"cannot assign to array '{name}' as a whole")
            res = (is_local, slot.offset)
            return lambda g, l, ch: res
        case Index(name, idx):
            is_local, slot = scope.lookup(name)
            if slot.size is None:
                raise CompileError(f"scalar '{name}' used with an index")
            fi = compile_expr(idx, scope)
            off, size = slot.offset, slot.size

            def where(g, l, ch):
                k = fi(g, l, ch)
                if not 0 <= k < size:
                    raise IndexOutOfBounds(f"{name}[{k}] outside 0..{size - 1}")
                return is_local, off + k

            return where
    raise CompileError(f"not assignable: {e!r}")


# ---------------------------------------------------------------------------
# control-flow graph


@dataclass(eq=False)
class Edge:
    id: int
    kind: str
    text: str
    target: int = -1
    src_region: Optional[int] = None
    keep_atomic: bool = False
    cond: Optional[EvalFn] = None
    chan: Optional[EvalFn] = None
    value: Optional[EvalFn] = None
    lval: Optional[LvalFn] = None
    post: tuple = ()  # ((lval, value), ...) observation writes
    run_template: str = ""
    run_args: tuple = ()
    siblings: tuple = ()  # for "else": the edges it is the complement of
    dstep_entry: int = -1
    dstep_end: int = -1
    first: tuple = ()  # for "dstep": edges of the body's first statement
    message: str = ""
    goto_label: str = ""


@dataclass(eq=False)
class Location:
    id: int
    escapes: tuple = ()
    regions: frozenset = frozenset()
    edges: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    end_valid: bool = False
    in_dstep: bool = False

    @property
    def label(self) -> str:
        return self.labels[0] if self.labels else f"L{self.id}"


class _Ctx(NamedTuple):
    escapes: tuple = ()
    regions: tuple = ()
    break_target: Optional[int] = None
    in_dstep: bool = False


@dataclass(eq=False)
class CompiledTemplate:
    name: str
    index: int
    params: tuple
    layout: dict
    init_locals: tuple
    locations: list
    edges: list
    escape_edges: dict
    entry: int
    final: int
    has_timeout: bool


_SIMPLE = (Skip, Assign, Send, Recv, Guard, Run, Timeout, Assert)


def collect_decls(body, out: list) -> list:
    for s in body:
        match s:
            case Decl():
                out.append(s)
            case If(options, else_) | Do(options, else_):
                for opt in options:
                    collect_decls(opt, out)
                if else_:
                    collect_decls(else_, out)
            case Atomic(b) | DStep(b):
                collect_decls(b, out)
            case Unless(m, e):
                collect_decls(m, out)
                collect_decls(e, out)
    return out


class TemplateCompiler:
    def __init__(self, name: str, index: int, params: tuple, body: tuple,
                 glob: dict[str, Slot], capacities: list[int]):
        self.name = name
        layout: dict[str, Slot] = {}
        init: list[int] = []
        for p in params:
            if p in layout:
                raise CompileError(f"duplicate parameter '{p}' in {name}")
            layout[p] = Slot(len(init), None, "int")
            init.append(0)
        for d in collect_decls(body, []):
            if d.name in layout:
                raise CompileError(f"redeclaration of '{d.name}' in {name}")
            n = 1 if d.size is None else d.size
            if n < 1:
                raise CompileError(f"array '{d.name}' must have positive size")
            layout[d.name] = Slot(len(init), d.size, d.kind)
            init.extend([d.init] * n)
        self.scope = Scope(layout, glob, capacities)
        self.layout = layout
        self.init_locals = tuple(init)
        self.params = tuple(params)
        self.index = index
        self.locations: list[Location] = []
        self.edges: list[Edge] = []
        self.labels: dict[str, int] = {}
        self.gotos: list[Edge] = []
        self.escape_edges: dict[int, list[Edge]] = {}
        self._regions = 0
        self._has_timeout = False
        self.body = body

    def compile(self) -> CompiledTemplate:
        final = self._loc(_Ctx()).id
        entry = self._seq(self.body, final, _Ctx())
        for e in self.gotos:
            if e.goto_label not in self.labels:
                raise CompileError(f"goto to undefined label '{e.goto_label}' in {self.name}")
            e.target = self.labels[e.goto_label]
        for e in self.edges:
            e.keep_atomic = (e.src_region is not None
                             and e.src_region in self.locations[e.target].regions)
        return CompiledTemplate(self.name, self.index, self.params, self.layout,
                                self.init_locals, self.locations, self.edges,
                                self.escape_edges, entry, final, self._has_timeout)

    # -- helpers

    def _loc(self, ctx: _Ctx) -> Location:
        loc = Location(len(self.locations), ctx.escapes, frozenset(ctx.regions),
                       in_dstep=ctx.in_dstep)
        self.locations.append(loc)
        return loc

    def _edge(self, kind: str, text: str, target: int, ctx: _Ctx, **kw) -> Edge:
        e = Edge(len(self.edges), kind, text, target,
                 src_region=ctx.regions[0] if ctx.regions else None, **kw)
        self.edges.append(e)
        return e

    def _expr(self, e: Expr, stmt: Stmt) -> EvalFn:
        try:
            return compile_expr(e, self.scope)
        except (UnboundName, CompileError) as exc:
            exc.where = exc.where or f"{self.name}: {format_stmt(stmt)}"
            raise

    def _lval(self, e: Expr, stmt: Stmt) -> LvalFn:
        try:
            return compile_lvalue(e, self.scope)
        except (UnboundName, CompileError) as exc:
            exc.where = exc.where or f"{self.name}: {format_stmt(stmt)}"
            raise

    # -- sequences

    def _seq(self, stmts, nxt: int, ctx: _Ctx) -> int:
        items: list[list] = []
        for s in stmts:
            if (isinstance(s, Observe) and items and items[-1][1] == ()
                    and isinstance(items[-1][0], _SIMPLE) and not ctx.in_dstep):
                items[-1][1] = s.assigns
            else:
                items.append([s, ()])
        loc = nxt
        for s, post in reversed(items):
            if isinstance(s, Label):
                if s.name in self.labels:
                    raise CompileError(f"duplicate label '{s.name}' in {self.name}")
                self.labels[s.name] = loc
                target = self.locations[loc]
                target.labels.append(s.name)
                if s.name.startswith("end"):
                    target.end_valid = True
                continue
            if isinstance(s, Decl):
                continue
            loc = self._stmt(s, loc, ctx, post)
        return loc

    def _post(self, assigns: tuple, stmt: Stmt) -> tuple:
        return tuple((self._lval(a.target, stmt), self._expr(a.expr, stmt)) for a in assigns)

    def _stmt(self, s: Stmt, nxt: int, ctx: _Ctx, post: tuple) -> int:
        if isinstance(s, _SIMPLE) or isinstance(s, Observe):
            here = self._loc(ctx)
            here.edges.append(self._simple_edge(s, nxt, ctx, post))
            return here.id
        match s:
            case If(options, else_):
                here = self._loc(ctx)
                here.edges = self._options(s, options, else_, nxt, ctx)
                return here.id
            case Do(options, else_):
                head = self._loc(ctx)
                inner = ctx._replace(break_target=nxt)
                head.edges = self._options(s, options, else_, head.id, inner)
                return head.id
            case Break():
                if ctx.break_target is None:
                    raise CompileError(f"break outside a do-loop in {self.name}")
                here = self._loc(ctx)
                here.edges.append(self._edge("goto", "break", ctx.break_target, ctx))
                return here.id
            case Goto(label):
                here = self._loc(ctx)
                e = self._edge("goto", f"goto {label}", -1, ctx, goto_label=label)
                self.gotos.append(e)
                here.edges.append(e)
                return here.id
            case Atomic(body):
                if not body:
                    return self._stmt(Skip(), nxt, ctx, post)
                if ctx.in_dstep:
                    return self._seq(body, nxt, ctx)
                self._regions += 1
                return self._seq(body, nxt, ctx._replace(regions=ctx.regions + (self._regions,)))
            case DStep(body):
                if not body:
                    return self._stmt(Skip(), nxt, ctx, post)
                if ctx.in_dstep:
                    return self._seq(body, nxt, ctx)
                here = self._loc(ctx)
                inner = _Ctx(in_dstep=True)
                end = self._loc(inner)
                entry = self._seq(body, end.id, inner)
                here.edges.append(self._edge("dstep", format_stmt(s), nxt, ctx,
                                             dstep_entry=entry, dstep_end=end.id,
                                             first=tuple(self.locations[entry].edges)))
                return here.id
            case Unless(main, escape):
                if not escape:
                    raise CompileError(f"empty escape sequence in {self.name}")
                if ctx.in_dstep:
                    raise CompileError(f"unless inside d_step in {self.name}")
                eid = len(self.escape_edges)
                self.escape_edges[eid] = []
                esc_entry = self._seq(escape, nxt, ctx)
                self.escape_edges[eid] = list(self.locations[esc_entry].edges)
                return self._seq(main, nxt, ctx._replace(escapes=ctx.escapes + (eid,)))
        raise CompileError(f"unsupported statement {s!r} in {self.name}")

    def _options(self, s: Stmt, options, else_, nxt: int, ctx: _Ctx) -> list:
        edges: list[Edge] = []
        if not options:
            raise CompileError(f"{type(s).__name__.lower()} without options in {self.name}")
        for opt in options:
            if not opt:
                raise CompileError(f"empty option in {self.name}")
            entry = self._seq(opt, nxt, ctx)
            edges.extend(self.locations[entry].edges)
        if else_ is not None:
            target = self._seq(else_, nxt, ctx) if else_ else nxt
            edges.append(self._edge("else", "else", target, ctx, siblings=tuple(edges)))
        return edges

    def _simple_edge(self, s: Stmt, nxt: int, ctx: _Ctx, post: tuple) -> Edge:
        text = format_stmt(s)
        pw = self._post(post, s)
        if post:
            text = f"{text}; {format_stmt(Observe(post))}"
        match s:
            case Skip():
                return self._edge("skip", text, nxt, ctx, post=pw)
            case Assign(t, x):
                return self._edge("assign", text, nxt, ctx, lval=self._lval(t, s),
                                  value=self._expr(x, s), post=pw)
            case Send(c, m):
                return self._edge("send", text, nxt, ctx, chan=self._expr(c, s),
                                  value=self._expr(m, s), post=pw)
            case Recv(c, t):
                return self._edge("recv", text, nxt, ctx, chan=self._expr(c, s),
                                  lval=self._lval(t, s), post=pw)
            case Guard(c):
                return self._edge("guard", text, nxt, ctx, cond=self._expr(c, s), post=pw)
            case Run(t, args):
                return self._edge("run", text, nxt, ctx, run_template=t,
                                  run_args=tuple(self._expr(a, s) for a in args), post=pw)
            case Timeout():
                if ctx.in_dstep:
                    raise CompileError(f"timeout inside d_step in {self.name}")
                self._has_timeout = True
                return self._edge("timeout", text, nxt, ctx, post=pw)
            case Assert(c, msg):
                return self._edge("assert", text, nxt, ctx, cond=self._expr(c, s),
                                  message=msg or f"assert({format_expr(c)})", post=pw)
            case Observe(assigns):
                return self._edge("observe", text, nxt, ctx, post=self._post(assigns, s))
        raise CompileError(f"unsupported statement {s!r}")
