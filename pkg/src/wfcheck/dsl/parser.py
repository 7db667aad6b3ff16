"""Recursive-descent parser for ``.wf`` workflow definitions."""

from __future__ import annotations

import re
from typing import NoReturn, Optional

from ..kernel.syntax import BinOp, Const, Expr, Index, Len, UnOp, Var
from .ast import (
    PATTERN_KINDS, AliasStmt, AssignStmt, CancelActivityStmt, EndLabelStmt, ChannelSpec, GlobalVar, Loc,
    LtlDef, MilestoneStmt, NdetStmt, PatternStmt, ProcessDef, PropDef, Reached, RecvStmt,
    RunStmt, SendStmt, SkipStmt, VarStmt, WorkflowDef,
)


class WorkflowSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: tuple = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        text = f"{line}:{col}: {message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        super().__init__(text)


KEYWORDS = {
    "workflow", "channels", "var", "process", "id", "parent", "cancellable", "on_cancel",
    "init", "prop", "ltl", "send", "recv", "run", "milestone", "ndet", "alias", "skip",
    "cancel_activity", "end", "capacity", "cancel", "parents", "len", "reached", *PATTERN_KINDS,
}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||==|!=|<=|>=|[-+*/%<>!=(){}\[\];:,|])
""", re.VERBOSE | re.DOTALL)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise WorkflowSyntaxError(f"unexpected character {text[pos]!r}", line,
                                      pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind == "comment" and tok.startswith("/*") and not tok.endswith("*/"):
            raise WorkflowSyntaxError("unterminated comment", line, pos - line_start + 1)
        if kind not in ("ws", "comment"):
            if kind == "ident" and tok in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


_BINARY = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def loc(self) -> Loc:
        return Loc(self.tok.line, self.tok.col)

    def fail(self, message: str, expected=()) -> NoReturn:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise WorkflowSyntaxError(f"{message}, found {found}", t.line, t.col, tuple(expected))

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("kw", "op") and self.tok.text in texts

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}", (text,))
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.fail("expected a name", ("name",))
        t = self.tok
        self.i += 1
        return t.text

    def integer(self) -> int:
        neg = self.accept("-")
        if self.tok.kind != "int":
            self.fail("expected an integer", ("integer",))
        v = int(self.tok.text)
        self.i += 1
        return -v if neg else v

    # -- top level -------------------------------------------------------

    def workflow(self) -> WorkflowDef:
        loc = self.loc()
        if self.tok.kind == "eof":
            self.fail("empty workflow definition", ("workflow",))
        self.expect("workflow")
        name = self.ident()
        self.expect("{")
        channels, globs, procs, props, ltls = [], [], [], [], []
        init: Optional[tuple] = None
        items = ("channels", "var", "process", "init", "prop", "ltl", "}")
        while not self.at("}"):
            if self.accept("channels"):
                channels.extend(self.channel_block())
            elif self.at("var"):
                globs.append(self.global_var())
            elif self.at("process"):
                procs.append(self.process())
            elif self.at("init"):
                if init is not None:
                    self.fail("second init block")
                init = self.init_block()
            elif self.at("prop"):
                props.append(self.prop())
            elif self.at("ltl"):
                ltls.append(self.ltl())
            else:
                self.fail("expected a declaration", items)
        self.expect("}")
        if self.tok.kind != "eof":
            self.fail("trailing input after workflow", ("end of input",))
        return WorkflowDef(name, tuple(channels), tuple(globs), tuple(procs), init or (),
                           tuple(props), tuple(ltls), loc)

    def channel_block(self) -> list[ChannelSpec]:
        self.expect("{")
        out = []
        while not self.accept("}"):
            loc = self.loc()
            name = self.ident()
            size = None
            if self.accept("["):
                size = self.integer()
                self.expect("]")
            capacity, cancel = 1, False
            while self.at("capacity", "cancel"):
                if self.accept("capacity"):
                    capacity = self.integer()
                else:
                    self.i += 1
                    cancel = True
            self.expect(";")
            out.append(ChannelSpec(name, size, capacity, cancel, loc))
        return out

    def global_var(self) -> GlobalVar:
        loc = self.loc()
        self.expect("var")
        name = self.ident()
        size = None
        if self.accept("["):
            size = self.integer()
            self.expect("]")
        init = self.integer() if self.accept("=") else 0
        parents = self.accept("parents")
        self.expect(";")
        return GlobalVar(name, size, init, parents, loc)

    def process(self) -> ProcessDef:
        loc = self.loc()
        self.expect("process")
        name = self.ident()
        pid = parent = None
        cancellable = False
        while self.at("id", "parent", "cancellable"):
            if self.accept("id"):
                pid = self.integer()
            elif self.accept("parent"):
                parent = self.integer()
            else:
                self.i += 1
                cancellable = True
        body = self.block()
        on_cancel: tuple = ()
        if self.accept("on_cancel"):
            on_cancel = self.block()
        return ProcessDef(name, pid, parent, cancellable, body, on_cancel, loc)

    def init_block(self) -> tuple:
        self.expect("init")
        self.expect("{")
        runs = []
        while not self.accept("}"):
            loc = self.loc()
            if not self.at("run"):
                self.fail("init may only run processes", ("run", "}"))
            self.i += 1
            runs.append(RunStmt(self.ident(), loc))
            self.expect(";")
        return tuple(runs)

    def prop(self) -> PropDef:
        loc = self.loc()
        self.expect("prop")
        name = self.ident()
        self.expect("=")
        pred = self.expr()
        self.expect(";")
        return PropDef(name, pred, loc)

    def ltl(self) -> LtlDef:
        loc = self.loc()
        self.expect("ltl")
        name = self.ident()
        if self.tok.kind != "string":
            self.fail("expected a quoted formula", ("string",))
        formula = self.tok.text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        self.i += 1
        bindings = []
        if self.accept("{"):
            while not self.accept("}"):
                bloc = self.loc()
                pname = self.ident()
                self.expect("=")
                pred = self.expr()
                self.expect(";")
                bindings.append(PropDef(pname, pred, bloc))
        self.accept(";")
        return LtlDef(name, formula, tuple(bindings), loc)

    # -- statements ------------------------------------------------------

    STMT_START = ("send", "recv", "run", "milestone", "ndet", "alias", "var", "skip", "end",
                  "cancel_activity", *PATTERN_KINDS, "name")

    def block(self) -> tuple:
        self.expect("{")
        out = []
        while not self.accept("}"):
            out.append(self.stmt())
        return tuple(out)

    def stmt(self):
        loc = self.loc()
        t = self.tok
        if t.kind == "ident":
            target = self.lvalue()
            self.expect("=")
            e = self.expr()
            self.expect(";")
            return AssignStmt(target, e, loc)
        if t.kind != "kw":
            self.fail("expected a statement", self.STMT_START)
        kw = t.text
        self.i += 1
        if kw == "send":
            self.expect("(")
            ch = self.expr()
            self.expect(",")
            msg = self.expr()
            self.expect(")")
            self.expect(";")
            return SendStmt(ch, msg, loc)
        if kw == "recv":
            self.expect("(")
            ch = self.expr()
            self.expect(",")
            target = self.lvalue()
            self.expect(")")
            self.expect(";")
            return RecvStmt(ch, target, loc)
        if kw in PATTERN_KINDS:
            self.expect("(")
            chan = self.ident()
            self.expect(",")
            size = self.integer()
            args = []
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            self.expect(";")
            return PatternStmt(kw, chan, size, tuple(args), loc)
        if kw == "run":
            name = self.ident()
            self.expect(";")
            return RunStmt(name, loc)
        if kw == "milestone":
            k = self.integer()
            self.expect(";")
            return MilestoneStmt(k, loc)
        if kw == "ndet":
            self.expect("{")
            branches, cur = [], []
            while True:
                if self.accept("|"):
                    branches.append(tuple(cur))
                    cur = []
                elif self.accept("}"):
                    branches.append(tuple(cur))
                    break
                else:
                    cur.append(self.stmt())
            return NdetStmt(tuple(branches), loc)
        if kw == "alias":
            name = self.ident()
            self.expect("=")
            self.expect("[")
            chans = [self.expr()]
            while self.accept(","):
                chans.append(self.expr())
            self.expect("]")
            self.expect(";")
            return AliasStmt(name, tuple(chans), loc)
        if kw == "var":
            name = self.ident()
            size = None
            if self.accept("["):
                size = self.integer()
                self.expect("]")
            init = self.integer() if self.accept("=") else 0
            self.expect(";")
            return VarStmt(name, size, init, loc)
        if kw == "end":
            self.expect(":")
            return EndLabelStmt(loc)
        if kw == "skip":
            self.expect(";")
            return SkipStmt(loc)
        if kw == "cancel_activity":
            self.expect("(")
            ch = self.expr()
            self.expect(")")
            return CancelActivityStmt(ch, self.block(), loc)
        self.i -= 1
        self.fail("expected a statement", self.STMT_START)

    def lvalue(self) -> Expr:
        name = self.ident()
        if self.accept("["):
            i = self.expr()
            self.expect("]")
            return Index(name, i)
        return Var(name)

    # -- expressions -----------------------------------------------------

    def expr(self, level: int = 0) -> Expr:
        if level == len(_BINARY):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY[level]:
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.expr(level + 1))
        return left

    def unary(self) -> Expr:
        if self.accept("!"):
            return UnOp("!", self.unary())
        if self.accept("-"):
            x = self.unary()
            return Const(-x.value) if isinstance(x, Const) else UnOp("-", x)
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Const(int(t.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("len"):
            self.expect("(")
            ch = self.expr()
            self.expect(")")
            return Len(ch)
        if self.accept("reached"):
            self.expect("(")
            k = self.integer()
            self.expect(")")
            return Reached(k)
        if t.kind == "ident":
            return self.lvalue()
        self.fail("expected an expression", ("integer", "name", "(", "len", "reached", "!", "-"))


def parse_workflow(text: str) -> WorkflowDef:
    """Parse ``.wf`` source; raises :class:`WorkflowSyntaxError` with a position."""
    return Parser(text).workflow()


def parse_expr(text: str) -> Expr:
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail("trailing input after expression", ("end of input",))
    return e
