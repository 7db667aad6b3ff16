"""LTL formulas over named state propositions."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Collection, Optional


class Formula:
    pass


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Always(Formula):
    operand: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    """Dual of Until; only produced by :func:`normalize_negation`."""

    left: Formula
    right: Formula


class LTLSyntaxError(ValueError):
    def __init__(self, message: str, pos: int, text: str):
        super().__init__(f"{message} at column {pos + 1}: {text!r}")
        self.pos = pos


class UnknownProposition(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\[\])|(<>)|(->)|(&&)|(\|\|)|([!()])|([A-Za-z_][A-Za-z0-9_]*))")
_KEYWORDS = {"U", "X", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise LTLSyntaxError("unexpected character", pos + len(text[pos:]) - len(text[pos:].lstrip()), text)
        tok = next(g for g in m.groups() if g is not None)
        out.append((tok, m.start(m.lastindex)))
        pos = m.end()
    out.append(("<end>", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, props: Optional[Collection[str]]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.props = props

    def peek(self) -> str:
        return self.toks[self.i][0]

    def take(self, expected: Optional[str] = None) -> str:
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            raise LTLSyntaxError(f"expected {expected!r}, found {tok!r}", pos, self.text)
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek() != "<end>":
            tok, pos = self.toks[self.i]
            raise LTLSyntaxError(f"unexpected {tok!r}", pos, self.text)
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek() == "||":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.until()
        while self.peek() == "&&":
            self.take()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        left = self.unary()
        if self.peek() == "U":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "[]":
            self.take()
            return Always(self.unary())
        if tok == "<>":
            self.take()
            return Eventually(self.unary())
        if tok == "X":
            self.take()
            return Next(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        tok, pos = self.toks[self.i]
        if tok == "(":
            self.take()
            f = self.implication()
            self.take(")")
            return f
        if tok == "true":
            self.take()
            return TrueF()
        if tok == "false":
            self.take()
            return FalseF()
        if tok[0].isalpha() or tok[0] == "_":
            if tok in _KEYWORDS:
                raise LTLSyntaxError(f"operator {tok!r} used as a proposition", pos, self.text)
            if self.props is not None and tok not in self.props:
                raise UnknownProposition(f"unknown proposition '{tok}'")
            self.take()
            return Prop(tok)
        raise LTLSyntaxError(f"unexpected {tok!r}", pos, self.text)


def parse_formula(text: str, props: Optional[Collection[str]] = None) -> Formula:
    """Parse ``text``; with ``props`` given, every proposition must be in it."""
    return _Parser(text, props).parse()


def format_formula(f: Formula) -> str:
    match f:
        case Prop(n):
            return n
        case TrueF():
            return "true"
        case FalseF():
            return "false"
        case Not(x):
            return f"!{_wrap(x)}"
        case Next(x):
            return f"X {_wrap(x)}"
        case Always(x):
            return f"[] {_wrap(x)}"
        case Eventually(x):
            return f"<> {_wrap(x)}"
        case And(a, b):
            return f"{_wrap(a)} && {_wrap(b)}"
        case Or(a, b):
            return f"{_wrap(a)} || {_wrap(b)}"
        case Implies(a, b):
            return f"{_wrap(a)} -> {_wrap(b)}"
        case Until(a, b):
            return f"{_wrap(a)} U {_wrap(b)}"
        case Release(a, b):
            return f"{_wrap(a)} V {_wrap(b)}"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula) -> str:
    s = format_formula(f)
    return s if isinstance(f, (Prop, TrueF, FalseF)) else f"({s})"


def propositions(f: Formula) -> set[str]:
    match f:
        case Prop(n):
            return {n}
        case TrueF() | FalseF():
            return set()
        case Not(x) | Next(x) | Always(x) | Eventually(x):
            return propositions(x)
        case And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b):
            return propositions(a) | propositions(b)
    raise TypeError(f"not a formula: {f!r}")


def is_temporal(f: Formula) -> bool:
    match f:
        case Prop() | TrueF() | FalseF():
            return False
        case Not(x):
            return is_temporal(x)
        case And(a, b) | Or(a, b) | Implies(a, b):
            return is_temporal(a) or is_temporal(b)
    return True


def normalize_negation(f: Formula) -> Formula:
    """Negation normal form: ``!`` only in front of propositions, no ``->``."""
    match f:
        case Prop() | TrueF() | FalseF():
            return f
        case And(a, b):
            return And(normalize_negation(a), normalize_negation(b))
        case Or(a, b):
            return Or(normalize_negation(a), normalize_negation(b))
        case Implies(a, b):
            return Or(_negate(a), normalize_negation(b))
        case Next(x):
            return Next(normalize_negation(x))
        case Always(x):
            return Always(normalize_negation(x))
        case Eventually(x):
            return Eventually(normalize_negation(x))
        case Until(a, b):
            return Until(normalize_negation(a), normalize_negation(b))
        case Release(a, b):
            return Release(normalize_negation(a), normalize_negation(b))
        case Not(x):
            return _negate(x)
    raise TypeError(f"not a formula: {f!r}")


def _negate(f: Formula) -> Formula:
    """NNF of ``!f``."""
    match f:
        case Prop():
            return Not(f)
        case TrueF():
            return FalseF()
        case FalseF():
            return TrueF()
        case Not(x):
            return normalize_negation(x)
        case And(a, b):
            return Or(_negate(a), _negate(b))
        case Or(a, b):
            return And(_negate(a), _negate(b))
        case Implies(a, b):
            return And(normalize_negation(a), _negate(b))
        case Next(x):
            return Next(_negate(x))
        case Always(x):
            return Eventually(_negate(x))
        case Eventually(x):
            return Always(_negate(x))
        case Until(a, b):
            return Release(_negate(a), _negate(b))
        case Release(a, b):
            return Until(_negate(a), _negate(b))
    raise TypeError(f"not a formula: {f!r}")
