"""Tableau translation of NNF formulas into Büchi automata.

Tableau states are pairs ``(obligations, fulfilled)``: the formulas that
must hold from here on, plus the eventualities that were not postponed on
the way in. A generalized Büchi condition (one set per eventuality) is
degeneralized with a counter, which is the identity when there is at most
one eventuality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .formula import (
    Always, And, Eventually, FalseF, Formula, Next, Not, Or, Prop, Release, TrueF, Until,
    normalize_negation,
)


@dataclass(frozen=True)
class BuchiEdge:
    source: int
    target: int
    pos: frozenset  # propositions that must be true
    neg: frozenset  # propositions that must be false

    def enabled(self, valuation) -> bool:
        return self.pos <= valuation and not (self.neg & valuation)


@dataclass
class BuchiAutomaton:
    states: int
    initial: int
    edges: list[BuchiEdge]
    accepting: frozenset
    propositions: tuple = ()
    names: list[str] = field(default_factory=list)

    def out(self, q: int) -> list[BuchiEdge]:
        return [e for e in self.edges if e.source == q]

    def rejecting(self) -> frozenset:
        """States without outgoing edges: no run passes through them."""
        has_out = {e.source for e in self.edges}
        return frozenset(q for q in range(self.states) if q not in has_out)

    def step(self, current: set, valuation) -> set:
        return {e.target for e in self.edges if e.source in current and e.enabled(valuation)}

    def encode(self) -> tuple[list[int], list[int], list[int], list[int], list[int]]:
        """CSR arrays (offsets, targets, pos masks, neg masks, accepting flags).

        Bit i of a mask stands for ``propositions[i]``.
        """
        index = {p: i for i, p in enumerate(self.propositions)}

        def mask(ps) -> int:
            return sum(1 << index[p] for p in ps)

        offsets, targets, pos, neg = [0], [], [], []
        by_src: list[list[BuchiEdge]] = [[] for _ in range(self.states)]
        for e in self.edges:
            by_src[e.source].append(e)
        for q in range(self.states):
            for e in by_src[q]:
                targets.append(e.target)
                pos.append(mask(e.pos))
                neg.append(mask(e.neg))
            offsets.append(len(targets))
        acc = [1 if q in self.accepting else 0 for q in range(self.states)]
        return offsets, targets, pos, neg, acc


def eventualities(f: Formula) -> list[Formula]:
    """Until/Eventually subformulas in a fixed (first-occurrence) order."""
    out: list[Formula] = []

    def walk(g: Formula) -> None:
        match g:
            case Until(a, b):
                walk(a)
                walk(b)
            case Eventually(a):
                walk(a)
            case And(a, b) | Or(a, b) | Release(a, b):
                walk(a)
                walk(b)
            case Always(a) | Next(a) | Not(a):
                walk(a)
        if isinstance(g, (Until, Eventually)) and g not in out:
            out.append(g)

    walk(f)
    return out


def _expand(todo: tuple, pos: frozenset, neg: frozenset, nxt: frozenset, postponed: frozenset,
            seen: frozenset, out: set) -> None:
    if not todo:
        out.add((pos, neg, nxt, postponed))
        return
    f, rest = todo[0], todo[1:]
    if f in seen:
        _expand(rest, pos, neg, nxt, postponed, seen, out)
        return
    seen = seen | {f}
    match f:
        case TrueF():
            _expand(rest, pos, neg, nxt, postponed, seen, out)
        case FalseF():
            return
        case Prop(p):
            if p not in neg:
                _expand(rest, pos | {p}, neg, nxt, postponed, seen, out)
        case Not(Prop(p)):
            if p not in pos:
                _expand(rest, pos, neg | {p}, nxt, postponed, seen, out)
        case And(a, b):
            _expand((a, b) + rest, pos, neg, nxt, postponed, seen, out)
        case Or(a, b):
            _expand((a,) + rest, pos, neg, nxt, postponed, seen, out)
            _expand((b,) + rest, pos, neg, nxt, postponed, seen, out)
        case Next(a):
            _expand(rest, pos, neg, nxt | {a}, postponed, seen, out)
        case Always(a):
            _expand((a,) + rest, pos, neg, nxt | {f}, postponed, seen, out)
        case Eventually(a):
            _expand((a,) + rest, pos, neg, nxt, postponed, seen, out)
            _expand(rest, pos, neg, nxt | {f}, postponed | {f}, seen, out)
        case Until(a, b):
            _expand((b,) + rest, pos, neg, nxt, postponed, seen, out)
            _expand((a,) + rest, pos, neg, nxt | {f}, postponed | {f}, seen, out)
        case Release(a, b):
            _expand((a, b) + rest, pos, neg, nxt, postponed, seen, out)
            _expand((b,) + rest, pos, neg, nxt | {f}, postponed, seen, out)
        case _:
            raise ValueError(f"formula not in negation normal form: {f!r}")


def _key(f: Formula) -> str:
    return repr(f)


def ltl_to_buchi(f: Formula) -> BuchiAutomaton:
    """Automaton accepting exactly the infinite words satisfying ``f``.

    A letter is the set of true propositions; the automaton reads one letter
    per model state. ``f`` is normalized first if it is not already in NNF.
    """
    from .formula import propositions

    f = normalize_negation(f)
    ev = eventualities(f)
    k = len(ev)
    cache: dict[frozenset, list] = {}

    def options(obligations: frozenset) -> list:
        if obligations not in cache:
            out: set = set()
            _expand(tuple(sorted(obligations, key=_key)), frozenset(), frozenset(), frozenset(),
                    frozenset(), frozenset(), out)
            cache[obligations] = sorted(out, key=lambda o: (sorted(o[0]), sorted(o[1]),
                                                            sorted(map(_key, o[2])),
                                                            sorted(map(_key, o[3]))))
        return cache[obligations]

    def advance(counter: int, fulfilled: frozenset) -> int:
        c = 0 if counter == k else counter
        while c < k and ev[c] in fulfilled:
            c += 1
        return c

    init = (frozenset({f}), frozenset(), advance(k, frozenset()) if k else 0)
    ids = {init: 0}
    order = [init]
    edges: set = set()
    i = 0
    while i < len(order):
        obligations, _, counter = order[i]
        for pos, neg, nxt, postponed in options(obligations):
            fulfilled = frozenset(e for e in ev if e not in postponed)
            tgt = (nxt, fulfilled, advance(counter, fulfilled) if k else 0)
            if tgt not in ids:
                ids[tgt] = len(order)
                order.append(tgt)
            edges.add(BuchiEdge(i, ids[tgt], pos, neg))
        i += 1
    accepting = frozenset(ids[s] for s in order if s[2] == k)
    names = [
        "{" + ", ".join(sorted(_show(x) for x in s[0])) + f"}}/{s[2]}" for s in order
    ]
    sorted_edges = sorted(edges, key=lambda e: (e.source, e.target, sorted(e.pos), sorted(e.neg)))
    return BuchiAutomaton(len(order), 0, sorted_edges, accepting,
                          tuple(sorted(propositions(f))), names)


def _show(f: Formula) -> str:
    from .formula import format_formula

    return format_formula(f)
