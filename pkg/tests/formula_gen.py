"""Seeded random LTL formulas over p, q, r."""

from __future__ import annotations

import random

from wfcheck.ltl import (
    Always, And, Eventually, FalseF, Formula, Implies, Next, Not, Or, Prop, TrueF, Until,
)

UNARY = (Not, Next, Always, Eventually)
BINARY = (And, Or, Implies, Until)


def random_formula(rng: random.Random, depth: int, props=("p", "q", "r")) -> Formula:
    """A formula whose syntax tree is at most ``depth`` operators deep."""
    if depth == 0 or rng.random() < 0.2:
        leaf = rng.random()
        if leaf < 0.05:
            return TrueF()
        if leaf < 0.1:
            return FalseF()
        return Prop(rng.choice(props))
    if rng.random() < 0.45:
        return rng.choice(UNARY)(random_formula(rng, depth - 1, props))
    op = rng.choice(BINARY)
    return op(random_formula(rng, depth - 1, props), random_formula(rng, depth - 1, props))


def random_formulas(n: int, depth: int, seed: int = 0) -> list[Formula]:
    rng = random.Random(seed)
    return [random_formula(rng, depth) for _ in range(n)]
