from .buchi import BuchiAutomaton, BuchiEdge, ltl_to_buchi
from .formula import (
    Always, And, Eventually, FalseF, Formula, Implies, LTLSyntaxError, Next, Not, Or, Prop,
    Release, TrueF, UnknownProposition, Until, format_formula, is_temporal, normalize_negation,
    parse_formula, propositions,
)

__all__ = [
    "Always", "And", "BuchiAutomaton", "BuchiEdge", "Eventually", "FalseF", "Formula",
    "Implies", "LTLSyntaxError", "Next", "Not", "Or", "Prop", "Release", "TrueF",
    "UnknownProposition", "Until", "format_formula", "is_temporal", "ltl_to_buchi",
    "normalize_negation", "parse_formula", "propositions",
]
