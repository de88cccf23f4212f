"""Rule schemas for goal-directed proofs.

A formula analysing rule turns a line ``A_{D,T}`` into one of several
variants ``B_{D + extra, T | abn}``; a condition analysing rule replaces one
element of the D-condition by a tuple of formulas, possibly adding an
abnormality to the A-condition.
"""

from __future__ import annotations

from typing import NamedTuple

from .formula_core import Abnormality, And, Bottom, CNeg, Formula, Iff, Imp, Or, PNeg


class FormulaVariant(NamedTuple):
    formula: Formula
    extra: tuple[Formula, ...] = ()
    abnormality: Abnormality | None = None


class ConditionVariant(NamedTuple):
    replacement: tuple[Formula, ...]
    abnormality: Abnormality | None = None


FORMULA_RULES = ("->E", "!->E", "|E", "!|E", "&E", "!&E", "<->E", "!<->E", "~E", "!~E", "!!E")
CONDITION_RULES = tuple("C" + r for r in FORMULA_RULES)

# ``bot`` needs two extra schemas: a line ``bot`` yields any wanted formula,
# and ``!bot`` in a condition is a theorem and can simply be dropped.
BOTTOM_RULE = "botE"
BOTTOM_CONDITION_RULE = "C!botE"


def formula_rule(f: Formula) -> tuple[str, list[FormulaVariant]] | None:
    """The analysing rule for ``f`` and its variants (leftmost first)."""
    N = CNeg
    if isinstance(f, Imp):
        return "->E", [FormulaVariant(f.right, (f.left,)),
                       FormulaVariant(N(f.left), (N(f.right),))]
    if isinstance(f, Or):
        return "|E", [FormulaVariant(f.left, (N(f.right),)),
                      FormulaVariant(f.right, (N(f.left),))]
    if isinstance(f, And):
        return "&E", [FormulaVariant(f.left), FormulaVariant(f.right)]
    if isinstance(f, Iff):
        return "<->E", [FormulaVariant(Imp(f.left, f.right)),
                        FormulaVariant(Imp(f.right, f.left))]
    if isinstance(f, PNeg):
        return "~E", [FormulaVariant(N(f.arg), (), Abnormality(f.arg))]
    if isinstance(f, CNeg):
        g = f.arg
        if isinstance(g, Imp):
            return "!->E", [FormulaVariant(g.left), FormulaVariant(N(g.right))]
        if isinstance(g, Or):
            return "!|E", [FormulaVariant(N(g.left)), FormulaVariant(N(g.right))]
        if isinstance(g, And):
            return "!&E", [FormulaVariant(Or(N(g.left), N(g.right)))]
        if isinstance(g, Iff):
            return "!<->E", [FormulaVariant(Or(g.left, g.right)),
                             FormulaVariant(Or(N(g.left), N(g.right)))]
        if isinstance(g, PNeg):
            return "!~E", [FormulaVariant(g.arg)]
        if isinstance(g, CNeg):
            return "!!E", [FormulaVariant(g.arg)]
    return None


def condition_rule(b: Formula) -> tuple[str, list[ConditionVariant]] | None:
    """The condition analysing rule for element ``b`` and its variants."""
    N = CNeg
    V = ConditionVariant
    if isinstance(b, Imp):
        return "C->E", [V((N(b.left),)), V((b.right,))]
    if isinstance(b, Or):
        return "C|E", [V((b.left,)), V((b.right,))]
    if isinstance(b, And):
        return "C&E", [V((b.left, b.right))]
    if isinstance(b, Iff):
        return "C<->E", [V((b.left, b.right)), V((N(b.left), N(b.right)))]
    if isinstance(b, PNeg):
        return "C~E", [V((N(b.arg),))]
    if isinstance(b, CNeg):
        g = b.arg
        if isinstance(g, Imp):
            return "C!->E", [V((g.left, N(g.right)))]
        if isinstance(g, Or):
            return "C!|E", [V((N(g.left), N(g.right)))]
        if isinstance(g, And):
            return "C!&E", [V((N(g.left),)), V((N(g.right),))]
        if isinstance(g, Iff):
            return "C!<->E", [V((N(g.left), g.right)), V((g.left, N(g.right)))]
        if isinstance(g, PNeg):
            return "C!~E", [V((g.arg,), Abnormality(g.arg))]
        if isinstance(g, CNeg):
            return "C!!E", [V((g.arg,))]
        if isinstance(g, Bottom):
            return BOTTOM_CONDITION_RULE, [V(())]
    return None
