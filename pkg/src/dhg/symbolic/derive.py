"""Syntactic total derivation and Lie-derivative substitution.

`derive_term` maps constants to 0, variables to their differential
symbols, and applies the sum and product rules; powers expand through
the product rule.  Quotients and square roots (witness extensions) get
the usual clauses; their definedness conditions are collected by the
rule machinery, not here.  min/max atoms are not differentiable and are
rejected.

`lie_substitute` replaces each bound differential symbol by its
right-hand side and every remaining differential symbol by 0, then
simplifies, yielding the differential-symbol-free Lie derivative.
"""

from __future__ import annotations

from fractions import Fraction

from ..syntax.ast import (
    Add, And, BoxF, Cmp, Const, Diamond, DiffVar, Div, Exists, Forall,
    Formula, Iff, Implies, Max, Min, Mul, Neg, Not, Or, Pow, Sqrt, Term, Var,
    VarKey, add, fand, mul,
)
from .simplify import simplify

__all__ = ["DeriveError", "derive_term", "derive_formula",
           "lie_substitute", "lie_substitute_term", "time_derivative"]

ZERO = Const(Fraction(0))


class DeriveError(ValueError):
    pass


def derive_term(t: Term) -> Term:
    if isinstance(t, Const):
        return ZERO
    if isinstance(t, Var):
        return DiffVar(t.name, t.index)
    if isinstance(t, DiffVar):
        raise DeriveError("cannot derive a term that already contains differential symbols")
    if isinstance(t, Neg):
        return Neg(derive_term(t.arg))
    if isinstance(t, Add):
        return add(*[derive_term(a) for a in t.args])
    if isinstance(t, Mul):
        parts = []
        for i, a in enumerate(t.args):
            factors = list(t.args)
            factors[i] = derive_term(a)
            parts.append(mul(*factors))
        return add(*parts)
    if isinstance(t, Pow):
        # powers expand through the product rule: (b^n)' = (b * b^(n-1))'
        if t.exp == 1:
            return derive_term(t.base)
        rest = t.base if t.exp == 2 else Pow(t.base, t.exp - 1)
        return derive_term(mul(t.base, rest))
    if isinstance(t, Div):
        dn = derive_term(t.num)
        dd = derive_term(t.den)
        return Div(add(mul(dn, t.den), Neg(mul(t.num, dd))), Pow(t.den, 2))
    if isinstance(t, Sqrt):
        return Div(derive_term(t.arg), mul(Const(Fraction(2)), t))
    if isinstance(t, (Min, Max)):
        raise DeriveError("min/max terms have no syntactic derivative")
    raise DeriveError(f"cannot derive {t!r}")


_CMP_DERIVED = {">=": ">=", ">": ">=", "<=": "<=", "<": "<=", "=": "=", "!=": "="}


def derive_formula(f: Formula) -> Formula:
    """Derive a quantifier-free, modality-free formula built from
    comparisons with conjunction and disjunction; both map to the
    conjunction of the derived children."""
    if isinstance(f, Cmp):
        return Cmp(_CMP_DERIVED[f.op], derive_term(f.left), derive_term(f.right))
    if isinstance(f, (And, Or)):
        return fand(*[derive_formula(a) for a in f.args])
    if isinstance(f, (Not, Implies, Iff)):
        raise DeriveError(
            "derive_formula needs negation-normal input built from comparisons "
            "with & and |; normalize first")
    if isinstance(f, (Exists, Forall)):
        raise DeriveError("cannot derive quantified formulas")
    if isinstance(f, (BoxF, Diamond)):
        raise DeriveError("cannot derive modal formulas")
    raise DeriveError(f"cannot derive {f!r}")


def lie_substitute_term(t: Term, bindings: dict[VarKey, Term]) -> Term:
    def walk(n: Term) -> Term:
        if isinstance(n, DiffVar):
            return bindings.get(n.key, ZERO)
        if isinstance(n, (Const, Var)):
            return n
        if isinstance(n, Neg):
            return Neg(walk(n.arg))
        if isinstance(n, Add):
            return add(*[walk(a) for a in n.args])
        if isinstance(n, Mul):
            return mul(*[walk(a) for a in n.args])
        if isinstance(n, Pow):
            return Pow(walk(n.base), n.exp)
        if isinstance(n, Div):
            return Div(walk(n.num), walk(n.den))
        if isinstance(n, Sqrt):
            return Sqrt(walk(n.arg))
        if isinstance(n, Min):
            return Min(walk(n.left), walk(n.right))
        if isinstance(n, Max):
            return Max(walk(n.left), walk(n.right))
        raise TypeError(f"unexpected term {n!r}")

    return simplify(walk(t))


def lie_substitute(f: Formula, bindings: dict[VarKey, Term]) -> Formula:
    """Substitute right-hand sides for bound differential symbols and 0
    for all others; the result is differential-symbol-free."""
    if isinstance(f, Cmp):
        return Cmp(f.op, lie_substitute_term(f.left, bindings),
                   lie_substitute_term(f.right, bindings))
    if isinstance(f, And):
        return fand(*[lie_substitute(a, bindings) for a in f.args])
    if isinstance(f, Or):
        from ..syntax.ast import forr
        return forr(*[lie_substitute(a, bindings) for a in f.args])
    raise DeriveError(f"lie substitution applies to derived formulas, not {f!r}")


def time_derivative(t: Term, time_var: Var) -> Term:
    """d/dt of a term in the time variable: derivation with t' -> 1 and
    every other differential symbol -> 0 (checked-solution conditions)."""
    return lie_substitute_term(derive_term(t), {time_var.key: Const(Fraction(1))})
