"""Light algebraic simplification of terms.

Folds rational constants, collects structurally equal summands and
factors, and canonically orders commutative arguments.  Products of
sums are deliberately left unexpanded; full expansion is the job of
`dhg.symbolic.poly`.

Rewrites like 0*t -> 0 and 0/t -> 0 assume the term denotes a total
function; rule application records the definedness side conditions
(sqrt arguments nonnegative, denominators nonzero) before simplifying.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

from ..syntax.ast import (
    Add, Const, DiffVar, Div, Max, Min, Mul, Neg, Pow, Sqrt, Term, Var, add,
    mul,
)

__all__ = ["simplify", "term_key", "exact_sqrt", "const_value"]


def exact_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def const_value(t: Term) -> Optional[Fraction]:
    return t.value if isinstance(t, Const) else None


def term_key(t: Term):
    """Total, deterministic ordering key on terms."""
    if isinstance(t, Const):
        return (0, str(t.value))
    if isinstance(t, Var):
        return (1, t.name, -1 if t.index is None else t.index)
    if isinstance(t, DiffVar):
        return (2, t.name, -1 if t.index is None else t.index)
    if isinstance(t, Pow):
        return (3, term_key(t.base), t.exp)
    if isinstance(t, Mul):
        return (4, tuple(term_key(a) for a in t.args))
    if isinstance(t, Add):
        return (5, tuple(term_key(a) for a in t.args))
    if isinstance(t, Neg):
        return (6, term_key(t.arg))
    if isinstance(t, Div):
        return (7, term_key(t.num), term_key(t.den))
    if isinstance(t, Sqrt):
        return (8, term_key(t.arg))
    if isinstance(t, Min):
        return (9, term_key(t.left), term_key(t.right))
    if isinstance(t, Max):
        return (10, term_key(t.left), term_key(t.right))
    raise TypeError(f"no ordering for {t!r}")


def _split_coeff(t: Term) -> tuple[Fraction, Optional[Term]]:
    """Write a simplified term as coeff * core with core coefficient-free."""
    if isinstance(t, Const):
        return t.value, None
    if isinstance(t, Mul) and t.args and isinstance(t.args[0], Const):
        rest = t.args[1:]
        core = rest[0] if len(rest) == 1 else Mul(rest)
        return t.args[0].value, core
    return Fraction(1), t


def _join_coeff(c: Fraction, core: Optional[Term]) -> Term:
    if core is None:
        return Const(c)
    if c == 0:
        return Const(Fraction(0))
    if c == 1:
        return core
    return mul(Const(c), core)


def simplify(t: Term) -> Term:
    if isinstance(t, (Const, Var, DiffVar)):
        return t
    if isinstance(t, Neg):
        return simplify(mul(Const(Fraction(-1)), t.arg))
    if isinstance(t, Add):
        return _simplify_add([simplify(a) for a in t.args])
    if isinstance(t, Mul):
        return _simplify_mul([simplify(a) for a in t.args])
    if isinstance(t, Pow):
        base = simplify(t.base)
        if isinstance(base, Const):
            return Const(base.value ** t.exp)
        if t.exp == 1:
            return base
        if isinstance(base, Pow):
            return Pow(base.base, base.exp * t.exp)
        if isinstance(base, Mul) and isinstance(base.args[0], Const):
            coeff, core = _split_coeff(base)
            return _simplify_mul([Const(coeff ** t.exp), Pow(core, t.exp)])
        return Pow(base, t.exp)
    if isinstance(t, Div):
        num = simplify(t.num)
        den = simplify(t.den)
        dc = const_value(den)
        if dc is not None:
            if dc == 0:
                raise ZeroDivisionError("division by constant zero")
            return simplify(mul(Const(1 / dc), num))
        nc = const_value(num)
        if nc is not None and nc == 0:
            return Const(Fraction(0))
        if num == den:
            return Const(Fraction(1))
        return Div(num, den)
    if isinstance(t, Sqrt):
        arg = simplify(t.arg)
        ac = const_value(arg)
        if ac is not None:
            root = exact_sqrt(ac)
            if root is not None:
                return Const(root)
        return Sqrt(arg)
    if isinstance(t, (Min, Max)):
        left = simplify(t.left)
        right = simplify(t.right)
        lc, rc = const_value(left), const_value(right)
        if lc is not None and rc is not None:
            v = min(lc, rc) if isinstance(t, Min) else max(lc, rc)
            return Const(v)
        if left == right:
            return left
        return type(t)(left, right)
    raise TypeError(f"cannot simplify {t!r}")


def _simplify_add(args: list[Term]) -> Term:
    const_part = Fraction(0)
    groups: dict = {}
    order: list = []
    for a in args:
        if isinstance(a, Add):
            inner = list(a.args)
        else:
            inner = [a]
        for s in inner:
            c, core = _split_coeff(s)
            if core is None:
                const_part += c
                continue
            k = term_key(core)
            if k not in groups:
                groups[k] = [c, core]
                order.append(k)
            else:
                groups[k][0] += c
    parts = []
    for k in sorted(order):
        c, core = groups[k]
        if c != 0:
            parts.append(_join_coeff(c, core))
    if const_part != 0 or not parts:
        parts.insert(0, Const(const_part))
    return add(*parts)


def _simplify_mul(args: list[Term]) -> Term:
    coeff = Fraction(1)
    powers: dict = {}
    order: list = []
    for a in args:
        inner = list(a.args) if isinstance(a, Mul) else [a]
        for f in inner:
            if isinstance(f, Const):
                coeff *= f.value
                continue
            base, exp = (f.base, f.exp) if isinstance(f, Pow) else (f, 1)
            k = term_key(base)
            if k not in powers:
                powers[k] = [base, 0]
                order.append(k)
            powers[k][1] += exp
    if coeff == 0:
        return Const(Fraction(0))
    factors = []
    for k in sorted(order):
        base, exp = powers[k]
        factors.append(base if exp == 1 else Pow(base, exp))
    if coeff != 1 or not factors:
        factors.insert(0, Const(coeff))
    return mul(*factors)
