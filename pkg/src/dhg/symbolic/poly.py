"""Sparse multivariate polynomials with exact rational coefficients.

Canonical form for decidable term equality (refinement identity checks,
checked-solution conditions) and for monomial factoring during interval
certification.  Differential symbols are admitted as ordinary
indeterminates.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..syntax.ast import (
    Add, Const, DiffVar, Div, Max, Min, Mul, Neg, Pow, Sqrt, Term, Var, add,
    mul,
)

__all__ = [
    "PolyError", "Poly", "poly_of_term", "poly_normalize", "poly_equal",
    "poly_sub", "monomial_factor", "rational_roots",
]

# variable atom: (name, index-or--1, is_differential)
Atom = tuple[str, int, bool]
# monomial: sorted tuple of (atom, exponent)
Monomial = tuple[tuple[Atom, int], ...]
# polynomial: monomial -> coefficient
Poly = dict[Monomial, Fraction]


class PolyError(ValueError):
    pass


def _atom(t) -> Atom:
    idx = -1 if t.index is None else t.index
    return (t.name, idx, isinstance(t, DiffVar))


def _p_const(c: Fraction) -> Poly:
    return {(): c} if c != 0 else {}


def _p_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, Fraction(0)) + c
        if s == 0:
            out.pop(m, None)
        else:
            out[m] = s
    return out


def _m_mul(m1: Monomial, m2: Monomial) -> Monomial:
    exps: dict[Atom, int] = {}
    for a, e in m1 + m2:
        exps[a] = exps.get(a, 0) + e
    return tuple(sorted(exps.items()))


def _p_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = _m_mul(m1, m2)
            s = out.get(m, Fraction(0)) + c1 * c2
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
    return out


def _p_pow(a: Poly, n: int) -> Poly:
    out = _p_const(Fraction(1))
    base = a
    while n:
        if n & 1:
            out = _p_mul(out, base)
        base = _p_mul(base, base) if n > 1 else base
        n >>= 1
    return out


def poly_of_term(t: Term) -> Poly:
    if isinstance(t, Const):
        return _p_const(t.value)
    if isinstance(t, (Var, DiffVar)):
        return {((_atom(t), 1),): Fraction(1)}
    if isinstance(t, Neg):
        return _p_mul(_p_const(Fraction(-1)), poly_of_term(t.arg))
    if isinstance(t, Add):
        out: Poly = {}
        for a in t.args:
            out = _p_add(out, poly_of_term(a))
        return out
    if isinstance(t, Mul):
        out = _p_const(Fraction(1))
        for a in t.args:
            out = _p_mul(out, poly_of_term(a))
        return out
    if isinstance(t, Pow):
        return _p_pow(poly_of_term(t.base), t.exp)
    if isinstance(t, (Div, Sqrt, Min, Max)):
        raise PolyError(f"non-polynomial node {type(t).__name__}")
    raise PolyError(f"unknown term node {t!r}")


def _mon_sort_key(item):
    m, _ = item
    total = sum(e for _, e in m)
    return (total, m)


def poly_to_term(p: Poly) -> Term:
    """Canonical term: monomials sorted by total degree then variables."""
    if not p:
        return Const(Fraction(0))
    parts = []
    for m, c in sorted(p.items(), key=_mon_sort_key):
        factors = []
        for (name, idx, prime), e in m:
            v = DiffVar(name, None if idx < 0 else idx) if prime \
                else Var(name, None if idx < 0 else idx)
            factors.append(v if e == 1 else Pow(v, e))
        if not factors:
            parts.append(Const(c))
        elif c == 1:
            parts.append(mul(*factors))
        else:
            parts.append(mul(Const(c), *factors))
    return add(*parts)


def poly_normalize(t: Term) -> Term:
    """Canonical expanded polynomial form of a term."""
    return poly_to_term(poly_of_term(t))


def poly_sub(t1: Term, t2: Term) -> Poly:
    return _p_add(poly_of_term(t1), _p_mul(_p_const(Fraction(-1)), poly_of_term(t2)))


def poly_equal(t1: Term, t2: Term) -> bool:
    """Decidable equality of polynomial terms."""
    return not poly_sub(t1, t2)


def monomial_factor(p: Poly) -> tuple[Monomial, Poly]:
    """Largest monomial m with p = m * q; returns (m, q).

    Pulling even powers out front keeps interval evaluation exact at
    sign-change points like x^4*(4 - 3*x) around x = 0.
    """
    if not p:
        return ((), p)
    shared: Optional[dict[Atom, int]] = None
    for m in p:
        exps = dict(m)
        if shared is None:
            shared = exps
        else:
            shared = {a: min(e, exps[a]) for a, e in shared.items() if a in exps}
        if not shared:
            return ((), p)
    gcd_mon: Monomial = tuple(sorted(shared.items()))
    if not gcd_mon:
        return ((), p)
    quotient: Poly = {}
    for m, c in p.items():
        exps = dict(m)
        for a, e in gcd_mon:
            exps[a] -= e
            if exps[a] == 0:
                del exps[a]
        quotient[tuple(sorted(exps.items()))] = c
    return gcd_mon, quotient


def monomial_to_term(m: Monomial) -> Term:
    factors = []
    for (name, idx, prime), e in m:
        v = DiffVar(name, None if idx < 0 else idx) if prime \
            else Var(name, None if idx < 0 else idx)
        factors.append(v if e == 1 else Pow(v, e))
    return mul(*factors) if factors else Const(Fraction(1))


def rational_roots(t: Term, var) -> Optional[list[Fraction]]:
    """All rational roots of a univariate polynomial term in `var`.

    Returns None if t is not a univariate polynomial in var.  Used to
    enumerate control varieties like y^2 = 1.
    """
    try:
        p = poly_of_term(t)
    except PolyError:
        return None
    target = _atom(var)
    coeffs: dict[int, Fraction] = {}
    for m, c in p.items():
        if not m:
            coeffs[0] = coeffs.get(0, Fraction(0)) + c
        elif len(m) == 1 and m[0][0] == target:
            coeffs[m[0][1]] = coeffs.get(m[0][1], Fraction(0)) + c
        else:
            return None
    deg = max(coeffs) if coeffs else 0
    if deg == 0:
        return []  # constant: no roots (or everything; caller checks)
    # clear denominators to integer coefficients
    from math import gcd, lcm
    den = 1
    for c in coeffs.values():
        den = lcm(den, c.denominator)
    ints = {e: int(c * den) for e, c in coeffs.items()}
    a0 = ints.get(0, 0)
    an = ints[deg]
    roots: list[Fraction] = []
    if a0 == 0:
        roots.append(Fraction(0))
        while ints.get(0, 0) == 0 and max(ints) > 0:
            ints = {e - 1: c for e, c in ints.items() if e >= 1}
        a0 = ints.get(0, 0)
        deg = max(ints)
        an = ints[deg]
        if a0 == 0:
            return sorted(set(roots))

    def divisors(n: int) -> list[int]:
        n = abs(n)
        out = []
        i = 1
        while i * i <= n:
            if n % i == 0:
                out.append(i)
                out.append(n // i)
            i += 1
        return sorted(set(out))

    def eval_at(q: Fraction) -> Fraction:
        return sum((Fraction(c) * q ** e for e, c in ints.items()), Fraction(0))

    for pnum in divisors(a0):
        for qden in divisors(an):
            for cand in (Fraction(pnum, qden), Fraction(-pnum, qden)):
                if eval_at(cand) == 0:
                    roots.append(cand)
    return sorted(set(roots))
