"""Recognized compact control-constraint shapes.

The well-definedness check, the exists/forall witness search, and the
oracle's control sampling all share this recognizer.  Supported shapes:
interval bounds (conjunctions of a <= y, y <= b), unit-style balls
sum y_i^2 <= r^2, univariate polynomial equations with rational roots
(bounded varieties like y^2 = 1), conjunctions over disjoint variable
sets, and disjunctions of shapes over the same variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..syntax.ast import (
    Add, And, Cmp, Const, Formula, Mul, Or, Pow, Term, Var, VarKey, free_vars,
)
from .poly import PolyError, poly_of_term, poly_sub, rational_roots
from .simplify import exact_sqrt

__all__ = [
    "Shape", "IntervalShape", "BallShape", "VarietyShape", "ConjShape",
    "DisjShape", "recognize_shape", "shape_hull",
]


@dataclass(frozen=True)
class Shape:
    pass


@dataclass(frozen=True)
class IntervalShape(Shape):
    var: VarKey
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class BallShape(Shape):
    vars: tuple[VarKey, ...]
    radius_sq: Fraction


@dataclass(frozen=True)
class VarietyShape(Shape):
    var: VarKey
    roots: tuple[Fraction, ...]


@dataclass(frozen=True)
class ConjShape(Shape):
    parts: tuple[Shape, ...]


@dataclass(frozen=True)
class DisjShape(Shape):
    parts: tuple[Shape, ...]


def _const_of(t: Term) -> Optional[Fraction]:
    if isinstance(t, Const):
        return t.value
    try:
        p = poly_of_term(t)
    except PolyError:
        return None
    if not p:
        return Fraction(0)
    if set(p) == {()}:
        return p[()]
    return None


def _as_bound(c: Cmp) -> Optional[tuple[VarKey, str, Fraction]]:
    """Normalize a comparison to (var, 'lo'|'hi', bound) if possible."""
    if c.op not in ("<=", "<", ">=", ">"):
        return None
    for left, right, flip in ((c.left, c.right, False), (c.right, c.left, True)):
        if isinstance(left, Var):
            val = _const_of(right)
            if val is None:
                continue
            op = c.op
            if flip:
                op = {"<=": ">=", "<": ">", ">=": "<=", ">": "<"}[op]
            side = "hi" if op in ("<=", "<") else "lo"
            return (left.key, side, val)
    return None


def _as_ball(c: Cmp) -> Optional[BallShape]:
    if c.op not in ("<=", "<"):
        return None
    lhs, rhs = c.left, c.right
    r2 = _const_of(rhs)
    if r2 is None or r2 < 0:
        return None
    comps = lhs.args if isinstance(lhs, Add) else (lhs,)
    keys = []
    for comp in comps:
        if isinstance(comp, Pow) and comp.exp == 2 and isinstance(comp.base, Var):
            keys.append(comp.base.key)
        else:
            return None
    if len(set(keys)) != len(keys):
        return None
    return BallShape(tuple(sorted(keys)), r2)


def _as_variety(c: Cmp) -> Optional[VarietyShape]:
    if c.op != "=":
        return None
    fv = free_vars(c)
    if len(fv) != 1:
        return None
    (key,) = fv
    var = Var(key[0], key[1])
    try:
        diff = poly_sub(c.left, c.right)
    except PolyError:
        return None
    from .poly import poly_to_term
    roots = rational_roots(poly_to_term(diff), var)
    if roots is None:
        return None
    deg = max((sum(e for _, e in m) for m in diff), default=0)
    if deg == 0:
        return None
    return VarietyShape(key, tuple(roots))


def recognize_shape(f: Formula) -> Optional[Shape]:
    """Recognize a control constraint as a compact shape, else None."""
    if isinstance(f, Cmp):
        ball = _as_ball(f)
        if ball is not None:
            if len(ball.vars) == 1:
                r = exact_sqrt(ball.radius_sq)
                if r is not None:
                    return IntervalShape(ball.vars[0], -r, r)
            return ball
        variety = _as_variety(f)
        if variety is not None:
            return variety
        return None  # a single one-sided bound is unbounded
    if isinstance(f, And):
        bounds: dict[VarKey, dict[str, Fraction]] = {}
        others: list[Shape] = []
        for a in f.args:
            b = _as_bound(a) if isinstance(a, Cmp) else None
            if b is not None:
                key, side, val = b
                entry = bounds.setdefault(key, {})
                if side in entry:
                    entry[side] = min(entry[side], val) if side == "hi" \
                        else max(entry[side], val)
                else:
                    entry[side] = val
                continue
            s = recognize_shape(a)
            if s is None:
                return None
            others.append(s)
        parts: list[Shape] = list(others)
        for key, entry in sorted(bounds.items()):
            if "lo" not in entry or "hi" not in entry or entry["lo"] > entry["hi"]:
                return None
            parts.append(IntervalShape(key, entry["lo"], entry["hi"]))
        covered: set[VarKey] = set()
        for p in parts:
            vs = set(_shape_vars(p))
            if vs & covered:
                return None  # overlapping constraints: not a product shape
            covered |= vs
        if len(parts) == 1:
            return parts[0]
        return ConjShape(tuple(parts))
    if isinstance(f, Or):
        parts = []
        for a in f.args:
            s = recognize_shape(a)
            if s is None:
                return None
            parts.append(s)
        return DisjShape(tuple(parts))
    return None


def _shape_vars(s: Shape) -> tuple[VarKey, ...]:
    if isinstance(s, IntervalShape):
        return (s.var,)
    if isinstance(s, BallShape):
        return s.vars
    if isinstance(s, VarietyShape):
        return (s.var,)
    if isinstance(s, (ConjShape, DisjShape)):
        out: list[VarKey] = []
        for p in s.parts:
            out.extend(_shape_vars(p))
        return tuple(dict.fromkeys(out))
    raise TypeError(f"unknown shape {s!r}")


def shape_vars(s: Shape) -> tuple[VarKey, ...]:
    return _shape_vars(s)


def shape_hull(s: Shape) -> dict[VarKey, tuple[Fraction, Fraction]]:
    """Exact interval hull of a shape, per variable."""
    if isinstance(s, IntervalShape):
        return {s.var: (s.lo, s.hi)}
    if isinstance(s, BallShape):
        r = exact_sqrt(s.radius_sq)
        if r is None:
            # rational over-approximation of the radius
            from math import isqrt
            num, den = s.radius_sq.numerator, s.radius_sq.denominator
            r = Fraction(isqrt(num * den) + 1, den)
        return {k: (-r, r) for k in s.vars}
    if isinstance(s, VarietyShape):
        if not s.roots:
            return {s.var: (Fraction(0), Fraction(0))}
        return {s.var: (min(s.roots), max(s.roots))}
    if isinstance(s, ConjShape):
        out: dict[VarKey, tuple[Fraction, Fraction]] = {}
        for p in s.parts:
            out.update(shape_hull(p))
        return out
    if isinstance(s, DisjShape):
        hulls = [shape_hull(p) for p in s.parts]
        keys = set()
        for h in hulls:
            keys |= set(h)
        out = {}
        for k in keys:
            los = [h[k][0] for h in hulls if k in h]
            his = [h[k][1] for h in hulls if k in h]
            out[k] = (min(los), max(his))
        return out
    raise TypeError(f"unknown shape {s!r}")
