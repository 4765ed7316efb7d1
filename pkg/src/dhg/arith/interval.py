"""Outward-rounded interval arithmetic over binary floats.

Directed rounding is emulated with error-free transformations: TwoSum
for addition and Veltkamp/Dekker splitting for multiplication decide
whether the rounded result is exact; only inexact results are bumped
one ulp outward.  Exact computations therefore stay exact, which the
certification layer relies on (weak inequalities certify when the
enclosure lower bound is >= 0 exactly, e.g. x^2 on [-1,1] -> [0,1]).

Division and square roots compare against exact rational arithmetic to
pick the rounding direction; both are rare (witness terms only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from ..syntax.ast import (
    Add, Const, DiffVar, Div, Max, Min, Mul, Neg, Pow, Sqrt, Term, Var,
    VarKey,
)

__all__ = ["Interval", "IntervalError", "Box", "eval_term_interval",
           "eval_term_exact", "eval_formula_exact", "EvalError"]

_INF = math.inf
_SPLITTER = 134217729.0  # 2**27 + 1


class IntervalError(ArithmeticError):
    """Raised when interval evaluation is undefined (division by an
    interval containing zero)."""


class EvalError(ArithmeticError):
    """Raised when exact rational evaluation is undefined."""


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi

def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    if not math.isfinite(p):
        return p, 0.0
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _down(value: float, err: float) -> float:
    if err < 0.0:
        return math.nextafter(value, -_INF)
    return value


def _up(value: float, err: float) -> float:
    if err > 0.0:
        return math.nextafter(value, _INF)
    return value


def add_down(a, b):
    s, e = _two_sum(a, b)
    return _down(s, e)


def add_up(a, b):
    s, e = _two_sum(a, b)
    return _up(s, e)


def mul_down(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return a * b
    p, e = _two_prod(a, b)
    if math.isinf(p):
        return p if p < 0 else math.nextafter(p, -_INF)
    return _down(p, e)


def mul_up(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return a * b
    p, e = _two_prod(a, b)
    if math.isinf(p):
        return p if p > 0 else math.nextafter(p, _INF)
    return _up(p, e)


def _div_directed(a: float, b: float, up: bool) -> float:
    q = a / b
    if not math.isfinite(q) or q == 0.0:
        return q
    exact = Fraction(a) / Fraction(b)
    qf = Fraction(q)
    if qf == exact:
        return q
    if up:
        return math.nextafter(q, _INF) if qf < exact else q
    return math.nextafter(q, -_INF) if qf > exact else q


def _sqrt_directed(a: float, up: bool) -> float:
    if a < 0.0:
        raise IntervalError("sqrt of a negative number")
    s = math.sqrt(a)
    if s == 0.0 or math.isinf(s):
        return s
    sf, af = Fraction(s), Fraction(a)
    if sf * sf == af:
        return s
    if up:
        return math.nextafter(s, _INF) if sf * sf < af else s
    return math.nextafter(s, -_INF) if sf * sf > af else s


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise IntervalError(f"bad interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(x: Union[float, int, Fraction]) -> "Interval":
        if isinstance(x, Fraction):
            return Interval.from_fraction(x)
        return Interval(float(x), float(x))

    @staticmethod
    def from_fraction(q: Fraction) -> "Interval":
        f = float(q)
        qf = Fraction(f) if math.isfinite(f) else None
        if qf == q:
            return Interval(f, f)
        if qf is None:
            return Interval(-_INF, _INF)
        if qf < q:
            return Interval(f, math.nextafter(f, _INF))
        return Interval(math.nextafter(f, -_INF), f)

    @staticmethod
    def hull(lo: Fraction, hi: Fraction) -> "Interval":
        a = Interval.from_fraction(Fraction(lo))
        b = Interval.from_fraction(Fraction(hi))
        return Interval(a.lo, b.hi)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(add_down(self.lo, other.lo), add_up(self.hi, other.hi))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other: "Interval") -> "Interval":
        return self + (-other)

    def __mul__(self, other: "Interval") -> "Interval":
        pairs = ((self.lo, other.lo), (self.lo, other.hi),
                 (self.hi, other.lo), (self.hi, other.hi))
        return Interval(min(mul_down(a, b) for a, b in pairs),
                        max(mul_up(a, b) for a, b in pairs))

    def divide(self, other: "Interval") -> "Interval":
        if other.lo <= 0.0 <= other.hi:
            raise IntervalError("division by an interval containing 0")
        pairs = ((self.lo, other.lo), (self.lo, other.hi),
                 (self.hi, other.lo), (self.hi, other.hi))
        return Interval(min(_div_directed(a, b, up=False) for a, b in pairs),
                        max(_div_directed(a, b, up=True) for a, b in pairs))

    def power(self, n: int) -> "Interval":
        if n == 1:
            return self
        if n % 2 == 1 or self.lo >= 0.0:
            return Interval(_pow_down(self.lo, n), _pow_up(self.hi, n))
        if self.hi <= 0.0:
            # even power of a nonpositive interval: decreasing
            return Interval(_pow_down(self.hi, n), _pow_up(self.lo, n))
        # even power straddling zero: [0, max(|lo|, hi)^n], exactly 0 below
        m = max(-self.lo, self.hi)
        return Interval(0.0, _pow_up(m, n))

    def sqrt(self) -> tuple["Interval", bool]:
        """Square root; clamps a partially negative argument to [0, inf)
        and reports the clamp."""
        clamped = self.lo < 0.0
        if self.hi < 0.0:
            raise IntervalError("sqrt of a negative interval")
        lo = 0.0 if clamped else _sqrt_directed(self.lo, up=False)
        return Interval(lo, _sqrt_directed(self.hi, up=True)), clamped

    def min_(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), min(self.hi, other.hi))

    def max_(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def contains(self, x: Union[float, Fraction]) -> bool:
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def _pow_down(x: float, n: int) -> float:
    sign = -1.0 if (x < 0 and n % 2 == 1) else 1.0
    a = abs(x)
    out = 1.0
    for _ in range(n):
        out = mul_down(out, a) if sign > 0 else mul_up(out, a)
    return sign * out


def _pow_up(x: float, n: int) -> float:
    sign = -1.0 if (x < 0 and n % 2 == 1) else 1.0
    a = abs(x)
    out = 1.0
    for _ in range(n):
        out = mul_up(out, a) if sign > 0 else mul_down(out, a)
    return sign * out


# ---------------------------------------------------------------------------
# Boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: a mapping from variables to intervals."""

    intervals: tuple[tuple[VarKey, Interval], ...]

    @staticmethod
    def of(mapping: dict[VarKey, Interval]) -> "Box":
        return Box(tuple(sorted(mapping.items(), key=lambda kv: _key_order(kv[0]))))

    def as_dict(self) -> dict[VarKey, Interval]:
        return dict(self.intervals)

    def get(self, key: VarKey) -> Optional[Interval]:
        for k, iv in self.intervals:
            if k == key:
                return iv
        return None

    def covers(self, keys) -> bool:
        have = {k for k, _ in self.intervals}
        return set(keys) <= have

    def widest_dim(self, min_width: float = 0.0) -> Optional[VarKey]:
        best = None
        best_w = min_width
        for k, iv in self.intervals:
            if iv.width > best_w:
                best = k
                best_w = iv.width
        return best

    def split(self, key: VarKey) -> tuple["Box", "Box"]:
        items_lo = []
        items_hi = []
        for k, iv in self.intervals:
            if k == key:
                mid = iv.lo + (iv.hi - iv.lo) / 2.0
                items_lo.append((k, Interval(iv.lo, mid)))
                items_hi.append((k, Interval(mid, iv.hi)))
            else:
                items_lo.append((k, iv))
                items_hi.append((k, iv))
        return Box(tuple(items_lo)), Box(tuple(items_hi))

    def replace(self, key: VarKey, iv: Interval) -> "Box":
        return Box(tuple((k, iv if k == key else old) for k, old in self.intervals))

    def extend(self, mapping: dict[VarKey, Interval]) -> "Box":
        merged = self.as_dict()
        merged.update(mapping)
        return Box.of(merged)

    def center(self) -> dict[VarKey, Fraction]:
        out = {}
        for k, iv in self.intervals:
            mid = iv.lo + (iv.hi - iv.lo) / 2.0
            out[k] = Fraction(mid)
        return out

    def corner_low(self) -> dict[VarKey, Fraction]:
        return {k: Fraction(iv.lo) for k, iv in self.intervals}

    def __str__(self):
        parts = [f"{k[0]}{'' if k[1] is None else k[1]}={iv}" for k, iv in self.intervals]
        return "{" + ", ".join(parts) + "}"


def _key_order(k: VarKey):
    return (k[0], -1 if k[1] is None else k[1])


# ---------------------------------------------------------------------------
# Term evaluation
# ---------------------------------------------------------------------------


def eval_term_interval(t: Term, box: dict[VarKey, Interval],
                       warnings: Optional[list[str]] = None) -> Interval:
    """Enclosure of the exact range of t over the box.

    Raises IntervalError for division by an interval containing 0; a
    sqrt argument dipping below zero is clamped to [0, inf) with a
    warning recorded.
    """
    if isinstance(t, Const):
        return Interval.from_fraction(t.value)
    if isinstance(t, (Var, DiffVar)):
        iv = box.get(t.key)
        if iv is None:
            raise IntervalError(
                f"variable {t.name}{'' if t.index is None else t.index} "
                "is not covered by the box")
        return iv
    if isinstance(t, Neg):
        return -eval_term_interval(t.arg, box, warnings)
    if isinstance(t, Add):
        out = Interval(0.0, 0.0)
        for a in t.args:
            out = out + eval_term_interval(a, box, warnings)
        return out
    if isinstance(t, Mul):
        out = Interval(1.0, 1.0)
        for a in t.args:
            out = out * eval_term_interval(a, box, warnings)
        return out
    if isinstance(t, Pow):
        return eval_term_interval(t.base, box, warnings).power(t.exp)
    if isinstance(t, Div):
        num = eval_term_interval(t.num, box, warnings)
        den = eval_term_interval(t.den, box, warnings)
        return num.divide(den)
    if isinstance(t, Sqrt):
        arg = eval_term_interval(t.arg, box, warnings)
        out, clamped = arg.sqrt()
        if clamped and warnings is not None:
            warnings.append("sqrt argument clamped to [0, inf)")
        return out
    if isinstance(t, Min):
        return eval_term_interval(t.left, box, warnings).min_(
            eval_term_interval(t.right, box, warnings))
    if isinstance(t, Max):
        return eval_term_interval(t.left, box, warnings).max_(
            eval_term_interval(t.right, box, warnings))
    raise TypeError(f"cannot evaluate {t!r}")


def eval_term_exact(t: Term, env: dict[VarKey, Fraction]) -> Fraction:
    """Exact rational value of a term at a rational point."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, (Var, DiffVar)):
        try:
            return env[t.key]
        except KeyError:
            raise EvalError(f"unbound variable {t.name}") from None
    if isinstance(t, Neg):
        return -eval_term_exact(t.arg, env)
    if isinstance(t, Add):
        return sum((eval_term_exact(a, env) for a in t.args), Fraction(0))
    if isinstance(t, Mul):
        out = Fraction(1)
        for a in t.args:
            out *= eval_term_exact(a, env)
        return out
    if isinstance(t, Pow):
        return eval_term_exact(t.base, env) ** t.exp
    if isinstance(t, Div):
        den = eval_term_exact(t.den, env)
        if den == 0:
            raise EvalError("division by zero")
        return eval_term_exact(t.num, env) / den
    if isinstance(t, Sqrt):
        from ..symbolic.simplify import exact_sqrt
        arg = eval_term_exact(t.arg, env)
        root = exact_sqrt(arg)
        if root is None:
            raise EvalError("sqrt has no exact rational value at this point")
        return root
    if isinstance(t, Min):
        return min(eval_term_exact(t.left, env), eval_term_exact(t.right, env))
    if isinstance(t, Max):
        return max(eval_term_exact(t.left, env), eval_term_exact(t.right, env))
    raise TypeError(f"cannot evaluate {t!r}")


_OPS = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_formula_exact(f, env: dict[VarKey, Fraction]) -> bool:
    """Exact truth value of a quantifier-free, modality-free formula."""
    from ..syntax.ast import And, Cmp, Iff, Implies, Not, Or

    if isinstance(f, Cmp):
        return _OPS[f.op](eval_term_exact(f.left, env), eval_term_exact(f.right, env))
    if isinstance(f, Not):
        return not eval_formula_exact(f.arg, env)
    if isinstance(f, And):
        return all(eval_formula_exact(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(eval_formula_exact(a, env) for a in f.args)
    if isinstance(f, Implies):
        return (not eval_formula_exact(f.left, env)) or eval_formula_exact(f.right, env)
    if isinstance(f, Iff):
        return eval_formula_exact(f.left, env) == eval_formula_exact(f.right, env)
    raise EvalError(f"cannot exactly evaluate {f!r}")
