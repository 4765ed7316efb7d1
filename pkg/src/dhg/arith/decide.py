"""Branch-and-bound verification of quantifier-free formulas on boxes.

decide_forall certifies a formula on a compact box by interval
evaluation with deterministic depth-first splitting of the widest
dimension.  Valid is sound: it is returned only when every leaf box
certifies.  Falsified carries a rational counterexample checked in
exact arithmetic.  Unknown reports budget exhaustion.

Certification combines three enclosures per comparison and takes the
best: the original term shape (kept factored, e.g. 3*x^2*(1+z)), a
per-box simplification resolving min/max branches, and the monomial-gcd
factored normal form (x^4*(4-3*x) stays exactly nonnegative around 0).
Implications additionally try a linear-combination certificate: from
hypothesis p <= 0 and conclusion q with poly(q) = k*poly(p), k <= 0,
the implication is valid outright, which closes sublevel-set premises
that are tight at the boundary.

search_exists_forall looks for a witness sub-box of a recognized
compact control shape; control varieties enumerate their rational
roots.  It never falsifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..symbolic.arithmetize import nnf
from ..symbolic.poly import (
    PolyError, monomial_factor, monomial_to_term, poly_of_term, poly_to_term,
)
from ..symbolic.shapes import (
    BallShape, ConjShape, DisjShape, IntervalShape, Shape, VarietyShape,
    recognize_shape, shape_hull,
)
from ..symbolic.simplify import simplify
from ..symbolic.substitute import substitute
from ..syntax.ast import (
    And, Cmp, Const, Div, Formula, Implies, Max, Min, Mul, Neg, Not, Or, Pow,
    Sqrt, Term, Var, VarKey, free_vars, sub,
)
from .interval import (
    Box, EvalError, Interval, IntervalError, eval_formula_exact,
    eval_term_interval,
)

__all__ = ["Verdict", "decide_forall", "search_exists_forall",
           "DEFAULT_BUDGET", "UncoveredVariableError"]

DEFAULT_BUDGET = 20000
MIN_WIDTH = 1e-9


class UncoveredVariableError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    status: str  # "valid" | "falsified" | "unknown"
    witness: Optional[dict] = None       # falsifying rational point
    witness_box: Optional[Box] = None    # existential witness box
    boxes_used: int = 0
    message: str = ""

    @property
    def is_valid(self) -> bool:
        return self.status == "valid"

    @property
    def is_falsified(self) -> bool:
        return self.status == "falsified"

    def __str__(self):
        if self.status == "falsified" and self.witness is not None:
            pt = ", ".join(f"{k[0]}{'' if k[1] is None else k[1]}={v}"
                           for k, v in sorted(self.witness.items()))
            return f"falsified at ({pt})"
        if self.status == "unknown" and self.message:
            return f"unknown ({self.message})"
        return self.status


# ---------------------------------------------------------------------------
# prepared evaluators
# ---------------------------------------------------------------------------


def _has_special(t: Term) -> bool:
    from ..syntax.ast import subterms_of_kind
    return bool(subterms_of_kind(t, (Min, Max, Div, Sqrt)))


class _PreparedTerm:
    """One-time analysis of a term for repeated per-box lower bounds."""

    __slots__ = ("term", "special", "factored", "zero")

    def __init__(self, t: Term):
        self.term = simplify(t)
        self.special = _has_special(self.term)
        self.factored = None
        self.zero = False
        if not self.special:
            try:
                p = poly_of_term(self.term)
                self.zero = not p
                mon, quot = monomial_factor(p)
                if mon:
                    self.factored = (monomial_to_term(mon), poly_to_term(quot))
            except PolyError:
                pass

    def _enclosures(self, boxd: dict) -> list[Interval]:
        if self.zero:
            return [Interval(0.0, 0.0)]
        out = []
        try:
            out.append(eval_term_interval(self.term, boxd))
        except IntervalError:
            pass
        if self.special:
            bs = box_simplify(self.term, boxd)
            if bs is not self.term:
                variants = [bs]
                if not _has_special(bs):
                    try:
                        mon, quot = monomial_factor(poly_of_term(bs))
                        if mon:
                            variants.append(Mul((monomial_to_term(mon),
                                                 poly_to_term(quot))))
                    except PolyError:
                        pass
                for v in variants:
                    try:
                        out.append(eval_term_interval(v, boxd))
                    except IntervalError:
                        pass
        elif self.factored is not None:
            mon_t, quot_t = self.factored
            try:
                out.append(eval_term_interval(mon_t, boxd)
                           * eval_term_interval(quot_t, boxd))
            except IntervalError:
                pass
        return out

    def lower(self, boxd: dict) -> float:
        encls = self._enclosures(boxd)
        if not encls:
            return -math.inf
        return max(e.lo for e in encls)

    def upper(self, boxd: dict) -> float:
        encls = self._enclosures(boxd)
        if not encls:
            return math.inf
        return min(e.hi for e in encls)


def box_simplify(t: Term, boxd: dict) -> Term:
    """Resolve min/max branches decided by interval bounds on this box."""
    if isinstance(t, (Min, Max)):
        left = box_simplify(t.left, boxd)
        right = box_simplify(t.right, boxd)
        try:
            il = eval_term_interval(left, boxd)
            ir = eval_term_interval(right, boxd)
        except IntervalError:
            return type(t)(left, right)
        if isinstance(t, Min):
            if il.hi <= ir.lo:
                return left
            if ir.hi <= il.lo:
                return right
        else:
            if il.lo >= ir.hi:
                return left
            if ir.lo >= il.hi:
                return right
        return type(t)(left, right)
    from ..syntax.ast import Add, DiffVar
    if isinstance(t, Add):
        args = tuple(box_simplify(a, boxd) for a in t.args)
        return t if args == t.args else Add(args)
    if isinstance(t, Mul):
        args = tuple(box_simplify(a, boxd) for a in t.args)
        return t if args == t.args else Mul(args)
    if isinstance(t, Neg):
        a = box_simplify(t.arg, boxd)
        return t if a is t.arg else Neg(a)
    if isinstance(t, Pow):
        b = box_simplify(t.base, boxd)
        return t if b is t.base else Pow(b, t.exp)
    if isinstance(t, Div):
        n, d = box_simplify(t.num, boxd), box_simplify(t.den, boxd)
        return t if (n is t.num and d is t.den) else Div(n, d)
    if isinstance(t, Sqrt):
        a = box_simplify(t.arg, boxd)
        return t if a is t.arg else Sqrt(a)
    return t


class _PreparedFormula:
    """Mirror of the formula tree with prepared comparison evaluators."""

    def __init__(self, f: Formula):
        self.formula = f
        self.kind = type(f).__name__
        self.children: list[_PreparedFormula] = []
        self.diff_lhs: Optional[_PreparedTerm] = None
        self.diff_rhs: Optional[_PreparedTerm] = None
        self.op = None
        self.always_valid = False
        if isinstance(f, Cmp):
            self.op = f.op
            self.diff_lhs = _PreparedTerm(sub(f.left, f.right))
            self.diff_rhs = _PreparedTerm(sub(f.right, f.left))
        elif isinstance(f, (And, Or)):
            self.children = [_PreparedFormula(a) for a in f.args]
        elif isinstance(f, Not):
            self.children = [_PreparedFormula(f.arg)]
        elif isinstance(f, Implies):
            self.children = [_PreparedFormula(f.left), _PreparedFormula(f.right)]
            self.always_valid = combination_certificate(f.left, f.right)
        else:
            raise UncoveredVariableError(
                f"decide_forall needs a quantifier-free formula, got {type(f).__name__}")

    def certify(self, boxd: dict) -> bool:
        if self.always_valid:
            return True
        if self.op is not None:
            if self.op == ">=":
                return self.diff_lhs.lower(boxd) >= 0.0
            if self.op == ">":
                return self.diff_lhs.lower(boxd) > 0.0
            if self.op == "<=":
                return self.diff_rhs.lower(boxd) >= 0.0
            if self.op == "<":
                return self.diff_rhs.lower(boxd) > 0.0
            if self.op == "=":
                lo = self.diff_lhs.lower(boxd)
                hi = self.diff_lhs.upper(boxd)
                return lo == 0.0 and hi == 0.0
            if self.op == "!=":
                return self.diff_lhs.lower(boxd) > 0.0 or self.diff_rhs.lower(boxd) > 0.0
        if self.kind == "And":
            return all(c.certify(boxd) for c in self.children)
        if self.kind == "Or":
            return any(c.certify(boxd) for c in self.children)
        if self.kind == "Not":
            return self.children[0].refute(boxd)
        if self.kind == "Implies":
            return self.children[0].refute(boxd) or self.children[1].certify(boxd)
        return False

    def refute(self, boxd: dict) -> bool:
        if self.op is not None:
            if self.op == ">=":
                return self.diff_rhs.lower(boxd) > 0.0
            if self.op == ">":
                return self.diff_rhs.lower(boxd) >= 0.0
            if self.op == "<=":
                return self.diff_lhs.lower(boxd) > 0.0
            if self.op == "<":
                return self.diff_lhs.lower(boxd) >= 0.0
            if self.op == "=":
                return self.diff_lhs.lower(boxd) > 0.0 or self.diff_rhs.lower(boxd) > 0.0
            if self.op == "!=":
                lo = self.diff_lhs.lower(boxd)
                hi = self.diff_lhs.upper(boxd)
                return lo == 0.0 and hi == 0.0
        if self.kind == "And":
            return any(c.refute(boxd) for c in self.children)
        if self.kind == "Or":
            return all(c.refute(boxd) for c in self.children)
        if self.kind == "Not":
            return self.children[0].certify(boxd)
        if self.kind == "Implies":
            return self.children[0].certify(boxd) and self.children[1].refute(boxd)
        return False


def _le_zero_poly(c: Cmp) -> Optional[Term]:
    """Rewrite a comparison as p <= 0 (or p < 0) and return p."""
    if c.op in ("<=", "<"):
        return sub(c.left, c.right)
    if c.op in (">=", ">"):
        return sub(c.right, c.left)
    return None


def _ge_zero_poly(c: Cmp) -> Optional[Term]:
    if c.op in (">=", ">"):
        return sub(c.left, c.right)
    if c.op in ("<=", "<"):
        return sub(c.right, c.left)
    return None


def combination_certificate(hyp: Formula, concl: Formula) -> bool:
    """True when hypothesis p<=0 forces conclusion q>=0 because
    poly(q) = k*poly(p) with k <= 0 (strictness handled in kind)."""
    hyps = hyp.args if isinstance(hyp, And) else (hyp,)
    if not isinstance(concl, Cmp):
        return False
    q_term = _ge_zero_poly(concl)
    if q_term is None:
        return False
    try:
        q = poly_of_term(q_term)
    except PolyError:
        return False
    if not q:
        # conclusion is 0 >= 0 (or 0 > 0): only the weak form holds
        return concl.op in (">=", "<=")
    for h in hyps:
        if not isinstance(h, Cmp):
            continue
        p_term = _le_zero_poly(h)
        if p_term is None:
            continue
        try:
            p = poly_of_term(p_term)
        except PolyError:
            continue
        if not p:
            continue
        mono = next(iter(q))
        if mono not in p or p[mono] == 0:
            continue
        k = q[mono] / p[mono]
        if k > 0:
            continue
        if all(p.get(m, Fraction(0)) * k == c for m, c in q.items()) \
                and all(m in q or c * k == 0 for m, c in p.items()):
            strict_concl = concl.op in (">", "<")
            strict_hyp = h.op in ("<", ">")
            if not strict_concl:
                return True
            if strict_hyp and k < 0:
                return True
    return False


# ---------------------------------------------------------------------------
# hypothesis-driven box contraction
# ---------------------------------------------------------------------------


def _contract(f: Formula, box: Box) -> Optional[Box]:
    """Use top-level implication hypotheses to narrow the box; returns
    None when a hypothesis is exactly incompatible with the box (the
    implication is vacuously true there)."""
    if not isinstance(f, Implies):
        return box
    hyps = f.left.args if isinstance(f.left, And) else (f.left,)
    boxd = box.as_dict()
    for h in hyps:
        if not isinstance(h, Cmp):
            continue
        for lhs, rhs, op in ((h.left, h.right, h.op),
                             (h.right, h.left, _FLIP[h.op])):
            if isinstance(lhs, Var) and lhs.key in boxd and not free_vars(rhs):
                try:
                    val = _const_fraction(rhs)
                except PolyError:
                    continue
                if val is None:
                    continue
                iv = boxd[lhs.key]
                cap = Interval.from_fraction(val)
                if op == "=":
                    res = iv.intersect(cap)
                elif op in ("<=", "<"):
                    res = iv.intersect(Interval(-math.inf, cap.hi))
                elif op in (">=", ">"):
                    res = iv.intersect(Interval(cap.lo, math.inf))
                else:
                    res = iv
                if res is None:
                    return None
                boxd[lhs.key] = res
    return Box.of(boxd)


_FLIP = {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "=", "!=": "!="}


def _const_fraction(t: Term) -> Optional[Fraction]:
    try:
        p = poly_of_term(t)
    except PolyError:
        return None
    if not p:
        return Fraction(0)
    if set(p) == {()}:
        return p[()]
    return None


# ---------------------------------------------------------------------------
# decide_forall
# ---------------------------------------------------------------------------


def decide_forall(f: Formula, box: Box, budget: int = DEFAULT_BUDGET,
                  min_width: float = MIN_WIDTH) -> Verdict:
    """Certify that f holds everywhere on the box.

    Valid only if every leaf box certifies by interval arithmetic;
    Falsified with an exactly checked rational witness; Unknown when
    the box budget is exhausted.
    """
    fv = free_vars(f)
    if not box.covers(fv):
        missing = sorted(fv - {k for k, _ in box.intervals})[0]
        raise UncoveredVariableError(
            f"free variable {missing[0]}{'' if missing[1] is None else missing[1]} "
            "is not covered by a box")
    prep = _PreparedFormula(f)
    start = _contract(f, box)
    if start is None:
        return Verdict("valid", boxes_used=0,
                       message="hypothesis incompatible with the box")
    stack = [start]
    used = 0
    deepest = start
    while stack:
        b = stack.pop()
        used += 1
        if used > budget:
            return Verdict("unknown", boxes_used=used,
                           message=f"budget {budget} exhausted near {deepest}")
        boxd = b.as_dict()
        if prep.certify(boxd):
            continue
        deepest = b
        pt = b.center()
        try:
            if not eval_formula_exact(f, pt):
                return Verdict("falsified", witness=pt, boxes_used=used)
        except EvalError:
            pass
        dim = b.widest_dim(min_width)
        if dim is None:
            return Verdict("unknown", boxes_used=used,
                           message=f"cannot certify degenerate box {b}")
        lo_half, hi_half = b.split(dim)
        stack.append(hi_half)
        stack.append(lo_half)
    return Verdict("valid", boxes_used=used)


# ---------------------------------------------------------------------------
# exists-forall witness search
# ---------------------------------------------------------------------------


def search_exists_forall(y_constraint: Formula, f: Formula, outer: Box,
                         budget: int = DEFAULT_BUDGET,
                         inner_budget: int = 2000,
                         min_width: float = 1e-4) -> Verdict:
    """Search a refinement of the Y-shape for a witness box By with
    Y true on all of By and f valid on outer x By.  Never falsifies."""
    shape = recognize_shape(y_constraint)
    if shape is None:
        raise UncoveredVariableError(
            "existential control constraint is not a recognized compact shape")

    total_used = 0

    roots = _variety_points(shape)
    if roots is not None:
        for point in roots:
            fb = f
            for key, val in sorted(point.items()):
                fb = substitute(fb, Var(key[0], key[1]), Const(val))
            v = decide_forall(fb, outer, budget=inner_budget)
            total_used += v.boxes_used
            if total_used > budget:
                return Verdict("unknown", boxes_used=total_used,
                               message="budget exhausted enumerating variety points")
            if v.is_valid:
                wb = Box.of({k: Interval.from_fraction(val)
                             for k, val in point.items()})
                return Verdict("valid", witness_box=wb, boxes_used=total_used)
        return Verdict("unknown", boxes_used=total_used,
                       message="no variety point certifies the premise")

    hull = shape_hull(shape)
    hull_box = Box.of({k: Interval.hull(lo, hi) for k, (lo, hi) in hull.items()})
    y_prep = _PreparedFormula(nnf(y_constraint))

    from collections import deque
    queue = deque(_seed_boxes(shape, hull_box) + [hull_box])
    seen = set()
    while queue:
        yb = queue.popleft()
        sig = tuple((k, iv.lo, iv.hi) for k, iv in yb.intervals)
        if sig in seen:
            continue
        seen.add(sig)
        total_used += 1
        if total_used > budget:
            return Verdict("unknown", boxes_used=total_used,
                           message="witness search budget exhausted")
        ybd = yb.as_dict()
        constraint_ok = y_prep.certify(ybd)
        if not constraint_ok and _is_point(yb):
            try:
                constraint_ok = eval_formula_exact(y_constraint, yb.corner_low())
            except EvalError:
                constraint_ok = False
        if constraint_ok:
            v = decide_forall(f, outer.extend(ybd), budget=inner_budget)
            total_used += v.boxes_used
            if v.is_valid:
                return Verdict("valid", witness_box=yb, boxes_used=total_used)
        dim = yb.widest_dim(min_width)
        if dim is not None:
            lo_half, hi_half = yb.split(dim)
            mid = lo_half.get(dim).hi
            queue.append(lo_half)
            queue.append(hi_half)
            queue.append(yb.replace(dim, Interval(mid, mid)))
    return Verdict("unknown", boxes_used=total_used,
                   message="no witness box found at the search resolution")


def _is_point(b: Box) -> bool:
    return all(iv.lo == iv.hi for _, iv in b.intervals)


def _variety_points(shape: Shape) -> Optional[list[dict[VarKey, Fraction]]]:
    """Exact sample points when the shape is a (product of) varieties."""
    if isinstance(shape, VarietyShape):
        return [{shape.var: r} for r in shape.roots]
    if isinstance(shape, ConjShape) and all(isinstance(p, VarietyShape)
                                            for p in shape.parts):
        points = [{}]
        for part in shape.parts:
            points = [dict(pt, **{part.var: r}) for pt in points for r in part.roots]
        return points
    return None


def _seed_boxes(shape: Shape, hull_box: Box) -> list[Box]:
    """Promising degenerate candidates: hull corners, centers, and ball
    axis extremes, all satisfying the constraint where applicable."""
    seeds: list[Box] = []
    items = hull_box.intervals
    if len(items) <= 4:
        import itertools
        for corner in itertools.product(*[((k, iv.lo), (k, iv.hi)) for k, iv in items]):
            seeds.append(Box.of({k: Interval(v, v) for k, v in corner}))
    center = {k: iv.lo + (iv.hi - iv.lo) / 2.0 for k, iv in items}
    seeds.append(Box.of({k: Interval(v, v) for k, v in center.items()}))
    if isinstance(shape, BallShape):
        for axis in shape.vars:
            for sign in (-1.0, 1.0):
                pt = {}
                for k, iv in items:
                    if k == axis:
                        v = iv.hi if sign > 0 else iv.lo
                    else:
                        v = 0.0
                    pt[k] = Interval(v, v)
                seeds.append(Box.of(pt))
    return seeds
