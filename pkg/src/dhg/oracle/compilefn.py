"""Compilation of terms and formulas to numpy-vectorized callables.

The oracle's hot paths (grid payoffs, trajectory right-hand sides,
rollout monitors) evaluate compiled closures instead of walking the
AST.  Generated code uses only arithmetic, numpy ufuncs, and the
environment arrays, and is deterministic.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..syntax.ast import (
    Add, And, Cmp, Const, DiffVar, Div, Formula, Iff, Implies, Max, Min, Mul,
    Neg, Not, Or, Pow, Sqrt, Term, Var, VarKey, free_vars,
)

__all__ = ["compile_term", "compile_formula", "formula_holds_float"]


def _name_of(key: VarKey, names: dict) -> str:
    if key not in names:
        names[key] = f"v{len(names)}"
    return names[key]


def _emit(t: Term, names: dict) -> str:
    if isinstance(t, Const):
        return repr(float(t.value))
    if isinstance(t, (Var, DiffVar)):
        return _name_of(t.key, names)
    if isinstance(t, Neg):
        return f"(-{_emit(t.arg, names)})"
    if isinstance(t, Add):
        if not t.args:
            return "0.0"
        return "(" + " + ".join(_emit(a, names) for a in t.args) + ")"
    if isinstance(t, Mul):
        if not t.args:
            return "1.0"
        return "(" + " * ".join(_emit(a, names) for a in t.args) + ")"
    if isinstance(t, Pow):
        return f"({_emit(t.base, names)} ** {t.exp})"
    if isinstance(t, Div):
        return f"({_emit(t.num, names)} / {_emit(t.den, names)})"
    if isinstance(t, Sqrt):
        return f"np.sqrt({_emit(t.arg, names)})"
    if isinstance(t, Min):
        return f"np.minimum({_emit(t.left, names)}, {_emit(t.right, names)})"
    if isinstance(t, Max):
        return f"np.maximum({_emit(t.left, names)}, {_emit(t.right, names)})"
    raise TypeError(f"cannot compile {t!r}")


def compile_term(t: Term):
    """Compile a term to fn(env: dict[VarKey, array-or-float]) -> value."""
    names: dict[VarKey, str] = {}
    body = _emit(t, names)
    keys = list(names)
    args = ", ".join(names[k] for k in keys)
    src = f"lambda {args}: {body}" if keys else f"lambda: {body}"
    fn = eval(src, {"np": np})  # noqa: S307 - source generated above

    def call(env):
        return fn(*[env[k] for k in keys])

    call.keys = tuple(keys)  # type: ignore[attr-defined]
    call.source = src        # type: ignore[attr-defined]
    return call


_CMP_EMIT = {"<=": "<=", "<": "<", "=": "==", "!=": "!=", ">": ">", ">=": ">="}


def _emit_formula(f: Formula, names: dict) -> str:
    if isinstance(f, Cmp):
        return f"({_emit(f.left, names)} {_CMP_EMIT[f.op]} {_emit(f.right, names)})"
    if isinstance(f, Not):
        return f"(~{_emit_formula(f.arg, names)})"
    if isinstance(f, And):
        if not f.args:
            return "(T)"
        return "(" + " & ".join(_emit_formula(a, names) for a in f.args) + ")"
    if isinstance(f, Or):
        if not f.args:
            return "(~T)"
        return "(" + " | ".join(_emit_formula(a, names) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"(~{_emit_formula(f.left, names)} | {_emit_formula(f.right, names)})"
    if isinstance(f, Iff):
        return f"({_emit_formula(f.left, names)} == {_emit_formula(f.right, names)})"
    raise TypeError(f"cannot compile {f!r}")


def compile_formula(f: Formula):
    """Compile a quantifier-free formula to a boolean evaluator; scalar
    inputs yield numpy bools, array inputs vectorize."""
    names: dict[VarKey, str] = {}
    body = _emit_formula(f, names)
    keys = list(names)
    args = ", ".join(names[k] for k in keys)
    src = f"lambda {args}: {body}" if keys else f"lambda: {body}"
    fn = eval(src, {"np": np, "T": np.True_})  # noqa: S307

    def call(env):
        return fn(*[env[k] for k in keys])

    call.keys = tuple(keys)  # type: ignore[attr-defined]
    return call


def formula_holds_float(f: Formula, env: dict[VarKey, float], tol: float = 0.0) -> bool:
    """Float check of a formula with a slack tolerance on comparisons
    (weak semantics: a <= b passes when a <= b + tol)."""
    from ..arith.interval import eval_term_exact  # noqa: F401  (kept symmetric)

    if isinstance(f, Cmp):
        a = _eval_float(f.left, env)
        b = _eval_float(f.right, env)
        if f.op == "<=":
            return a <= b + tol
        if f.op == "<":
            return a < b + tol
        if f.op == ">=":
            return a >= b - tol
        if f.op == ">":
            return a > b - tol
        if f.op == "=":
            return abs(a - b) <= tol
        return abs(a - b) > tol
    if isinstance(f, Not):
        return not formula_holds_float(f.arg, env, tol)
    if isinstance(f, And):
        return all(formula_holds_float(a, env, tol) for a in f.args)
    if isinstance(f, Or):
        return any(formula_holds_float(a, env, tol) for a in f.args)
    if isinstance(f, Implies):
        return (not formula_holds_float(f.left, env, tol)) \
            or formula_holds_float(f.right, env, tol)
    if isinstance(f, Iff):
        return formula_holds_float(f.left, env, tol) == \
            formula_holds_float(f.right, env, tol)
    raise TypeError(f"cannot evaluate {f!r}")


def _eval_float(t: Term, env: dict[VarKey, float]) -> float:
    if isinstance(t, Const):
        return float(t.value)
    if isinstance(t, (Var, DiffVar)):
        return float(env[t.key])
    if isinstance(t, Neg):
        return -_eval_float(t.arg, env)
    if isinstance(t, Add):
        return sum(_eval_float(a, env) for a in t.args)
    if isinstance(t, Mul):
        out = 1.0
        for a in t.args:
            out *= _eval_float(a, env)
        return out
    if isinstance(t, Pow):
        return _eval_float(t.base, env) ** t.exp
    if isinstance(t, Div):
        return _eval_float(t.num, env) / _eval_float(t.den, env)
    if isinstance(t, Sqrt):
        return math.sqrt(max(0.0, _eval_float(t.arg, env)))
    if isinstance(t, Min):
        return min(_eval_float(t.left, env), _eval_float(t.right, env))
    if isinstance(t, Max):
        return max(_eval_float(t.left, env), _eval_float(t.right, env))
    raise TypeError(f"cannot evaluate {t!r}")
