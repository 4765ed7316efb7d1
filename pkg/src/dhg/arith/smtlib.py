"""SMT-LIB 2 export of validity queries over nonlinear real arithmetic.

The script asserts the negation of the formula, so `unsat` from an
external solver certifies validity.  min/max lower to ite; sqrt(a)
lowers to a fresh variable s with s >= 0 and s^2 = a; natural powers
expand to products.  Output is deterministic, suitable for golden-file
comparison.
"""

from __future__ import annotations

from fractions import Fraction

from ..syntax.ast import (
    Add, And, BoxF, Cmp, Const, Diamond, DiffVar, Div, Exists, Forall,
    Formula, Iff, Implies, Max, Min, Mul, Neg, Not, Or, Pow, Sqrt, Term, Var,
    free_vars,
)

__all__ = ["export_smtlib"]


class _Lowering:
    def __init__(self):
        self.sqrt_defs: list[tuple[str, str]] = []  # (name, arg sexpr)
        self.counter = 0

    def fresh_sqrt(self, arg_sexpr: str) -> str:
        name = f"sqrt.{self.counter}"
        self.counter += 1
        self.sqrt_defs.append((name, arg_sexpr))
        return name


def _rat(q: Fraction) -> str:
    if q < 0:
        return f"(- {_rat(-q)})"
    if q.denominator == 1:
        return f"{q.numerator}.0"
    return f"(/ {q.numerator}.0 {q.denominator}.0)"


def _name(v) -> str:
    base = v.name.replace("$", "_")
    return base if v.index is None else f"{base}{v.index}"


def _term(t: Term, low: _Lowering) -> str:
    if isinstance(t, Const):
        return _rat(t.value)
    if isinstance(t, Var):
        return _name(t)
    if isinstance(t, DiffVar):
        raise ValueError("differential symbols cannot be exported; substitute first")
    if isinstance(t, Neg):
        return f"(- {_term(t.arg, low)})"
    if isinstance(t, Add):
        if not t.args:
            return "0.0"
        if len(t.args) == 1:
            return _term(t.args[0], low)
        return "(+ " + " ".join(_term(a, low) for a in t.args) + ")"
    if isinstance(t, Mul):
        if not t.args:
            return "1.0"
        if len(t.args) == 1:
            return _term(t.args[0], low)
        return "(* " + " ".join(_term(a, low) for a in t.args) + ")"
    if isinstance(t, Pow):
        base = _term(t.base, low)
        return "(* " + " ".join([base] * t.exp) + ")" if t.exp > 1 else base
    if isinstance(t, Div):
        return f"(/ {_term(t.num, low)} {_term(t.den, low)})"
    if isinstance(t, Sqrt):
        return low.fresh_sqrt(_term(t.arg, low))
    if isinstance(t, Min):
        a, b = _term(t.left, low), _term(t.right, low)
        return f"(ite (<= {a} {b}) {a} {b})"
    if isinstance(t, Max):
        a, b = _term(t.left, low), _term(t.right, low)
        return f"(ite (>= {a} {b}) {a} {b})"
    raise TypeError(f"cannot export {t!r}")


_OPS = {"<=": "<=", "<": "<", "=": "=", ">": ">", ">=": ">="}


def _formula(f: Formula, low: _Lowering) -> str:
    if isinstance(f, Cmp):
        if f.op == "!=":
            return f"(not (= {_term(f.left, low)} {_term(f.right, low)}))"
        return f"({_OPS[f.op]} {_term(f.left, low)} {_term(f.right, low)})"
    if isinstance(f, Not):
        return f"(not {_formula(f.arg, low)})"
    if isinstance(f, And):
        if not f.args:
            return "true"
        return "(and " + " ".join(_formula(a, low) for a in f.args) + ")"
    if isinstance(f, Or):
        if not f.args:
            return "false"
        return "(or " + " ".join(_formula(a, low) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"(=> {_formula(f.left, low)} {_formula(f.right, low)})"
    if isinstance(f, Iff):
        return f"(= {_formula(f.left, low)} {_formula(f.right, low)})"
    if isinstance(f, Forall):
        return f"(forall (({_name(f.var)} Real)) {_formula(f.body, low)})"
    if isinstance(f, Exists):
        return f"(exists (({_name(f.var)} Real)) {_formula(f.body, low)})"
    if isinstance(f, (BoxF, Diamond)):
        raise ValueError("modal formulas cannot be exported to SMT-LIB")
    raise TypeError(f"cannot export {f!r}")


def export_smtlib(f: Formula, logic: str = "NRA", comment: str = "") -> str:
    """SMT-LIB 2 script whose unsatisfiability certifies validity of f."""
    low = _Lowering()
    body = _formula(f, low)
    lines = []
    if comment:
        for c in comment.splitlines():
            lines.append(f"; {c}")
    lines.append(f"(set-logic {logic})")
    keys = sorted(free_vars(f), key=lambda k: (k[0], -1 if k[1] is None else k[1]))
    for k in keys:
        lines.append(f"(declare-const {_name(Var(k[0], k[1]))} Real)")
    for name, arg in low.sqrt_defs:
        lines.append(f"(declare-const {name} Real)")
        lines.append(f"(assert (>= {name} 0.0))")
        lines.append(f"(assert (= (* {name} {name}) {arg}))")
    lines.append(f"(assert (not {body}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
