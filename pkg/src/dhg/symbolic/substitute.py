"""Capture-avoiding substitution of terms for variables in formulas.

Substitution is admissible only when no free variable of the
replacement gets captured by a binder and when the target variable is
not partially rebound inside a game; inadmissible cases raise
`SubstitutionError` naming the offending binder instead of silently
renaming.
"""

from __future__ import annotations

from ..syntax.ast import (
    Add, And, Assign, BoxF, Choice, Cmp, Const, Diamond, DiffGame, DiffVar,
    Div, Dual, Exists, Forall, Formula, HybridGame, Iff, Implies, Max, Min,
    Mul, Neg, Not, Or, Pow, RandomAssign, Repeat, Seq, Sqrt, Term, Test, Var,
    add, fand, forr, free_vars, mul, must_bound_vars, bound_vars,
)

__all__ = ["SubstitutionError", "substitute", "substitute_term", "rename_var"]


class SubstitutionError(ValueError):
    pass


def substitute_term(t: Term, mapping: dict) -> Term:
    """Simultaneous substitution of terms for variables in a term.

    mapping keys are VarKeys; differential symbols are distinct symbols
    and are never replaced.
    """
    if isinstance(t, Var):
        return mapping.get(t.key, t)
    if isinstance(t, (Const, DiffVar)):
        return t
    if isinstance(t, Neg):
        return Neg(substitute_term(t.arg, mapping))
    if isinstance(t, Add):
        return add(*[substitute_term(a, mapping) for a in t.args])
    if isinstance(t, Mul):
        return mul(*[substitute_term(a, mapping) for a in t.args])
    if isinstance(t, Pow):
        return Pow(substitute_term(t.base, mapping), t.exp)
    if isinstance(t, Div):
        return Div(substitute_term(t.num, mapping), substitute_term(t.den, mapping))
    if isinstance(t, Sqrt):
        return Sqrt(substitute_term(t.arg, mapping))
    if isinstance(t, Min):
        return Min(substitute_term(t.left, mapping), substitute_term(t.right, mapping))
    if isinstance(t, Max):
        return Max(substitute_term(t.left, mapping), substitute_term(t.right, mapping))
    raise TypeError(f"unexpected term {t!r}")


def substitute(f: Formula, var: Var, replacement: Term) -> Formula:
    """Replace every free occurrence of var in f by the replacement."""
    return _subst_formula(f, var.key, replacement, free_vars(replacement))


def _subst_formula(f: Formula, key, rep: Term, rep_fv: set) -> Formula:
    mapping = {key: rep}
    if isinstance(f, Cmp):
        return Cmp(f.op, substitute_term(f.left, mapping),
                   substitute_term(f.right, mapping))
    if isinstance(f, Not):
        return Not(_subst_formula(f.arg, key, rep, rep_fv))
    if isinstance(f, And):
        return fand(*[_subst_formula(a, key, rep, rep_fv) for a in f.args])
    if isinstance(f, Or):
        return forr(*[_subst_formula(a, key, rep, rep_fv) for a in f.args])
    if isinstance(f, Implies):
        return Implies(_subst_formula(f.left, key, rep, rep_fv),
                       _subst_formula(f.right, key, rep, rep_fv))
    if isinstance(f, Iff):
        return Iff(_subst_formula(f.left, key, rep, rep_fv),
                   _subst_formula(f.right, key, rep, rep_fv))
    if isinstance(f, (Exists, Forall)):
        if f.var.key == key:
            return f
        if key in free_vars(f.body) and f.var.key in rep_fv:
            raise SubstitutionError(
                f"substitution would capture {f.var.name} bound by the quantifier")
        return type(f)(f.var, _subst_formula(f.body, key, rep, rep_fv))
    if isinstance(f, (BoxF, Diamond)):
        game = _subst_game(f.game, key, rep, rep_fv)
        mbv = must_bound_vars(f.game)
        bv = bound_vars(f.game)
        body_free = key in free_vars(f.body)
        if key in mbv or not body_free:
            return type(f)(game, f.body)
        if key in bv:
            raise SubstitutionError(
                "target variable is bound on some but not all paths of the game")
        if bv & rep_fv:
            culprit = sorted(bv & rep_fv)[0][0]
            raise SubstitutionError(
                f"substitution would capture {culprit} bound by the game")
        return type(f)(game, _subst_formula(f.body, key, rep, rep_fv))
    raise TypeError(f"unexpected formula {f!r}")


def _subst_game(g: HybridGame, key, rep: Term, rep_fv: set) -> HybridGame:
    mapping = {key: rep}
    if isinstance(g, Assign):
        return Assign(g.var, substitute_term(g.rhs, mapping))
    if isinstance(g, RandomAssign):
        return g
    if isinstance(g, Test):
        return Test(_subst_formula(g.cond, key, rep, rep_fv))
    if isinstance(g, DiffGame):
        if key in {v.key for v in g.states}:
            if any(key in free_vars(t) for t in g.rhs):
                raise SubstitutionError(
                    "cannot substitute a differential game state variable")
            return g
        controls = {v.key for v in g.demon_vars} | {v.key for v in g.angel_vars}
        if key in controls:
            return g
        reads = set()
        for t in g.rhs:
            reads |= free_vars(t)
        if key in reads and controls & rep_fv:
            culprit = sorted(controls & rep_fv)[0][0]
            raise SubstitutionError(
                f"substitution would capture control variable {culprit}")
        return DiffGame(g.states,
                        tuple(substitute_term(t, mapping) for t in g.rhs),
                        g.demon_constraint, g.angel_constraint)
    if isinstance(g, Choice):
        return Choice(_subst_game(g.left, key, rep, rep_fv),
                      _subst_game(g.right, key, rep, rep_fv))
    if isinstance(g, Seq):
        left = _subst_game(g.left, key, rep, rep_fv)
        mbv = must_bound_vars(g.left)
        right_free = key in free_vars(g.right)
        if key in mbv or not right_free:
            return Seq(left, g.right)
        if key in bound_vars(g.left):
            raise SubstitutionError(
                "target variable is bound on some but not all paths of the game")
        if bound_vars(g.left) & rep_fv:
            culprit = sorted(bound_vars(g.left) & rep_fv)[0][0]
            raise SubstitutionError(
                f"substitution would capture {culprit} bound earlier in sequence")
        return Seq(left, _subst_game(g.right, key, rep, rep_fv))
    if isinstance(g, Repeat):
        if key in bound_vars(g.body) and key in free_vars(g.body):
            raise SubstitutionError(
                "target variable is read and written across loop iterations")
        return Repeat(_subst_game(g.body, key, rep, rep_fv))
    if isinstance(g, Dual):
        return Dual(_subst_game(g.body, key, rep, rep_fv))
    raise TypeError(f"unexpected game {g!r}")


def rename_var(f: Formula, old: Var, new: Var) -> Formula:
    """Rename a bound variable; the new name must be fresh in f."""
    if new.key in free_vars(f) | bound_vars(f):
        raise SubstitutionError(f"{new.name} is not fresh")

    def walk(node):
        if isinstance(node, (Exists, Forall)) and node.var.key == old.key:
            return type(node)(new, substitute(_strip(node.body), old, new))
        if isinstance(node, Cmp):
            return node
        if isinstance(node, Not):
            return Not(walk(node.arg))
        if isinstance(node, And):
            return fand(*[walk(a) for a in node.args])
        if isinstance(node, Or):
            return forr(*[walk(a) for a in node.args])
        if isinstance(node, Implies):
            return Implies(walk(node.left), walk(node.right))
        if isinstance(node, Iff):
            return Iff(walk(node.left), walk(node.right))
        if isinstance(node, (Exists, Forall)):
            return type(node)(node.var, walk(node.body))
        return node

    def _strip(b):
        return b

    return walk(f)
