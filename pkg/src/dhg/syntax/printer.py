"""Pretty-printer producing minimally parenthesized concrete syntax.

`parse(print_ast(a), kind)` is structurally the identity for every AST
the parser produces; hand-built ASTs re-parse to their canonical form
(constants folded, n-ary sums flattened).
"""

from __future__ import annotations

from fractions import Fraction

from .ast import (
    Add, And, Assign, BoxF, Choice, Cmp, Const, Diamond, DiffGame, DiffVar,
    Div, Dual, Exists, Forall, Formula, HybridGame, Iff, Implies, Max, Min,
    Mul, Neg, Not, Or, Pow, RandomAssign, Repeat, Seq, Sqrt, Term, Test, Var,
)

__all__ = ["print_ast", "print_term", "print_formula", "print_game"]

# term precedence levels
_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 10, 20, 30, 40, 50
# formula precedence levels
_F_IFF, _F_IMP, _F_OR, _F_AND, _F_NOT = 5, 8, 10, 14, 20
# game precedence levels
_G_CHOICE, _G_SEQ, _G_POST, _G_ATOM = 10, 20, 30, 40


def print_ast(node) -> str:
    if isinstance(node, Term):
        return print_term(node)
    if isinstance(node, Formula):
        return print_formula(node)
    if isinstance(node, HybridGame):
        return print_game(node)
    raise TypeError(f"cannot print {node!r}")


# ---------------------------------------------------------------------------


def print_term(t: Term, prec: int = 0) -> str:
    s, p = _term(t)
    return f"({s})" if p < prec else s


def _frac(q: Fraction) -> str:
    return str(q)


def _term(t: Term) -> tuple[str, int]:
    if isinstance(t, Const):
        if t.value < 0:
            return f"-{_frac(-t.value)}", _P_NEG
        return _frac(t.value), _P_ATOM
    if isinstance(t, Var):
        return _var_name(t), _P_ATOM
    if isinstance(t, DiffVar):
        return f"{_var_name(t)}'", _P_ATOM
    if isinstance(t, Neg):
        return f"-{print_term(t.arg, _P_NEG + 1)}", _P_NEG
    if isinstance(t, Add):
        if not t.args:
            return "0", _P_ATOM
        parts = [print_term(t.args[0], _P_ADD)]
        for a in t.args[1:]:
            if isinstance(a, Neg):
                parts.append(f" - {print_term(a.arg, _P_NEG + 1)}")
            elif isinstance(a, Const) and a.value < 0:
                parts.append(f" - {_frac(-a.value)}")
            elif isinstance(a, Mul) and isinstance(a.args[0], Const) and a.args[0].value < 0:
                flipped = Mul((Const(-a.args[0].value),) + a.args[1:])
                parts.append(f" - {print_term(flipped, _P_ADD + 1)}")
            else:
                parts.append(f" + {print_term(a, _P_ADD + 1)}")
        return "".join(parts), _P_ADD
    if isinstance(t, Mul):
        if not t.args:
            return "1", _P_ATOM
        args = t.args
        if len(args) > 1 and isinstance(args[0], Const):
            if args[0].value == 1:
                args = args[1:]
            elif args[0].value == -1:
                rest = args[1] if len(args) == 2 else Mul(args[1:])
                return f"-{print_term(rest, _P_NEG + 1)}", _P_NEG
        if len(args) == 1:
            return _term(args[0])
        first = print_term(args[0], _P_MUL)
        rest = [print_term(a, _P_MUL + 1) for a in args[1:]]
        return "*".join([first] + rest), _P_MUL
    if isinstance(t, Div):
        return f"{print_term(t.num, _P_MUL)}/{print_term(t.den, _P_MUL + 1)}", _P_MUL
    if isinstance(t, Pow):
        return f"{print_term(t.base, _P_ATOM)}^{t.exp}", _P_POW
    if isinstance(t, Min):
        return f"min({print_term(t.left)}, {print_term(t.right)})", _P_ATOM
    if isinstance(t, Max):
        return f"max({print_term(t.left)}, {print_term(t.right)})", _P_ATOM
    if isinstance(t, Sqrt):
        return f"sqrt({print_term(t.arg)})", _P_ATOM
    raise TypeError(f"cannot print term {t!r}")


def _var_name(v) -> str:
    return v.name if v.index is None else f"{v.name}{v.index}"


# ---------------------------------------------------------------------------


def print_formula(f: Formula, prec: int = 0) -> str:
    s, p = _formula(f)
    return f"({s})" if p < prec else s


def _formula(f: Formula) -> tuple[str, int]:
    if isinstance(f, Cmp):
        return f"{print_term(f.left)} {f.op} {print_term(f.right)}", _F_NOT
    if isinstance(f, Not):
        return f"!{print_formula(f.arg, _F_NOT)}", _F_NOT
    if isinstance(f, And):
        if not f.args:
            return "true", _F_NOT
        return " & ".join(print_formula(a, _F_AND + 1) for a in f.args), _F_AND
    if isinstance(f, Or):
        if not f.args:
            return "false", _F_NOT
        return " | ".join(print_formula(a, _F_OR + 1) for a in f.args), _F_OR
    if isinstance(f, Implies):
        return (f"{print_formula(f.left, _F_IMP + 1)} -> {print_formula(f.right, _F_IMP)}",
                _F_IMP)
    if isinstance(f, Iff):
        return (f"{print_formula(f.left, _F_IFF + 1)} <-> {print_formula(f.right, _F_IFF)}",
                _F_IFF)
    if isinstance(f, Exists):
        return f"exists {_var_name(f.var)} ({print_formula(f.body)})", _F_NOT
    if isinstance(f, Forall):
        return f"forall {_var_name(f.var)} ({print_formula(f.body)})", _F_NOT
    if isinstance(f, BoxF):
        return f"[{print_game(f.game)}] {print_formula(f.body, _F_NOT)}", _F_NOT
    if isinstance(f, Diamond):
        return f"<{print_game(f.game)}> {print_formula(f.body, _F_NOT)}", _F_NOT
    raise TypeError(f"cannot print formula {f!r}")


# ---------------------------------------------------------------------------


def print_game(g: HybridGame, prec: int = 0) -> str:
    s, p = _game(g)
    return f"({s})" if p < prec else s


def _game(g: HybridGame) -> tuple[str, int]:
    if isinstance(g, DiffGame):
        odes = ", ".join(
            f"{_var_name(v)}' = {print_term(t)}" for v, t in zip(g.states, g.rhs)
        )
        cons = ""
        if g.demon_constraint is not None and g.angel_constraint is not None:
            cons = (f" & {print_formula(g.demon_constraint)}"
                    f" d {print_formula(g.angel_constraint)}")
        elif g.demon_constraint is not None:
            cons = f" & {print_formula(g.demon_constraint)}"
        elif g.angel_constraint is not None:
            cons = f" & d {print_formula(g.angel_constraint)}"
        return f"{{{odes}{cons}}}", _G_ATOM
    if isinstance(g, Assign):
        # below _G_POST so `(x := 1)*` keeps its parentheses
        return f"{_var_name(g.var)} := {print_term(g.rhs)}", _G_POST - 5
    if isinstance(g, RandomAssign):
        return f"{_var_name(g.var)} := *", _G_POST - 5
    if isinstance(g, Test):
        return f"?({print_formula(g.cond)})", _G_ATOM
    if isinstance(g, Choice):
        return (f"{print_game(g.left, _G_CHOICE + 1)} ++ {print_game(g.right, _G_CHOICE)}",
                _G_CHOICE)
    if isinstance(g, Seq):
        return (f"{print_game(g.left, _G_SEQ + 1)}; {print_game(g.right, _G_SEQ)}",
                _G_SEQ)
    if isinstance(g, Repeat):
        return f"{print_game(g.body, _G_POST)}*", _G_POST
    if isinstance(g, Dual):
        return f"{print_game(g.body, _G_POST)}^d", _G_POST
    raise TypeError(f"cannot print game {g!r}")
