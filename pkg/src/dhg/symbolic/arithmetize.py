"""Negation normal form and the min/max arithmetization of formulas.

An atomically open formula F (built from <, >, &, |) satisfies
F <-> value(F) > 0; an atomically closed one (<=, >=, =, &, |)
satisfies F <-> value(F) >= 0.  Mixed formulas are rejected rather than
approximated.
"""

from __future__ import annotations

from typing import NamedTuple

from ..syntax.ast import (
    And, BoxF, Cmp, Diamond, Exists, Forall, Formula, Iff, Implies, Max, Min,
    Not, Or, Term, fand, forr, sub,
)

__all__ = ["nnf", "arithmetize", "Arithmetization", "ArithmetizeError"]


class ArithmetizeError(ValueError):
    pass


_NEG_OP = {"<=": ">", "<": ">=", "=": "!=", "!=": "=", ">": "<=", ">=": "<"}


def nnf(f: Formula) -> Formula:
    """Negation normal form of a first-order formula: eliminates -> and
    <->, pushes negations to atoms (flipping comparisons)."""
    if isinstance(f, Cmp):
        return f
    if isinstance(f, And):
        return fand(*[nnf(a) for a in f.args])
    if isinstance(f, Or):
        return forr(*[nnf(a) for a in f.args])
    if isinstance(f, Implies):
        return forr(nnf(Not(f.left)), nnf(f.right))
    if isinstance(f, Iff):
        return fand(forr(nnf(Not(f.left)), nnf(f.right)),
                    forr(nnf(Not(f.right)), nnf(f.left)))
    if isinstance(f, Exists):
        return Exists(f.var, nnf(f.body))
    if isinstance(f, Forall):
        return Forall(f.var, nnf(f.body))
    if isinstance(f, Not):
        g = f.arg
        if isinstance(g, Cmp):
            return Cmp(_NEG_OP[g.op], g.left, g.right)
        if isinstance(g, Not):
            return nnf(g.arg)
        if isinstance(g, And):
            return forr(*[nnf(Not(a)) for a in g.args])
        if isinstance(g, Or):
            return fand(*[nnf(Not(a)) for a in g.args])
        if isinstance(g, Implies):
            return fand(nnf(g.left), nnf(Not(g.right)))
        if isinstance(g, Iff):
            return nnf(Not(fand(Implies(g.left, g.right), Implies(g.right, g.left))))
        if isinstance(g, Exists):
            return Forall(g.var, nnf(Not(g.body)))
        if isinstance(g, Forall):
            return Exists(g.var, nnf(Not(g.body)))
        raise ArithmetizeError(f"cannot normalize negation of {g!r}")
    if isinstance(f, (BoxF, Diamond)):
        raise ArithmetizeError("modal formulas have no negation normal form here")
    raise ArithmetizeError(f"cannot normalize {f!r}")


class Arithmetization(NamedTuple):
    term: Term
    mode: str  # "open": F <-> term > 0;  "closed": F <-> term >= 0


def arithmetize(f: Formula) -> Arithmetization:
    """Map a quantifier-free, modality-free, atomically open or closed
    formula to a mixed polynomial/min/max term encoding its truth."""
    mode = _atom_mode(f)
    return Arithmetization(_encode(f), mode)


def _atom_mode(f: Formula) -> str:
    strict = weak = False

    def scan(g: Formula):
        nonlocal strict, weak
        if isinstance(g, Cmp):
            if g.op in ("<", ">", "!="):
                strict = True
            else:
                weak = True
            return
        if isinstance(g, (And, Or)):
            for a in g.args:
                scan(a)
            return
        if isinstance(g, Not):
            raise ArithmetizeError(
                "negations must be pushed to atoms before arithmetization")
        if isinstance(g, (Implies, Iff)):
            raise ArithmetizeError(
                "-> and <-> must be eliminated before arithmetization")
        if isinstance(g, (Exists, Forall, BoxF, Diamond)):
            raise ArithmetizeError("formula must be quantifier- and modality-free")
        raise ArithmetizeError(f"cannot arithmetize {g!r}")

    scan(f)
    if strict and weak:
        raise ArithmetizeError(
            "formula mixes strict and weak atoms; neither open nor closed")
    return "open" if strict else "closed"


def _encode(f: Formula) -> Term:
    from .simplify import simplify

    if isinstance(f, Cmp):
        a, b = f.left, f.right
        if f.op in (">=", ">"):
            return simplify(sub(a, b))
        if f.op in ("<=", "<"):
            return simplify(sub(b, a))
        if f.op == "=":
            return Min(simplify(sub(a, b)), simplify(sub(b, a)))
        if f.op == "!=":
            return Max(simplify(sub(a, b)), simplify(sub(b, a)))
    if isinstance(f, And):
        out = _encode(f.args[0])
        for a in f.args[1:]:
            out = Min(out, _encode(a))
        return out
    if isinstance(f, Or):
        out = _encode(f.args[0])
        for a in f.args[1:]:
            out = Max(out, _encode(a))
        return out
    raise ArithmetizeError(f"cannot arithmetize {f!r}")
