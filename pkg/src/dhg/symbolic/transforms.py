"""Game transformations and the static well-definedness check.

freeze_transform gives Angel an extra factor c in [0,1] multiplying the
dynamics, absorbing her early-stopping power into a control choice.
domain_encode builds the dual freezing game that confines a differential
game to an evolution domain:

    t := x0; {x' = b*f, t' = 1 & Y and b in [0,1] d Z}; ?Q; ?(x0 = t)^d

where x0 is a deterministic clock inside the game (added when absent)
and Demon's freeze factor b lets him challenge Angel for leaving Q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..syntax.ast import (
    Cmp, Const, DiffGame, Dual, Formula, HybridGame, Seq, Test, Var, fand,
    free_vars, bound_vars, fresh_var, is_core_term, mul, subterms_of_kind,
    Diamond, BoxF, Min, Max, Assign,
)
from .shapes import recognize_shape

__all__ = ["freeze_transform", "domain_encode", "DomainEncoding",
           "well_definedness", "WellDefinednessReport"]


def _interval01(v: Var) -> Formula:
    return fand(Cmp("<=", Const(Fraction(0)), v), Cmp("<=", v, Const(Fraction(1))))


def _all_keys(g: DiffGame) -> set:
    keys = free_vars(g) | bound_vars(g)
    for cons in (g.demon_constraint, g.angel_constraint):
        if cons is not None:
            keys |= free_vars(cons)
    return keys


def freeze_transform(g: DiffGame) -> DiffGame:
    """{x' = c*f & Y d Z and c in [0,1]} with c a fresh Angel control."""
    c = fresh_var("c", _all_keys(g))
    angel = _interval01(c) if g.angel_constraint is None \
        else fand(g.angel_constraint, _interval01(c))
    return DiffGame(g.states, tuple(mul(c, t) for t in g.rhs),
                    g.demon_constraint, angel)


@dataclass(frozen=True)
class DomainEncoding:
    game: HybridGame
    clock_added: bool
    clock: Var


def domain_encode(g: DiffGame, q: Formula) -> DomainEncoding:
    """Encode evolution within domain q via the dual freezing game."""
    if subterms_of_kind(q, (Diamond, BoxF)):
        raise ValueError("evolution domain must not contain game modalities")
    clock = None
    for v, rhs in zip(g.states, g.rhs):
        if rhs == Const(Fraction(1)):
            clock = v
            break
    states = list(g.states)
    rhs = list(g.rhs)
    clock_added = False
    taken = _all_keys(g) | free_vars(q)
    if clock is None:
        clock = fresh_var("x0", taken)
        taken.add(clock.key)
        states.append(clock)
        rhs.append(Const(Fraction(1)))
        clock_added = True
    b = fresh_var("b", taken)
    taken.add(b.key)
    t = fresh_var("t", taken)
    demon = _interval01(b) if g.demon_constraint is None \
        else fand(g.demon_constraint, _interval01(b))
    from .simplify import simplify
    frozen = DiffGame(
        tuple(states) + (t,),
        tuple(simplify(mul(b, f)) for f in rhs) + (Const(Fraction(1)),),
        demon, g.angel_constraint)
    encoded = Seq(Assign(t, clock),
                  Seq(frozen,
                      Seq(Test(q), Dual(Test(Cmp("=", clock, t))))))
    return DomainEncoding(encoded, clock_added, clock)


@dataclass(frozen=True)
class WellDefinednessReport:
    warnings: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.warnings


def well_definedness(g: DiffGame) -> WellDefinednessReport:
    """Static check that the differential game is well defined: control
    sets of recognized compact shapes and right-hand sides continuous
    and bounded on compacts (polynomial, possibly clamped by min/max).

    Unrecognized constraint shapes yield warnings, never acceptance.
    """
    warnings: list[str] = []
    for label, cons in (("Demon", g.demon_constraint), ("Angel", g.angel_constraint)):
        if cons is None:
            continue
        if recognize_shape(cons) is None:
            warnings.append(
                f"{label} control set {_short(cons)} is not a recognized "
                "compact shape (interval bounds, balls, bounded varieties)")
    for v, t in zip(g.states, g.rhs):
        if not is_core_term(t):
            warnings.append(
                f"right-hand side for {v.name}' contains division or sqrt; "
                "boundedness on compacts not guaranteed")
    return WellDefinednessReport(tuple(warnings))


def _short(f: Formula) -> str:
    from ..syntax.printer import print_formula
    s = print_formula(f)
    return s if len(s) <= 40 else s[:37] + "..."
