"""Goals, side conditions, and propositional bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..arith.interval import EvalError, eval_formula_exact
from ..syntax.ast import (
    And, BoxF, Cmp, Diamond, Exists, Forall, Formula, Implies, Not, Or,
    conjuncts, free_vars, subterms_of_kind,
)

__all__ = ["Goal", "SideCondition", "RuleError", "prop_entails", "fo_context"]


class RuleError(ValueError):
    """Rule/goal mismatch or ill-formed rule arguments."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(message)


@dataclass(frozen=True)
class Goal:
    """Sequent-style goal: named assumptions and a formula to prove."""

    context: tuple[Formula, ...]
    formula: Formula

    def pretty(self) -> str:
        from ..syntax.printer import print_formula
        if not self.context:
            return f"|- {print_formula(self.formula)}"
        hyps = ";  ".join(f"h{i}: {print_formula(h)}" for i, h in enumerate(self.context))
        return f"{hyps}  |-  {print_formula(self.formula)}"


@dataclass
class SideCondition:
    """An arithmetic obligation produced by a rule application."""

    label: str
    kind: str                 # premise | constraint | definedness | leaf | monotone
    formula: Formula          # folded with the selected context
    step_line: int
    # uninstantiated exists-forall premises carry the search structure
    search: Optional[tuple[Formula, Formula]] = None  # (constraint Y, inner body)
    note: str = ""


def fo_context(context: tuple[Formula, ...]) -> list[Formula]:
    """Context entries usable in arithmetic side conditions: first-order
    (no modalities) and quantifier-free."""
    out = []
    for h in context:
        if subterms_of_kind(h, (BoxF, Diamond, Exists, Forall)):
            continue
        out.append(h)
    return out


def _ground_true(f: Formula) -> bool:
    if free_vars(f):
        return False
    try:
        return eval_formula_exact(f, {})
    except EvalError:
        return False


def prop_entails(hyps: list[Formula], f: Formula, depth: int = 6) -> bool:
    """Cheap propositional entailment: structural membership plus
    and/or/implies decomposition and case splits on disjunctive
    hypotheses.  Sound, deliberately incomplete."""
    if depth <= 0:
        return False
    flat: list[Formula] = []
    for h in hyps:
        flat.extend(conjuncts(h))
    if f in flat:
        return True
    if isinstance(f, And):
        return all(prop_entails(flat, a, depth - 1) for a in f.args)
    if isinstance(f, Implies):
        return prop_entails(flat + conjuncts(f.left), f.right, depth - 1)
    if isinstance(f, Or):
        if any(prop_entails(flat, a, depth - 1) for a in f.args):
            return True
    if isinstance(f, Cmp) and _ground_true(f):
        return True
    for i, h in enumerate(flat):
        if isinstance(h, Or):
            rest = flat[:i] + flat[i + 1:]
            if all(prop_entails(rest + [d], f, depth - 1) for d in h.args):
                return True
    return False
