"""Proof-script checking and side-condition discharge.

Scripts run as a linear goal stack (indentation is visual grouping):
each step applies to the first open goal and pushes its subgoals in
order.  Side conditions are discharged through a pipeline:

  1. propositional closure,
  2. polynomial-identity check (absolute),
  3. universal prenexing + branch-and-bound on boxes, where bounds
     derived from recognized control-constraint guards are absolute and
     bounds taken from the declared regions downgrade the result to
     region-relative,
  4. built-in exists-forall witness search for uninstantiated premises,
  5. SMT-LIB export for whatever remains.

Proved requires every condition closed absolutely; any region-relative
discharge yields the distinct Proved-on-region verdict.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from ..arith.decide import (
    DEFAULT_BUDGET, UncoveredVariableError, Verdict, decide_forall,
    search_exists_forall,
)
from ..arith.interval import Box, Interval
from ..arith.smtlib import export_smtlib
from ..symbolic.poly import PolyError, poly_equal
from ..symbolic.shapes import recognize_shape, shape_hull
from ..syntax.ast import (
    And, Cmp, Exists, Forall, Formula, Implies, Not, Or, TRUE, Var, VarKey,
    conjuncts, fand, free_vars, subterms_of_kind,
)
from ..syntax.dhgfile import DhgFile, ProofStep
from ..syntax.printer import print_formula
from .goals import Goal, RuleError, SideCondition, prop_entails
from .rules import apply_rule

__all__ = ["BackendConfig", "CheckResult", "SideRecord", "check_proof"]


@dataclass
class BackendConfig:
    regions: dict[VarKey, tuple[Fraction, Fraction]] = field(default_factory=dict)
    budget: int = DEFAULT_BUDGET
    search_budget: int = 8000
    emit_smt_dir: Optional[str] = None
    file_stem: str = "goal"


@dataclass
class SideRecord:
    side: SideCondition
    status: str            # closed | exported | open | falsified
    method: str            # propositional | poly | interval | search | smt | ...
    region_relative: bool
    detail: str = ""

    def pretty(self) -> str:
        tag = {"closed": "ok", "exported": "smt", "open": "open",
               "falsified": "FALSIFIED"}[self.status]
        rel = " (on region)" if self.region_relative and self.status == "closed" else ""
        return (f"  [{tag}] line {self.side.step_line} {self.side.label} "
                f"via {self.method}{rel}"
                + (f": {self.detail}" if self.detail else ""))


@dataclass
class CheckResult:
    status: str                     # proved | proved-on-region | open | failed
    log: list[str]
    sides: list[SideRecord]
    open_goals: list[Goal]
    failure: str = ""

    @property
    def exit_code(self) -> int:
        return {"proved": 0, "proved-on-region": 2, "open": 3, "failed": 4}[self.status]

    def report(self) -> str:
        lines = list(self.log)
        for rec in self.sides:
            lines.append(rec.pretty())
        for g in self.open_goals:
            lines.append(f"  open goal: {g.pretty()}")
        if self.failure:
            lines.append(f"  FAILED: {self.failure}")
        lines.append(f"result: {self.status}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# prenexing universal quantifiers
# ---------------------------------------------------------------------------


class _PrenexFail(Exception):
    pass


def prenex_universals(f: Formula):
    """Pull universal quantifiers out through conjunctions and the right
    side of implications.  Returns (pulled vars, guard-hulls, matrix) or
    None when an existential (or an unpullable universal) remains.

    guard-hulls maps a pulled variable to an exact interval when its
    binder had the shape forall v (shape(v) -> body); certifying over
    that hull is sound absolutely because points outside it falsify the
    guard."""
    pulled: list[Var] = []
    hulls: dict[VarKey, tuple[Fraction, Fraction]] = {}
    outer_free = free_vars(f)

    def walk(g: Formula) -> Formula:
        if isinstance(g, Forall):
            chain = []
            while isinstance(g, Forall):
                v = g.var
                if any(p.key == v.key for p in pulled) or v.key in outer_free:
                    raise _PrenexFail("variable name collision while prenexing")
                pulled.append(v)
                chain.append(v)
                g = g.body
            if isinstance(g, Implies):
                chain_keys = {v.key for v in chain}
                own = [h for h in conjuncts(g.left)
                       if free_vars(h) and free_vars(h) <= chain_keys]
                if own:
                    shape = recognize_shape(fand(*own))
                    if shape is not None:
                        for k, hull in shape_hull(shape).items():
                            if k in chain_keys:
                                hulls[k] = hull
            return walk(g)
        if isinstance(g, And):
            return fand(*[walk(a) for a in g.args])
        if isinstance(g, Implies):
            if subterms_of_kind(g.left, (Forall, Exists)):
                raise _PrenexFail("quantifier in hypothesis")
            return Implies(g.left, walk(g.right))
        if subterms_of_kind(g, (Forall, Exists)):
            raise _PrenexFail("quantifier in an unpullable position")
        return g

    try:
        matrix = walk(f)
    except _PrenexFail:
        return None
    return pulled, hulls, matrix


# ---------------------------------------------------------------------------
# box assembly
# ---------------------------------------------------------------------------


def _assemble_box(keys, hulls, regions):
    """Box for the given variables; returns (box, relative_keys) or an
    error string when some variable has neither a guard hull nor a
    declared region."""
    mapping: dict[VarKey, Interval] = {}
    relative: list[VarKey] = []
    for k in sorted(keys, key=lambda k: (k[0], -1 if k[1] is None else k[1])):
        if k in hulls:
            lo, hi = hulls[k]
            mapping[k] = Interval.hull(lo, hi)
        elif k in regions:
            lo, hi = regions[k]
            mapping[k] = Interval.hull(lo, hi)
            relative.append(k)
        else:
            return None, f"no region declared for {k[0]}{'' if k[1] is None else k[1]}"
    return Box.of(mapping), relative


_TRUE = TRUE


def _reduce_matrix(f: Formula) -> Formula:
    """Sound validity-preserving pruning: polynomial identities, ground
    true atoms, and implications closed by the linear-combination
    certificate all reduce to true."""
    from ..arith.decide import combination_certificate
    from ..arith.interval import EvalError, eval_formula_exact

    if isinstance(f, Cmp):
        if f.op == "=":
            try:
                if poly_equal(f.left, f.right):
                    return _TRUE
            except PolyError:
                pass
        if not free_vars(f):
            try:
                if eval_formula_exact(f, {}):
                    return _TRUE
            except EvalError:
                pass
        return f
    if isinstance(f, And):
        parts = [_reduce_matrix(a) for a in f.args]
        parts = [p for p in parts if p != _TRUE]
        if not parts:
            return _TRUE
        return fand(*parts)
    if isinstance(f, Or):
        parts = [_reduce_matrix(a) for a in f.args]
        if any(p == _TRUE for p in parts):
            return _TRUE
        return Or(tuple(parts))
    if isinstance(f, Implies):
        right = _reduce_matrix(f.right)
        if right == _TRUE:
            return _TRUE
        if combination_certificate(f.left, right):
            return _TRUE
        return Implies(f.left, right)
    return f


# ---------------------------------------------------------------------------
# discharge
# ---------------------------------------------------------------------------


def _hyp_hulls(matrix: Formula, hulls: dict) -> None:
    """Absolute interval hulls for free variables pinned or bounded by
    top-level implication hypotheses: outside the hull the hypothesis
    conjunct is false and the implication holds vacuously."""
    if not isinstance(matrix, Implies):
        return
    hyps = conjuncts(matrix.left)
    keys = free_vars(matrix)
    for k in sorted(keys, key=lambda k: (k[0], -1 if k[1] is None else k[1])):
        if k in hulls:
            continue
        own = [h for h in hyps if free_vars(h) == {k}]
        if not own:
            continue
        shape = recognize_shape(fand(*own))
        if shape is None:
            continue
        hull = shape_hull(shape).get(k)
        if hull is not None:
            hulls[k] = hull


def discharge(side: SideCondition, cfg: BackendConfig, seq: int) -> SideRecord:
    f = side.formula
    if prop_entails([], f):
        return SideRecord(side, "closed", "propositional", False)

    pren = prenex_universals(f)
    if pren is not None:
        pulled, hulls, matrix = pren
        matrix = _reduce_matrix(matrix)
        if matrix == _TRUE:
            return SideRecord(side, "closed", "poly", False)
        _hyp_hulls(matrix, hulls)
        keys = free_vars(matrix)
        box, relative = _assemble_box(keys, hulls, cfg.regions)
        if box is None:
            return _export_or_open(side, cfg, seq, reason=relative)
        v = decide_forall(matrix, box, budget=cfg.budget)
        if v.is_valid:
            return SideRecord(side, "closed", "interval", bool(relative),
                              detail=f"{v.boxes_used} boxes"
                              + (f", region vars: "
                                 + ",".join(k[0] + ("" if k[1] is None else str(k[1]))
                                            for k in relative) if relative else ""))
        if v.is_falsified:
            return SideRecord(side, "falsified", "interval", False, detail=str(v))
        return _export_or_open(side, cfg, seq, reason=str(v))

    if side.search is not None:
        rec = _discharge_search(side, cfg)
        if rec is not None:
            return rec
    return _export_or_open(side, cfg, seq, reason="existential premise")


def _discharge_search(side: SideCondition, cfg: BackendConfig) -> Optional[SideRecord]:
    constraint, inner = side.search
    # refold the selected context around the inner body
    outer_hyps = []
    f = side.formula
    if isinstance(f, Implies):
        outer_hyps = conjuncts(f.left)
    pren = prenex_universals(inner)
    if pren is None:
        return None
    pulled, hulls, matrix = pren
    matrix = _reduce_matrix(matrix)
    if outer_hyps:
        matrix = Implies(fand(*outer_hyps), matrix)
    _hyp_hulls(matrix, hulls)
    keys = free_vars(matrix) - set(free_vars(constraint))
    box, relative = _assemble_box(keys, hulls, cfg.regions)
    if box is None:
        return None
    try:
        v = search_exists_forall(constraint, matrix, box, budget=cfg.search_budget)
    except UncoveredVariableError:
        return None
    if v.is_valid:
        return SideRecord(side, "closed", "search", bool(relative),
                          detail=f"witness box {v.witness_box}")
    return None


def _export_or_open(side: SideCondition, cfg: BackendConfig, seq: int,
                    reason) -> SideRecord:
    if cfg.emit_smt_dir:
        path = Path(cfg.emit_smt_dir)
        path.mkdir(parents=True, exist_ok=True)
        name = f"{cfg.file_stem}_{side.step_line:04d}_{seq:02d}_{_slug(side.label)}.smt2"
        target = path / name
        target.write_text(
            export_smtlib(side.formula,
                          comment=f"{side.label} (line {side.step_line})"),
            encoding="utf-8")
        return SideRecord(side, "exported", "smt", False, detail=str(target))
    return SideRecord(side, "open", "none", False, detail=str(reason))


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "-", label).strip("-").lower()


# ---------------------------------------------------------------------------
# script execution
# ---------------------------------------------------------------------------


def _flatten(steps: list[ProofStep]) -> list[ProofStep]:
    out = []
    for s in steps:
        out.append(s)
        out.extend(_flatten(s.children))
    return out


def check_proof(dhg: DhgFile, cfg: Optional[BackendConfig] = None) -> CheckResult:
    """Run the proof script of a .dhg file and discharge all resulting
    side conditions."""
    if cfg is None:
        cfg = BackendConfig()
    if not cfg.regions:
        cfg.regions = dict(dhg.regions)
    cfg.file_stem = Path(dhg.path).stem if dhg.path != "<string>" else cfg.file_stem

    log: list[str] = []
    sides: list[SideCondition] = []
    stack: deque[Goal] = deque([Goal((), dhg.goal)])

    for step in _flatten(dhg.steps):
        if not stack:
            return CheckResult("failed", log, [], [],
                               failure=f"line {step.line}: no open goal for "
                                       f"rule {step.rule}")
        goal = stack.popleft()
        try:
            subgoals, new_sides, note = apply_rule(goal, step)
        except RuleError as e:
            return CheckResult("failed", log, [], [goal],
                               failure=f"line {step.line}: {e}")
        log.append(f"line {step.line}: {step.rule} -> {note}"
                   + (f", {len(subgoals)} subgoal(s)" if subgoals else ""))
        sides.extend(new_sides)
        stack.extendleft(reversed(subgoals))

    open_goals = list(stack)

    records: list[SideRecord] = []
    failed = None
    for i, side in enumerate(sides):
        rec = discharge(side, cfg, i)
        records.append(rec)
        if rec.status == "falsified" and failed is None:
            failed = (f"line {side.step_line}: side condition {side.label} "
                      f"is falsified ({rec.detail})")

    if failed:
        return CheckResult("failed", log, records, open_goals, failure=failed)
    if open_goals or any(r.status in ("open", "exported") for r in records):
        return CheckResult("open", log, records, open_goals)
    if any(r.region_relative for r in records):
        return CheckResult("proved-on-region", log, records, [])
    return CheckResult("proved", log, records, [])
