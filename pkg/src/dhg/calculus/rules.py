"""The proof rules: differential game invariants/variants/refinements
plus the hybrid-game axioms, as goal transformers.

apply_rule consumes a goal and produces subgoals plus arithmetic side
conditions.  The three differential-game rules emit their premise as a
side condition, instantiated with the supplied witness terms where
given; witness divisions and square roots generate definedness side
conditions discharged like any other.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..symbolic.arithmetize import ArithmetizeError, arithmetize, nnf
from ..symbolic.derive import (
    DeriveError, derive_formula, derive_term, lie_substitute,
    lie_substitute_term, time_derivative,
)
from ..symbolic.poly import PolyError, poly_equal
from ..symbolic.simplify import simplify
from ..symbolic.substitute import SubstitutionError, substitute, substitute_term
from ..symbolic.transforms import well_definedness
from ..syntax.ast import (
    And, Assign, BoxF, Choice, Cmp, Const, Diamond, DiffGame, Div, Dual,
    Exists, Forall, Formula, Iff, Implies, Not, Or, RandomAssign, Repeat,
    Seq, Sqrt, Term, Test, Var, VarKey, conjuncts, fand, forr, free_vars,
    sub, subterms_of_kind,
)
from ..syntax.dhgfile import ProofStep
from ..syntax.printer import print_formula
from .goals import Goal, RuleError, SideCondition, fo_context, prop_entails

__all__ = ["apply_rule", "dgi_premise", "dgv_premise", "dgr_premise",
           "definedness_conditions"]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _subst_fo(f: Formula, mapping: dict[VarKey, Term]) -> Formula:
    """Simultaneous term substitution through a first-order formula.
    Errors if a binder captures or shadows a substituted variable."""
    if isinstance(f, Cmp):
        return Cmp(f.op, substitute_term(f.left, mapping),
                   substitute_term(f.right, mapping))
    if isinstance(f, Not):
        return Not(_subst_fo(f.arg, mapping))
    if isinstance(f, And):
        return fand(*[_subst_fo(a, mapping) for a in f.args])
    if isinstance(f, Or):
        return forr(*[_subst_fo(a, mapping) for a in f.args])
    if isinstance(f, Implies):
        return Implies(_subst_fo(f.left, mapping), _subst_fo(f.right, mapping))
    if isinstance(f, Iff):
        return Iff(_subst_fo(f.left, mapping), _subst_fo(f.right, mapping))
    if isinstance(f, (Exists, Forall)):
        if f.var.key in mapping:
            raise SubstitutionError(f"{f.var.name} is shadowed by a quantifier")
        for t in mapping.values():
            if f.var.key in free_vars(t):
                raise SubstitutionError(f"substitution would capture {f.var.name}")
        return type(f)(f.var, _subst_fo(f.body, mapping))
    raise SubstitutionError(f"cannot substitute into {type(f).__name__}")


def definedness_conditions(node) -> list[Formula]:
    """sqrt arguments nonnegative; denominators nonzero."""
    out: list[Formula] = []
    seen = set()
    for s in subterms_of_kind(node, Sqrt):
        c = Cmp(">=", s.arg, Const(Fraction(0)))
        if c not in seen:
            seen.add(c)
            out.append(c)
    for d in subterms_of_kind(node, Div):
        c = Cmp("!=", d.den, Const(Fraction(0)))
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def _forall_chain(vars_, guard: Optional[Formula], body: Formula) -> Formula:
    f = Implies(guard, body) if guard is not None else body
    for v in reversed(tuple(vars_)):
        f = Forall(v, f)
    return f


def _exists_chain(vars_, guard: Optional[Formula], body: Formula) -> Formula:
    f = fand(guard, body) if guard is not None else body
    for v in reversed(tuple(vars_)):
        f = Exists(v, f)
    return f


def _require_wd(g: DiffGame, rule: str, line: int):
    report = well_definedness(g)
    if not report.ok:
        raise RuleError(
            f"{rule}: differential game fails the well-definedness check: "
            + "; ".join(report.warnings), line)


def _select_context(goal: Goal, use: Optional[list[Formula]], line: int) -> list[Formula]:
    if use is None:
        return fo_context(goal.context)
    out = []
    for f in use:
        if f not in goal.context:
            raise RuleError(
                f"use-clause formula {print_formula(f)} is not in the context", line)
        out.append(f)
    return out


def _fold(hyps: list[Formula], body: Formula) -> Formula:
    hyps = [h for h in hyps if h != Cmp("=", Const(Fraction(0)), Const(Fraction(0)))]
    if not hyps:
        return body
    return Implies(fand(*hyps), body)


def _normalize_inv(f: Formula, rule: str, line: int) -> Formula:
    try:
        g = nnf(f)
        arithmetize(g)  # mode check: rejects mixed strict/weak atoms
        return g
    except ArithmetizeError as e:
        raise RuleError(f"{rule}: {e}", line) from None


# ---------------------------------------------------------------------------
# differential game rule premises (display form)
# ---------------------------------------------------------------------------


def _lie_core(f_normalized: Formula, g: DiffGame, rule: str, line: int) -> Formula:
    bindings = {v.key: rhs for v, rhs in zip(g.states, g.rhs)}
    try:
        derived = derive_formula(f_normalized)
        raw = lie_substitute(derived, bindings)
        return raw
    except DeriveError as e:
        raise RuleError(f"{rule}: {e}", line) from None


def dgi_premise(f: Formula, g: DiffGame, line: int = 0) -> Formula:
    """Exists y in Y, forall z in Z: the Lie derivative of F holds along
    x' = f(x,y,z).  The implicit forall over states is left free."""
    _require_wd(g, "DGI", line)
    fn = _normalize_inv(f, "DGI", line)
    core = _lie_core(fn, g, "DGI", line)
    inner = _forall_chain(g.angel_vars, g.angel_constraint, core)
    return _exists_chain(g.demon_vars, g.demon_constraint, inner)


def dgv_premise(g_term: Term, g: DiffGame, line: int = 0,
                eps: Optional[Term] = None) -> Formula:
    """Exists eps>0 forall x exists z in Z forall y in Y:
    g <= 0 -> Lie derivative of g >= eps."""
    _require_wd(g, "DGV", line)
    try:
        lie = lie_substitute_term(
            derive_term(g_term),
            {v.key: rhs for v, rhs in zip(g.states, g.rhs)})
    except DeriveError as e:
        raise RuleError(f"DGV: {e}", line) from None
    eps_var = Var("$eps")
    eps_term: Term = eps if eps is not None else eps_var
    body = Implies(Cmp("<=", g_term, Const(Fraction(0))),
                   Cmp(">=", lie, eps_term))
    inner = _forall_chain(g.demon_vars, g.demon_constraint, body)
    mid = _exists_chain(g.angel_vars, g.angel_constraint, inner)
    quantified = _forall_chain(g.states, None, mid)
    if eps is not None:
        return quantified
    return Exists(eps_var, fand(Cmp(">", eps_var, Const(Fraction(0))), quantified))


def dgr_premise(succedent: DiffGame, antecedent: DiffGame, line: int = 0) -> Formula:
    """forall u in U exists y in Y forall z in Z exists v in V forall x:
    f(x,y,z) = g(x,u,v), aligning the succedent game f with the
    antecedent game g."""
    if succedent.states != antecedent.states:
        raise RuleError("DGR: the two games have different state variables", line)
    clash = ({v.key for v in succedent.demon_vars} | {v.key for v in succedent.angel_vars}) \
        & ({v.key for v in antecedent.demon_vars} | {v.key for v in antecedent.angel_vars})
    if clash:
        raise RuleError(
            f"DGR: control variable {sorted(clash)[0][0]} occurs in both games; "
            "rename one side", line)
    eqs = fand(*[Cmp("=", simplify(fs), simplify(gs))
                 for fs, gs in zip(succedent.rhs, antecedent.rhs)])
    inner = _forall_chain(succedent.states, None, eqs)
    level_v = _exists_chain(antecedent.angel_vars, antecedent.angel_constraint, inner)
    level_z = _forall_chain(succedent.angel_vars, succedent.angel_constraint, level_v)
    level_y = _exists_chain(succedent.demon_vars, succedent.demon_constraint, level_z)
    return _forall_chain(antecedent.demon_vars, antecedent.demon_constraint, level_y)


# ---------------------------------------------------------------------------
# rule application
# ---------------------------------------------------------------------------


def apply_rule(goal: Goal, step: ProofStep):
    """Apply one proof step; returns (subgoals, side conditions, note)."""
    rule = step.rule
    handler = _HANDLERS.get(rule)
    if handler is None:
        raise RuleError(f"unknown rule {rule!r}", step.line)
    return handler(goal, step)


def _rule_intro(goal: Goal, step: ProofStep):
    f = goal.formula
    if not isinstance(f, Implies):
        raise RuleError("intro needs an implication goal", step.line)
    ctx = goal.context + tuple(conjuncts(f.left))
    return [Goal(ctx, f.right)], [], "moved antecedent into context"


def _rule_cases(goal: Goal, step: ProofStep):
    d = step.args.formula
    if d is None:
        raise RuleError("cases needs a disjunction argument", step.line)
    if not isinstance(d, Or):
        raise RuleError("cases argument must be a disjunction", step.line)
    if d not in goal.context:
        raise RuleError("cases argument is not a context assumption", step.line)
    subgoals = []
    for disjunct in d.args:
        ctx = tuple(disjunct if h == d else h for h in goal.context)
        subgoals.append(Goal(ctx, goal.formula))
    return subgoals, [], f"split into {len(subgoals)} cases"


def _modality(goal: Goal, step: ProofStep, kinds=(BoxF, Diamond)):
    f = goal.formula
    if not isinstance(f, kinds):
        raise RuleError(f"{step.rule}: goal is not a modal formula", step.line)
    return f


def _rule_test(goal: Goal, step: ProofStep):
    f = _modality(goal, step)
    if not isinstance(f.game, Test):
        raise RuleError("test: game is not a test", step.line)
    if isinstance(f, BoxF):
        return [Goal(goal.context, Implies(f.game.cond, f.body))], [], "[?]"
    return [Goal(goal.context, fand(f.game.cond, f.body))], [], "<?>"


def _rule_choice(goal: Goal, step: ProofStep):
    f = _modality(goal, step)
    if not isinstance(f.game, Choice):
        raise RuleError("choice: game is not a choice", step.line)
    left, right = f.game.left, f.game.right
    if isinstance(f, BoxF):
        return ([Goal(goal.context, BoxF(left, f.body)),
                 Goal(goal.context, BoxF(right, f.body))], [], "[++]")
    return ([Goal(goal.context, forr(Diamond(left, f.body), Diamond(right, f.body)))],
            [], "<++>")


def _rule_compose(goal: Goal, step: ProofStep):
    f = _modality(goal, step)
    if not isinstance(f.game, Seq):
        raise RuleError("compose: game is not a sequence", step.line)
    wrap = BoxF if isinstance(f, BoxF) else Diamond
    return ([Goal(goal.context, wrap(f.game.left, wrap(f.game.right, f.body)))],
            [], "[;]")


def _rule_assign(goal: Goal, step: ProofStep):
    f = _modality(goal, step)
    if not isinstance(f.game, Assign):
        raise RuleError("assign: game is not an assignment", step.line)
    try:
        new = substitute(f.body, f.game.var, f.game.rhs)
    except SubstitutionError as e:
        raise RuleError(f"assign: {e}", step.line) from None
    return [Goal(goal.context, new)], [], "[:=]"


def _rule_random_assign(goal: Goal, step: ProofStep):
    f = _modality(goal, step)
    if not isinstance(f.game, RandomAssign):
        raise RuleError("random-assign: game is not a nondeterministic assignment",
                        step.line)
    x = f.game.var
    if isinstance(f, BoxF):
        kept = tuple(h for h in goal.context if x.key not in free_vars(h))
        dropped = len(goal.context) - len(kept)
        note = "[:=*] universalized"
        if dropped:
            note += f", dropped {dropped} assumption(s) about {x.name}"
        return [Goal(kept, f.body)], [], note
    w = step.args.witnesses.get(x.key)
    if w is None:
        raise RuleError("<:=*> needs a witness term for the assigned variable",
                        step.line)
    try:
        new = substitute(f.body, x, w)
    except SubstitutionError as e:
        raise RuleError(f"random-assign: {e}", step.line) from None
    sides = [SideCondition(label="definedness", kind="definedness",
                           formula=_fold(fo_context(goal.context), c),
                           step_line=step.line)
             for c in definedness_conditions(w)]
    return [Goal(goal.context, new)], sides, "<:=*> witness"


def _rule_dual(goal: Goal, step: ProofStep):
    f = _modality(goal, step)
    if not isinstance(f.game, Dual):
        raise RuleError("dual: game is not a dual", step.line)
    wrap = Diamond if isinstance(f, BoxF) else BoxF
    return [Goal(goal.context, wrap(f.game.body, f.body))], [], "[^d]"


def _rule_diamond_dual(goal: Goal, step: ProofStep):
    f = goal.formula
    if isinstance(f, Diamond):
        return ([Goal(goal.context, Not(BoxF(f.game, Not(f.body))))],
                [], "<a> to ![a]!")
    if isinstance(f, Not) and isinstance(f.arg, BoxF):
        inner = f.arg
        body = inner.body.arg if isinstance(inner.body, Not) else Not(inner.body)
        return [Goal(goal.context, Diamond(inner.game, body))], [], "![a]! to <a>"
    raise RuleError("diamond-dual: goal is neither <a>F nor ![a]!F", step.line)


def _rule_iterate(goal: Goal, step: ProofStep):
    f = _modality(goal, step, (BoxF,))
    if not isinstance(f.game, Repeat):
        raise RuleError("iterate: game is not a repetition", step.line)
    unwound = fand(f.body, BoxF(f.game.body, BoxF(f.game, f.body)))
    return [Goal(goal.context, unwound)], [], "[*] unwind"


def _rule_loop_ind(goal: Goal, step: ProofStep):
    f = _modality(goal, step, (BoxF,))
    if not isinstance(f.game, Repeat):
        raise RuleError("loop-ind: game is not a repetition", step.line)
    j = step.args.formula
    if j is None:
        raise RuleError("loop-ind needs an invariant formula", step.line)
    init = Goal(goal.context, j)
    stepg = Goal(tuple(conjuncts(j)), BoxF(f.game.body, j))
    post = Goal(tuple(conjuncts(j)), f.body)
    return [init, stepg, post], [], "loop induction"


def _rule_monotone(goal: Goal, step: ProofStep):
    f = _modality(goal, step)
    phi = step.args.formula
    if phi is None:
        raise RuleError("monotone needs a formula argument", step.line)
    wrap = type(f)
    side = SideCondition(label="monotone", kind="monotone",
                         formula=Implies(phi, f.body), step_line=step.line)
    return [Goal(goal.context, wrap(f.game, phi))], [side], "M"


def _rule_arith(goal: Goal, step: ProofStep):
    if subterms_of_kind(goal.formula, (BoxF, Diamond)):
        raise RuleError("arith: goal still contains game modalities", step.line)
    if prop_entails(list(goal.context), goal.formula):
        return [], [], "closed propositionally"
    sel = _select_context(goal, step.args.use, step.line)
    side = SideCondition(label="leaf", kind="leaf",
                         formula=_fold(sel, goal.formula), step_line=step.line)
    return [], [side], "arithmetic leaf"


def _rule_evolve_solution(goal: Goal, step: ProofStep):
    f = _modality(goal, step, (BoxF,))
    g = f.game
    if not isinstance(g, DiffGame):
        raise RuleError("evolve-solution: game is not a differential game", step.line)
    if g.demon_constraint is not None or g.angel_constraint is not None:
        raise RuleError("evolve-solution applies to control-free differential games",
                        step.line)
    sols = step.args.solutions or step.args.witnesses
    if not sols:
        raise RuleError("evolve-solution needs solution terms", step.line)
    tvar = Var("t")
    if tvar.key in {v.key for v in g.states}:
        raise RuleError("evolve-solution reserves the time variable t", step.line)
    state_keys = [v.key for v in g.states]
    missing = [k for k in state_keys if k not in sols]
    if missing:
        raise RuleError(f"evolve-solution: no solution given for "
                        f"{missing[0][0]}", step.line)
    zero = {tvar.key: Const(Fraction(0))}
    sol_map = {k: sols[k] for k in state_keys}
    for v, rhs in zip(g.states, g.rhs):
        y = sols[v.key]
        try:
            if not poly_equal(substitute_term(y, zero), v):
                raise RuleError(
                    f"evolve-solution: {v.name}(0) does not equal {v.name}",
                    step.line)
            dy = time_derivative(y, tvar)
            f_on_sol = substitute_term(rhs, sol_map)
            if not poly_equal(dy, f_on_sol):
                raise RuleError(
                    f"evolve-solution: d{v.name}/dt does not match the "
                    "right-hand side along the solution", step.line)
        except PolyError as e:
            raise RuleError(f"evolve-solution: {e}", step.line) from None
    try:
        shifted = _subst_fo(f.body, sol_map)
    except SubstitutionError as e:
        raise RuleError(f"evolve-solution: {e}", step.line) from None
    subgoal = Forall(tvar, Implies(Cmp(">=", tvar, Const(Fraction(0))), shifted))
    return [Goal(goal.context, subgoal)], [], "['] with checked solution"


# -- differential game rules -------------------------------------------------


def _match_dgi_goal(goal: Goal, step: ProofStep):
    f = goal.formula
    if isinstance(f, Implies) and isinstance(f.right, BoxF) \
            and isinstance(f.right.game, DiffGame):
        if f.left != f.right.body:
            raise RuleError("DGI: precondition and postcondition differ", step.line)
        return f.left, f.right.game
    if isinstance(f, BoxF) and isinstance(f.game, DiffGame):
        if not prop_entails(list(goal.context), f.body):
            raise RuleError(
                "DGI: the invariant is not among the assumptions", step.line)
        return f.body, f.game
    raise RuleError("DGI: goal is not F -> [diffgame] F", step.line)


def _witness_map(args_witnesses: dict, vars_, rule: str, line: int,
                 forbidden: set) -> dict[VarKey, Term]:
    out = {}
    for v in vars_:
        w = args_witnesses.get(v.key)
        if w is None:
            raise RuleError(
                f"{rule}: missing witness for control {v.name}"
                f"{'' if v.index is None else v.index}", line)
        bad = free_vars(w) & forbidden
        if bad:
            raise RuleError(
                f"{rule}: witness for {v.name} may not mention "
                f"{sorted(bad)[0][0]} (quantifier order)", line)
        out[v.key] = w
    return out


def _rule_dgi(goal: Goal, step: ProofStep):
    inv, g = _match_dgi_goal(goal, step)
    premise = dgi_premise(inv, g, step.line)
    sel = _select_context(goal, step.args.use, step.line)
    sides = []
    if step.args.witnesses:
        demon_keys = {v.key for v in g.demon_vars}
        angel_keys = {v.key for v in g.angel_vars}
        wmap = _witness_map(step.args.witnesses, g.demon_vars, "DGI", step.line,
                            forbidden=demon_keys | angel_keys)
        fn = _normalize_inv(inv, "DGI", step.line)
        core = _lie_core(fn, g, "DGI", step.line)
        inner = _forall_chain(g.angel_vars, g.angel_constraint, core)
        try:
            inst = _subst_fo(inner, wmap)
            cons = _subst_fo(g.demon_constraint, wmap) if g.demon_constraint is not None else None
        except SubstitutionError as e:
            raise RuleError(f"DGI: {e}", step.line) from None
        body = fand(cons, inst) if cons is not None else inst
        sides.append(SideCondition("DGI-premise", "premise", _fold(sel, body),
                                   step.line))
        for c in definedness_conditions(fand(inv, *wmap.values())):
            sides.append(SideCondition("DGI-definedness", "definedness",
                                       _fold(sel, c), step.line))
        note = "DGI with witness"
    else:
        inner = premise
        # peel the exists chain for the built-in search
        ex_vars = []
        while isinstance(inner, Exists):
            ex_vars.append(inner.var)
            inner = inner.body
        if ex_vars and isinstance(inner, And):
            constraint = inner.args[0]
            rest = fand(*inner.args[1:])
            sides.append(SideCondition("DGI-premise", "premise",
                                       _fold(sel, premise), step.line,
                                       search=(constraint, rest)))
        else:
            sides.append(SideCondition("DGI-premise", "premise",
                                       _fold(sel, premise), step.line))
        for c in definedness_conditions(inv):
            sides.append(SideCondition("DGI-definedness", "definedness",
                                       _fold(sel, c), step.line))
        note = "DGI (premise left existential)"
    return [], sides, note


def _rule_dgv(goal: Goal, step: ProofStep):
    f = goal.formula
    if not (isinstance(f, Diamond) and isinstance(f.game, DiffGame)):
        raise RuleError("DGV: goal is not <diffgame> g >= 0", step.line)
    post = f.body
    if not (isinstance(post, Cmp) and post.op == ">="):
        raise RuleError("DGV: postcondition must have shape g >= 0", step.line)
    g_term = simplify(sub(post.left, post.right))
    g = f.game
    eps = step.args.epsilon
    if eps is None:
        raise RuleError("DGV needs an explicit eps value", step.line)
    if eps <= 0:
        raise RuleError("DGV: eps must be positive", step.line)
    angel_keys = {v.key for v in g.angel_vars}
    demon_keys = {v.key for v in g.demon_vars}
    wmap = _witness_map(step.args.witnesses, g.angel_vars, "DGV", step.line,
                        forbidden=angel_keys | demon_keys)
    premise = dgv_premise(g_term, g, step.line, eps=Const(eps))
    _require_wd(g, "DGV", step.line)
    try:
        lie = lie_substitute_term(
            derive_term(g_term), {v.key: rhs for v, rhs in zip(g.states, g.rhs)})
        lie_w = simplify(substitute_term(lie, wmap))
        cons = _subst_fo(g.angel_constraint, wmap) if g.angel_constraint is not None else None
    except (DeriveError, SubstitutionError) as e:
        raise RuleError(f"DGV: {e}", step.line) from None
    body = Implies(Cmp("<=", g_term, Const(Fraction(0))),
                   Cmp(">=", lie_w, Const(eps)))
    inner = _forall_chain(g.demon_vars, g.demon_constraint, body)
    main = fand(cons, inner) if cons is not None else inner
    sel = _select_context(goal, step.args.use, step.line)
    sides = [SideCondition("DGV-premise", "premise", _fold(sel, main), step.line)]
    for c in definedness_conditions(fand(*wmap.values()) if wmap else premise):
        sides.append(SideCondition("DGV-definedness", "definedness",
                                   _fold(sel, c), step.line))
    return [], sides, f"DGV with eps={eps}"


def _rule_dgr(goal: Goal, step: ProofStep):
    f = goal.formula
    subgoals = []
    if isinstance(f, Implies) and isinstance(f.left, BoxF) and isinstance(f.right, BoxF) \
            and isinstance(f.left.game, DiffGame) and isinstance(f.right.game, DiffGame):
        if f.left.body != f.right.body:
            raise RuleError("DGR: the two postconditions differ", step.line)
        antecedent = f.left.game
        succedent = f.right.game
    elif isinstance(f, BoxF) and isinstance(f.game, DiffGame):
        if step.args.game is None or not isinstance(step.args.game, DiffGame):
            raise RuleError("DGR on a box goal needs the antecedent game argument",
                            step.line)
        antecedent = step.args.game
        succedent = f.game
        subgoals.append(Goal(goal.context, BoxF(antecedent, f.body)))
    else:
        raise RuleError("DGR: goal is not [g]F -> [f]F or [f]F", step.line)

    premise = dgr_premise(succedent, antecedent, step.line)
    sel = _select_context(goal, step.args.use, step.line)
    sides = []
    if step.args.witnesses:
        u_keys = {v.key for v in antecedent.demon_vars}
        z_keys = {v.key for v in succedent.angel_vars}
        y_map = _witness_map(step.args.witnesses, succedent.demon_vars, "DGR",
                             step.line,
                             forbidden={v.key for v in succedent.demon_vars}
                             | {v.key for v in antecedent.angel_vars} | z_keys)
        v_map = _witness_map(step.args.witnesses, antecedent.angel_vars, "DGR",
                             step.line,
                             forbidden={v.key for v in antecedent.angel_vars}
                             | {v.key for v in succedent.demon_vars})
        eqs = fand(*[Cmp("=", simplify(fs), simplify(gs))
                     for fs, gs in zip(succedent.rhs, antecedent.rhs)])
        try:
            eqs_i = _subst_fo(eqs, {**y_map, **v_map})
            y_cons = _subst_fo(succedent.demon_constraint, y_map) \
                if succedent.demon_constraint is not None else None
            v_cons = _subst_fo(antecedent.angel_constraint, v_map) \
                if antecedent.angel_constraint is not None else None
        except SubstitutionError as e:
            raise RuleError(f"DGR: {e}", step.line) from None
        inner = _forall_chain(succedent.states, None, eqs_i)
        if v_cons is not None:
            inner = fand(v_cons, inner)
        inner = _forall_chain(succedent.angel_vars, succedent.angel_constraint, inner)
        if y_cons is not None:
            inner = fand(y_cons, inner)
        body = _forall_chain(antecedent.demon_vars, antecedent.demon_constraint, inner)
        sides.append(SideCondition("DGR-premise", "premise", _fold(sel, body),
                                   step.line))
        for c in definedness_conditions(fand(*step.args.witnesses.values())):
            sides.append(SideCondition("DGR-definedness", "definedness",
                                       _fold(sel, c), step.line))
        note = "DGR with witnesses"
    else:
        sides.append(SideCondition("DGR-premise", "premise", _fold(sel, premise),
                                   step.line))
        note = "DGR (premise left quantified)"
    return subgoals, sides, note


_HANDLERS = {
    "intro": _rule_intro,
    "cases": _rule_cases,
    "test": _rule_test,
    "choice": _rule_choice,
    "compose": _rule_compose,
    "assign": _rule_assign,
    "random-assign": _rule_random_assign,
    "dual": _rule_dual,
    "diamond-dual": _rule_diamond_dual,
    "iterate": _rule_iterate,
    "loop-ind": _rule_loop_ind,
    "monotone": _rule_monotone,
    "arith": _rule_arith,
    "evolve-solution": _rule_evolve_solution,
    "DGI": _rule_dgi,
    "DGV": _rule_dgv,
    "DGR": _rule_dgr,
}
