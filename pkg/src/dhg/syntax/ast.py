"""AST data model for terms, formulas, hybrid games, and proof scripts.

Terms are polynomial expression trees over exact rational constants,
extended with min/max and (for witness contexts only) division and
square roots.  Formulas are first-order real arithmetic plus the two
game modalities.  All nodes are immutable and safe to share.

Source spans are carried on every node but excluded from structural
equality, so `parse(print(a)) == a` compares content only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

Span = tuple[int, int]  # (line, column), 1-based
VarKey = tuple[str, Optional[int]]


def _span_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Const(Term):
    value: Fraction
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Term):
    name: str
    index: Optional[int] = None
    span: Optional[Span] = _span_field()

    @property
    def key(self) -> VarKey:
        return (self.name, self.index)


@dataclass(frozen=True)
class DiffVar(Term):
    """Differential symbol x' of the variable (name, index)."""

    name: str
    index: Optional[int] = None
    span: Optional[Span] = _span_field()

    @property
    def key(self) -> VarKey:
        return (self.name, self.index)


@dataclass(frozen=True)
class Neg(Term):
    arg: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Add(Term):
    args: tuple[Term, ...]
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        # canonical n-ary form: nested sums flatten on construction
        if any(isinstance(a, Add) for a in self.args):
            flat: list[Term] = []
            for a in self.args:
                flat.extend(a.args if isinstance(a, Add) else [a])
            object.__setattr__(self, "args", tuple(flat))


@dataclass(frozen=True)
class Mul(Term):
    args: tuple[Term, ...]
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if any(isinstance(a, Mul) for a in self.args):
            flat: list[Term] = []
            for a in self.args:
                flat.extend(a.args if isinstance(a, Mul) else [a])
            object.__setattr__(self, "args", tuple(flat))


@dataclass(frozen=True)
class Pow(Term):
    base: Term
    exp: int
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if self.exp < 1:
            raise ValueError("power exponents must be natural numbers >= 1")


@dataclass(frozen=True)
class Min(Term):
    left: Term
    right: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Max(Term):
    left: Term
    right: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Div(Term):
    """Quotient; restricted to witness contexts, rejected in core terms."""

    num: Term
    den: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Sqrt(Term):
    """Square root; restricted to witness contexts like Div."""

    arg: Term
    span: Optional[Span] = _span_field()


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

CMP_OPS = ("<=", "<", "=", "!=", ">", ">=")


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Cmp(Formula):
    op: str
    left: Term
    right: Term
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"bad comparison operator {self.op!r}")


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if any(isinstance(a, And) for a in self.args):
            flat: list[Formula] = []
            for a in self.args:
                flat.extend(a.args if isinstance(a, And) else [a])
            object.__setattr__(self, "args", tuple(flat))


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if any(isinstance(a, Or) for a in self.args):
            flat: list[Formula] = []
            for a in self.args:
                flat.extend(a.args if isinstance(a, Or) else [a])
            object.__setattr__(self, "args", tuple(flat))


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Exists(Formula):
    var: Var
    body: Formula
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Forall(Formula):
    var: Var
    body: Formula
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Diamond(Formula):
    game: "HybridGame"
    body: Formula
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class BoxF(Formula):
    game: "HybridGame"
    body: Formula
    span: Optional[Span] = _span_field()


# ---------------------------------------------------------------------------
# Hybrid games
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HybridGame:
    pass


@dataclass(frozen=True)
class DiffGame(HybridGame):
    """{x' = f(x,y,z) & y in Y d z in Z}.

    Control variables are exactly the free variables of the respective
    constraint; an absent constraint means that player has no control
    input.  Demon picks y first, Angel picks z (and the duration).
    """

    states: tuple[Var, ...]
    rhs: tuple[Term, ...]
    demon_constraint: Optional[Formula]
    angel_constraint: Optional[Formula]
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if len(self.states) != len(self.rhs):
            raise ValueError(
                f"differential game has {len(self.states)} state variables "
                f"but {len(self.rhs)} right-hand sides"
            )

    @property
    def demon_vars(self) -> tuple[Var, ...]:
        if self.demon_constraint is None:
            return ()
        return _sorted_vars(free_vars(self.demon_constraint))

    @property
    def angel_vars(self) -> tuple[Var, ...]:
        if self.angel_constraint is None:
            return ()
        return _sorted_vars(free_vars(self.angel_constraint))


@dataclass(frozen=True)
class Assign(HybridGame):
    var: Var
    rhs: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class RandomAssign(HybridGame):
    var: Var
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Test(HybridGame):
    cond: Formula
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Choice(HybridGame):
    left: HybridGame
    right: HybridGame
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Seq(HybridGame):
    left: HybridGame
    right: HybridGame
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Repeat(HybridGame):
    body: HybridGame
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Dual(HybridGame):
    body: HybridGame
    span: Optional[Span] = _span_field()


Ast = Union[Term, Formula, HybridGame]


# ---------------------------------------------------------------------------
# Smart constructors
# ---------------------------------------------------------------------------


def const(v) -> Const:
    return Const(Fraction(v))


ZERO = const(0)
ONE = const(1)
TRUE = Cmp("=", ZERO, ZERO)
FALSE = Cmp("=", ZERO, ONE)


def add(*args: Term) -> Term:
    """Flattening n-ary sum; returns 0 for the empty sum."""
    flat: list[Term] = []
    for a in args:
        if isinstance(a, Add):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*args: Term) -> Term:
    flat: list[Term] = []
    for a in args:
        if isinstance(a, Mul):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def sub(a: Term, b: Term) -> Term:
    return add(a, Neg(b))


def fand(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def forr(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out: list[Formula] = []
        for a in f.args:
            out.extend(conjuncts(a))
        return out
    return [f]


def _sorted_vars(keys: set[VarKey]) -> tuple[Var, ...]:
    return tuple(
        Var(n, i) for n, i in sorted(keys, key=lambda k: (k[0], -1 if k[1] is None else k[1]))
    )


# ---------------------------------------------------------------------------
# Variable analyses
# ---------------------------------------------------------------------------


def free_vars(node: Ast) -> set[VarKey]:
    """Free variables of a term, formula, or game.

    Differential symbols x' count as occurrences of x.  A differential
    game binds its control variables; assignments write (bind) their
    target; quantifiers bind their variable.  Modalities use the usual
    must-bound analysis: FV([a]F) = FV(a) | (FV(F) - MBV(a)).
    """
    if isinstance(node, (Const,)):
        return set()
    if isinstance(node, (Var, DiffVar)):
        return {node.key}
    if isinstance(node, Neg):
        return free_vars(node.arg)
    if isinstance(node, (Add, Mul)):
        out: set[VarKey] = set()
        for a in node.args:
            out |= free_vars(a)
        return out
    if isinstance(node, Pow):
        return free_vars(node.base)
    if isinstance(node, (Min, Max)):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Div):
        return free_vars(node.num) | free_vars(node.den)
    if isinstance(node, Sqrt):
        return free_vars(node.arg)

    if isinstance(node, Cmp):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Not):
        return free_vars(node.arg)
    if isinstance(node, (And, Or)):
        out = set()
        for a in node.args:
            out |= free_vars(a)
        return out
    if isinstance(node, (Implies, Iff)):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, (Exists, Forall)):
        return free_vars(node.body) - {node.var.key}
    if isinstance(node, (Diamond, BoxF)):
        return free_vars(node.game) | (free_vars(node.body) - must_bound_vars(node.game))

    if isinstance(node, DiffGame):
        out = set()
        for v in node.states:
            out.add(v.key)
        for t in node.rhs:
            out |= free_vars(t)
        bound = {v.key for v in node.demon_vars} | {v.key for v in node.angel_vars}
        return out - bound
    if isinstance(node, Assign):
        return free_vars(node.rhs)
    if isinstance(node, RandomAssign):
        return set()
    if isinstance(node, Test):
        return free_vars(node.cond)
    if isinstance(node, (Choice,)):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Seq):
        return free_vars(node.left) | (free_vars(node.right) - must_bound_vars(node.left))
    if isinstance(node, (Repeat, Dual)):
        return free_vars(node.body)
    raise TypeError(f"unknown AST node {node!r}")


def bound_vars(node: Ast) -> set[VarKey]:
    """Variables bound (written or quantified) anywhere in the AST."""
    if isinstance(node, Term):
        return set()
    if isinstance(node, Cmp):
        return set()
    if isinstance(node, Not):
        return bound_vars(node.arg)
    if isinstance(node, (And, Or)):
        out: set[VarKey] = set()
        for a in node.args:
            out |= bound_vars(a)
        return out
    if isinstance(node, (Implies, Iff)):
        return bound_vars(node.left) | bound_vars(node.right)
    if isinstance(node, (Exists, Forall)):
        return bound_vars(node.body) | {node.var.key}
    if isinstance(node, (Diamond, BoxF)):
        return bound_vars(node.game) | bound_vars(node.body)

    if isinstance(node, DiffGame):
        out = {v.key for v in node.states}
        out |= {v.key for v in node.demon_vars}
        out |= {v.key for v in node.angel_vars}
        return out
    if isinstance(node, (Assign, RandomAssign)):
        return {node.var.key}
    if isinstance(node, Test):
        return bound_vars(node.cond)
    if isinstance(node, (Choice, Seq)):
        return bound_vars(node.left) | bound_vars(node.right)
    if isinstance(node, (Repeat, Dual)):
        return bound_vars(node.body)
    raise TypeError(f"unknown AST node {node!r}")


def must_bound_vars(game: HybridGame) -> set[VarKey]:
    """Variables written on every path through the game."""
    if isinstance(game, (Assign, RandomAssign)):
        return {game.var.key}
    if isinstance(game, DiffGame):
        out = {v.key for v in game.states}
        out |= {v.key for v in game.demon_vars}
        out |= {v.key for v in game.angel_vars}
        return out
    if isinstance(game, Test):
        return set()
    if isinstance(game, Choice):
        return must_bound_vars(game.left) & must_bound_vars(game.right)
    if isinstance(game, Seq):
        return must_bound_vars(game.left) | must_bound_vars(game.right)
    if isinstance(game, Repeat):
        return set()
    if isinstance(game, Dual):
        return must_bound_vars(game.body)
    raise TypeError(f"unknown game node {game!r}")


def differential_symbols(node: Ast) -> set[VarKey]:
    """All differential symbols x' occurring in the AST."""
    out: set[VarKey] = set()

    def walk(n):
        if isinstance(n, DiffVar):
            out.add(n.key)
        for c in children(n):
            walk(c)

    walk(node)
    return out


def children(node: Ast) -> tuple:
    """Immediate sub-ASTs of a node (terms, formulas, and games)."""
    if isinstance(node, (Const, Var, DiffVar)):
        return ()
    if isinstance(node, Neg):
        return (node.arg,)
    if isinstance(node, (Add, Mul)):
        return node.args
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, (Min, Max)):
        return (node.left, node.right)
    if isinstance(node, Div):
        return (node.num, node.den)
    if isinstance(node, Sqrt):
        return (node.arg,)
    if isinstance(node, Cmp):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, (Implies, Iff)):
        return (node.left, node.right)
    if isinstance(node, (Exists, Forall)):
        return (node.var, node.body)
    if isinstance(node, (Diamond, BoxF)):
        return (node.game, node.body)
    if isinstance(node, DiffGame):
        out = list(node.states) + list(node.rhs)
        if node.demon_constraint is not None:
            out.append(node.demon_constraint)
        if node.angel_constraint is not None:
            out.append(node.angel_constraint)
        return tuple(out)
    if isinstance(node, Assign):
        return (node.var, node.rhs)
    if isinstance(node, RandomAssign):
        return (node.var,)
    if isinstance(node, Test):
        return (node.cond,)
    if isinstance(node, (Choice, Seq)):
        return (node.left, node.right)
    if isinstance(node, (Repeat, Dual)):
        return (node.body,)
    raise TypeError(f"unknown AST node {node!r}")


def subterms_of_kind(node: Ast, kind) -> list:
    out = []

    def walk(n):
        if isinstance(n, kind):
            out.append(n)
        for c in children(n):
            walk(c)

    walk(node)
    return out


def is_core_term(t: Term) -> bool:
    """Core-language terms contain no division and no square roots."""
    return not subterms_of_kind(t, (Div, Sqrt))


def has_differentials(node: Ast) -> bool:
    return bool(differential_symbols(node))


def fresh_var(base: str, taken: set[VarKey]) -> Var:
    """Fresh variable on the reserved `$` namespace: $c0, $c1, ..."""
    n = 0
    while (f"${base}{n}", None) in taken:
        n += 1
    return Var(f"${base}{n}")
