from .ast import (  # noqa: F401
    Add, And, Assign, BoxF, Choice, Cmp, Const, Diamond, DiffGame, DiffVar,
    Div, Dual, Exists, FALSE, Forall, Formula, HybridGame, Iff, Implies, Max,
    Min, Mul, Neg, Not, Or, Pow, RandomAssign, Repeat, Seq, Sqrt, Term, Test,
    TRUE, Var, VarKey, add, bound_vars, children, conjuncts, const,
    differential_symbols, fand, forr, free_vars, fresh_var, has_differentials,
    is_core_term, mul, must_bound_vars, sub, subterms_of_kind,
)
from .parser import ParseError, parse  # noqa: F401
from .printer import print_ast, print_formula, print_game, print_term  # noqa: F401
