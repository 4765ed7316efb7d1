from .decide import (  # noqa: F401
    DEFAULT_BUDGET, UncoveredVariableError, Verdict, decide_forall,
    search_exists_forall,
)
from .interval import (  # noqa: F401
    Box, EvalError, Interval, IntervalError, eval_formula_exact,
    eval_term_exact, eval_term_interval,
)
from .smtlib import export_smtlib  # noqa: F401
