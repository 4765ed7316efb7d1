from .checker import BackendConfig, CheckResult, SideRecord, check_proof  # noqa: F401
from .goals import Goal, RuleError, SideCondition, prop_entails  # noqa: F401
from .rules import (  # noqa: F401
    apply_rule, definedness_conditions, dgi_premise, dgr_premise, dgv_premise,
)
