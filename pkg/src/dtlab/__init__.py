"""Exact evaluation of one-shot and sequential decision theories on finite causal models."""

from .env import (
    EMPTY,
    EnvironmentModel,
    collapse_hidden_state,
    do_action,
    do_policy,
    equivalent,
    joint,
    tabulate,
    validate,
)
from .errors import (
    BudgetExceeded,
    DtlabError,
    MissingKernelRow,
    MissingPerceptFamily,
    ParameterOutOfDomain,
    UnknownEnvironment,
    UnreachableHistory,
    ZeroProbabilityEvent,
)
from .oneshot import OneShotProblem, cdt_decide, edt_decide, project_step, sdt_decide
from .prob import Event, FiniteDistribution
from .solver import backward_induction, enumerate_policies, is_time_consistent, solve
from .values import THEORIES, Policy, Theory, evaluate, v_aev, v_cau, v_iterative, v_pev, value

__version__ = "0.1.0"

__all__ = [
    "EMPTY", "EnvironmentModel", "collapse_hidden_state", "do_action", "do_policy",
    "equivalent", "joint", "tabulate", "validate",
    "BudgetExceeded", "DtlabError", "MissingKernelRow", "MissingPerceptFamily",
    "ParameterOutOfDomain", "UnknownEnvironment", "UnreachableHistory", "ZeroProbabilityEvent",
    "OneShotProblem", "cdt_decide", "edt_decide", "project_step", "sdt_decide",
    "Event", "FiniteDistribution",
    "backward_induction", "enumerate_policies", "is_time_consistent", "solve",
    "THEORIES", "Policy", "Theory", "evaluate", "v_aev", "v_cau", "v_iterative", "v_pev", "value",
]
