"""One-shot decision rules: Savage (explicit P_a), evidential, causal."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .env import EMPTY, EnvironmentModel, History, do_action, tabulate
from .errors import MissingPerceptFamily
from .values import Theory, next_percept

PerceptFamily = Mapping[str, Mapping[str, Fraction]]


@dataclass(frozen=True)
class OneShotProblem:
    env: EnvironmentModel
    percept_family: PerceptFamily | None = None

    def __post_init__(self) -> None:
        if self.env.lifetime != 1:
            raise ValueError(
                f"one-shot problems need lifetime 1, got {self.env.lifetime}; "
                "use project_step() to take a single step of a sequential model"
            )


@dataclass(frozen=True)
class DecisionReport:
    theory: str
    values: dict[str, Fraction]
    best_actions: tuple[str, ...] = field(default=())

    @property
    def best(self) -> str:
        """Canonical single choice: first maximizer in alphabet order."""
        return self.best_actions[0]

    @property
    def tie(self) -> bool:
        return len(self.best_actions) > 1


def _report(theory: str, env: EnvironmentModel, values: dict[str, Fraction]) -> DecisionReport:
    top = max(values.values())
    best = tuple(a for a in env.actions if values[a] == top)
    return DecisionReport(theory, values, best)


def evidential_family(env: EnvironmentModel, history: History = EMPTY) -> dict[str, dict[str, Fraction]]:
    """P_a := P(. | a)."""
    return {a: next_percept(Theory.AEV, env, history, a).as_dict() for a in env.actions}


def causal_family(env: EnvironmentModel, history: History = EMPTY) -> dict[str, dict[str, Fraction]]:
    """P_a := P(. | do(a))."""
    return {a: do_action(env, history, a).as_dict() for a in env.actions}


def sdt_decide(problem: OneShotProblem) -> DecisionReport:
    env, family = problem.env, problem.percept_family
    if family is None:
        raise MissingPerceptFamily(
            "Savage decision theory needs an explicit percept distribution P_a for every "
            "action; the environment model alone does not say whether to read it "
            "evidentially or causally"
        )
    missing = [a for a in env.actions if a not in family]
    if missing:
        raise MissingPerceptFamily(f"no percept distribution for actions {missing}")
    values = {
        a: sum((p * env.utility[e] for e, p in family[a].items()), Fraction(0))
        for a in env.actions
    }
    return _report("sdt", env, values)


def edt_decide(problem: OneShotProblem) -> DecisionReport:
    env = problem.env
    return _report("edt", env, _expected(env, evidential_family(env)))


def cdt_decide(problem: OneShotProblem) -> DecisionReport:
    env = problem.env
    return _report("cdt", env, _expected(env, causal_family(env)))


def _expected(env: EnvironmentModel, family) -> dict[str, Fraction]:
    return {
        a: sum((p * env.utility[e] for e, p in family[a].items()), Fraction(0))
        for a in env.actions
    }


DECIDERS = {"sdt": sdt_decide, "edt": edt_decide, "cdt": cdt_decide}


def project_step(env: EnvironmentModel, history: History) -> EnvironmentModel:
    """A lifetime-1 model of the single step taken after ``history``.

    The prior becomes mu(s | h); kernels are the rows at h.  Only the
    immediate percept's utility counts, so deciding on the projection is a
    myopic one-step decision.
    """
    weights = env.require_reachable(history)
    if len(history) >= env.lifetime:
        raise ValueError("no step remains after this history")
    total = sum(weights.values(), Fraction(0))
    prior = {s: w / total for s, w in weights.items()}
    return tabulate(
        env.states,
        env.actions,
        env.percepts,
        1,
        {s: prior.get(s, Fraction(0)) for s in env.states},
        lambda s, h: env.action_probs(s, history),
        lambda s, h, a: env.percept_probs(s, history, a),
        env.utility,
        labels={(1, a): lab for (st, a), lab in env.labels.items() if st == len(history) + 1},
        name=f"{env.name}@{env.format_history(history)}",
    )
