"""Policy enumeration, time-consistency checks and the optimal-policy solver."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .env import EMPTY, EnvironmentModel, History
from .errors import BudgetExceeded
from .values import (
    Policy,
    Theory,
    ValueReport,
    _Context,
    _recursive,
    _weights,
    action_values,
    reachable_under,
    value,
)

DEFAULT_BUDGET = 10**6


# ---------------------------------------------------------------------------
# enumeration


def decision_classes(env: EnvironmentModel) -> list[tuple[History, ...]]:
    """Decision points grouped by declared information sets, breadth-first ordered.

    Every class receives a single action, which keeps policies measurable
    with respect to the information sets.
    """
    key = ("classes",)
    if key in env._memo:
        return env._memo[key]
    points = env.decision_points()
    index = {h: i for i, h in enumerate(points)}
    owner: dict[History, int] = {}
    groups: list[list[History]] = []
    for infoset in env.infosets:
        members = sorted((h for h in infoset if h in index), key=index.__getitem__)
        if not members:
            continue
        merged = {owner[h] for h in members if h in owner}
        if merged:
            target = min(merged)
            for g in sorted(merged - {target}, reverse=True):
                for h in groups[g]:
                    owner[h] = target
                groups[target].extend(groups[g])
                groups[g] = []
        else:
            target = len(groups)
            groups.append([])
        for h in members:
            if h not in owner:
                owner[h] = target
                groups[target].append(h)
    for h in points:
        if h not in owner:
            owner[h] = len(groups)
            groups.append([h])
    classes = [tuple(sorted(g, key=index.__getitem__)) for g in groups if g]
    classes.sort(key=lambda g: index[g[0]])
    env._memo[key] = classes
    return classes


def policy_count(env: EnvironmentModel) -> int:
    return len(env.actions) ** len(decision_classes(env))


def policy_at(env: EnvironmentModel, index: int) -> Policy:
    """The ``index``-th policy in lexicographic order (first class most significant)."""
    classes = decision_classes(env)
    n = len(env.actions)
    digits = []
    for _ in classes:
        index, d = divmod(index, n)
        digits.append(d)
    if index:
        raise IndexError("policy index out of range")
    table = {}
    for cls, d in zip(classes, reversed(digits)):
        for h in cls:
            table[h] = env.actions[d]
    return Policy(table)


def enumerate_policies(
    env: EnvironmentModel,
    budget: int = DEFAULT_BUDGET,
    start: int = 0,
    stop: int | None = None,
    behavioral: bool = False,
) -> Iterator[Policy]:
    """Every deterministic policy over the decision points, in lexicographic order.

    ``start``/``stop`` select a contiguous slice of the index space so that
    enumeration can be partitioned across workers.  With ``behavioral=True``
    only the first policy of each behaviour class is yielded: policies that
    act identically on every history they themselves can reach are merged.
    """
    total = policy_count(env)
    if total > budget:
        raise BudgetExceeded(total, budget)
    classes = decision_classes(env)
    stop = total if stop is None else min(stop, total)
    seen: set = set()
    choices = itertools.product(env.actions, repeat=len(classes))
    for i, combo in enumerate(itertools.islice(choices, start, stop), start):
        table = {h: a for cls, a in zip(classes, combo) for h in cls}
        policy = Policy(table)
        if behavioral:
            key = behavior_key(env, policy)
            if key in seen:
                continue
            seen.add(key)
        yield policy


def behavior_key(env: EnvironmentModel, policy: Policy) -> tuple:
    return tuple((h, policy(h)) for h in reachable_under(env, policy))


def policy_index(env: EnvironmentModel, policy: Policy) -> int:
    n = len(env.actions)
    pos = {a: i for i, a in enumerate(env.actions)}
    index = 0
    for cls in decision_classes(env):
        index = index * n + pos[policy(cls[0])]
    return index


# ---------------------------------------------------------------------------
# time consistency


@dataclass(frozen=True)
class Violation:
    history: History
    prescribed: str
    argmax: tuple[str, ...]
    values: dict[str, Fraction]


@dataclass(frozen=True)
class Consistency:
    consistent: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.consistent


def is_time_consistent(
    env: EnvironmentModel, theory: Theory | str, policy: Policy, stop_at_first: bool = False
) -> Consistency:
    """Check pi(h) ∈ argmax_a V^pi(h a) at every decision point.

    Continuations are valued with the same policy.  A prescribed action that
    ties for the maximum counts as consistent.
    """
    theory = Theory.parse(theory)
    violations = []
    for h in env.decision_points():
        vals = action_values(theory, env, policy, h)
        top = max(vals.values())
        best = tuple(a for a in env.actions if vals[a] == top)
        if policy(h) not in best:
            violations.append(Violation(h, policy(h), best, vals))
            if stop_at_first:
                break
    return Consistency(not violations, tuple(violations))


# ---------------------------------------------------------------------------
# solving


@dataclass
class SolveResult:
    theory: Theory
    policies: list[Policy]
    canonical: Policy | None
    values: dict[Policy, ValueReport]
    ranked: list[tuple[Policy, Fraction]]
    diagnostics: dict[Policy, tuple[Violation, ...]] = field(default_factory=dict)
    examined: int = 0
    backward_induction: list[Policy] | None = None

    @property
    def value(self) -> Fraction | None:
        if self.canonical is None:
            return None
        return self.values[self.canonical].value

    def behaviors(self, env: EnvironmentModel) -> list[Policy]:
        """One representative per distinct behaviour among the optimal policies."""
        seen, out = set(), []
        for p in self.policies:
            k = behavior_key(env, p)
            if k not in seen:
                seen.add(k)
                out.append(p)
        return out


def _scan(env: EnvironmentModel, theory: Theory, start: int, stop: int, budget: int, keep: bool):
    rows = []
    for offset, policy in enumerate(enumerate_policies(env, budget, start, stop)):
        check = is_time_consistent(env, theory, policy, stop_at_first=not keep)
        root = value(theory, env, policy) if check else None
        rows.append((start + offset, check.violations if keep else (), root))
    return rows


def solve(
    env: EnvironmentModel,
    theory: Theory | str,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    keep_diagnostics: bool = True,
) -> SolveResult:
    """All time-consistent policies attaining the best root value among them.

    Enumeration is exhaustive.  For the action-evidential and causal theories
    the result is cross-checked against backward induction, which is valid
    there because their percept beliefs ignore the future policy.
    """
    theory = Theory.parse(theory)
    total = policy_count(env)
    if total > budget:
        raise BudgetExceeded(total, budget)
    if workers > 1 and total > 1:
        chunk = -(-total // workers)
        bounds = [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _scan, *zip(*[(env, theory, lo, hi, budget, keep_diagnostics) for lo, hi in bounds])
            )
            rows = [r for part in parts for r in part]
    else:
        rows = _scan(env, theory, 0, total, budget, keep_diagnostics)

    consistent: list[tuple[int, Policy, Fraction]] = []
    diagnostics: dict[Policy, tuple[Violation, ...]] = {}
    for index, violations, root in rows:
        policy = policy_at(env, index)
        if root is None:
            if keep_diagnostics:
                diagnostics[policy] = violations
        else:
            consistent.append((index, policy, root))

    ranked = sorted(consistent, key=lambda r: (-r[2], r[0]))
    best = ranked[0][2] if ranked else None
    optimal = [p for _, p, v in ranked if v == best]
    reports = {p: ValueReport(theory, EMPTY, None, v, "recursive") for _, p, v in ranked}
    result = SolveResult(
        theory=theory,
        policies=optimal,
        canonical=optimal[0] if optimal else None,
        values=reports,
        ranked=[(p, v) for _, p, v in ranked],
        diagnostics=diagnostics,
        examined=total,
    )
    if theory is not Theory.PEV:
        bi = backward_induction(env, theory, budget)
        if set(bi) != set(optimal):
            raise AssertionError(
                f"backward induction disagrees with enumeration for {theory.display}"
            )
        result.backward_induction = bi
    return result


def backward_induction(
    env: EnvironmentModel, theory: Theory | str, budget: int = DEFAULT_BUDGET
) -> list[Policy]:
    """Optimal, time-consistent policies by backward induction.

    Only valid when the percept belief at a step does not depend on the
    future policy (aev, cau).  Returns every combination of tied maximizers
    that respects declared information sets, in lexicographic order.
    """
    theory = Theory.parse(theory)
    if theory is Theory.PEV:
        raise ValueError("backward induction does not apply to policy-evidential values")
    ctx = _Context(env, None)
    best_value: dict[History, Fraction] = {}
    argmax: dict[History, tuple[str, ...]] = {}
    for h in sorted(env.decision_points(), key=len, reverse=True):
        vals = {}
        for a in env.actions:
            total = Fraction(0)
            for e, w in _weights(theory, ctx, h, a).items():
                child = h + ((a, e),)
                total += w * (env.utility[e] + best_value.get(child, Fraction(0)))
            vals[a] = total
        top = max(vals.values())
        best_value[h] = top
        argmax[h] = tuple(a for a in env.actions if vals[a] == top)

    classes = decision_classes(env)
    options = []
    for cls in classes:
        common = [a for a in env.actions if all(a in argmax[h] for h in cls)]
        options.append(common)
    count = 1
    for o in options:
        count *= max(len(o), 1)
    if count > budget:
        raise BudgetExceeded(count, budget)
    out = []
    for combo in itertools.product(*options):
        out.append(Policy({h: a for cls, a in zip(classes, combo) for h in cls}))
    if len(classes) > 0 and any(
        len(cls) > 1 for cls in classes
    ):
        # classes spanning several histories: the shared action must be optimal everywhere,
        # and infeasible classes mean no measurable consistent policy exists
        out = [p for p in out if is_time_consistent(env, theory, p)]
    return out


# ---------------------------------------------------------------------------
# value tables


@dataclass
class ValueTable:
    rows: list[tuple[str, dict[Theory, Fraction]]]
    decisions: dict[Theory, str]
    solutions: dict[Theory, SolveResult]


def reproduce_table(name: str, params: dict | None = None) -> ValueTable:
    """Value of every named policy under every theory, plus each theory's prescription."""
    from . import library

    entry = library.entry(name)
    env = library.build(name, params)
    rows = []
    for label, policy in entry.named_policies(env):
        rows.append((label, {t: value(t, env, policy) for t in Theory}))
    solutions = {t: solve(env, t) for t in Theory}
    decisions = {t: entry.describe(env, solutions[t]) for t in Theory}
    return ValueTable(rows, decisions, solutions)
