"""Factored environment models over a hidden state and an action/percept history.

A model fixes a prior over hidden states, an action kernel
``mu(a_t | s, h)`` (the agent's self-model) and a percept kernel
``mu(e_t | s, h a_t)``, all keyed by the full history ``h``.  The joint is the
causal product

    mu(s, h) = mu(s) * prod_i mu(a_i | s, h_<i) * mu(e_i | s, h_<i a_i)

with the hidden state feeding every node and every node feeding all later
ones.  Interventions delete action factors from this product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping

from .errors import MissingKernelRow, UnreachableHistory
from .prob import FiniteDistribution, Outcome, Step

History = tuple[Step, ...]

EMPTY: History = ()


@dataclass(frozen=True, eq=False)
class EnvironmentModel:
    states: tuple[str, ...]
    actions: tuple[str, ...]
    percepts: tuple[str, ...]
    lifetime: int
    prior: Mapping[str, Fraction]
    action_kernel: Mapping[tuple[str, History], Mapping[str, Fraction]]
    percept_kernel: Mapping[tuple[str, History, str], Mapping[str, Fraction]]
    utility: Mapping[str, Fraction]
    infosets: tuple[frozenset[History], ...] = ()
    # (step, action) -> display label, e.g. (1, "B_1") -> "L"
    labels: Mapping[tuple[int, str], str] = field(default_factory=dict)
    name: str = ""
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_memo"] = {}
        return state

    def __setstate__(self, state):
        object.__setattr__(self, "__dict__", state)

    # kernel access -------------------------------------------------------

    def action_probs(self, state: str, history: History) -> Mapping[str, Fraction]:
        try:
            return self.action_kernel[(state, history)]
        except KeyError:
            raise MissingKernelRow(
                f"no action row for state {state!r} at history {self.format_history(history)!r}"
            ) from None

    def percept_probs(self, state: str, history: History, action: str) -> Mapping[str, Fraction]:
        try:
            return self.percept_kernel[(state, history, action)]
        except KeyError:
            where = self.format_history(history, action)
            raise MissingKernelRow(f"no percept row for state {state!r} at {where!r}") from None

    # history weights -----------------------------------------------------

    def state_weights(self, history: History) -> dict[str, Fraction]:
        """mu(s, h) for every hidden state with positive weight."""
        key = ("alpha", history)
        memo = self._memo
        if key in memo:
            return memo[key]
        if not history:
            out = {s: p for s, p in self.prior.items() if p}
        else:
            parent = self.state_weights(history[:-1])
            a, e = history[-1]
            out = {}
            for s, w in parent.items():
                pa = self.action_probs(s, history[:-1]).get(a, 0)
                if not pa:
                    continue
                pe = self.percept_probs(s, history[:-1], a).get(e, 0)
                if pe:
                    out[s] = w * pa * pe
        memo[key] = out
        return out

    def prob(self, history: History) -> Fraction:
        """Observable marginal mu(h)."""
        return sum(self.state_weights(history).values(), Fraction(0))

    def is_reachable(self, history: History) -> bool:
        return len(history) <= self.lifetime and bool(self.state_weights(history))

    def require_reachable(self, history: History) -> dict[str, Fraction]:
        if len(history) > self.lifetime:
            raise UnreachableHistory(
                f"history {self.format_history(history)!r} is longer than lifetime {self.lifetime}"
            )
        weights = self.state_weights(history)
        if not weights:
            raise UnreachableHistory(
                f"history {self.format_history(history)!r} has probability zero"
            )
        return weights

    def children(self, history: History) -> Iterator[History]:
        """Positive-probability one-step extensions of ``history``, in alphabet order."""
        weights = self.state_weights(history)
        for a in self.actions:
            for e in self.percepts:
                if any(
                    self.action_probs(s, history).get(a, 0)
                    and self.percept_probs(s, history, a).get(e, 0)
                    for s in weights
                ):
                    yield history + ((a, e),)

    def histories(self, max_length: int | None = None) -> list[History]:
        """All positive-probability histories up to ``max_length``, breadth first."""
        key = ("histories", max_length)
        if key in self._memo:
            return self._memo[key]
        limit = self.lifetime if max_length is None else max_length
        out: list[History] = []
        frontier: list[History] = [EMPTY]
        while frontier:
            out.extend(frontier)
            if len(frontier[0]) >= limit:
                break
            frontier = [c for h in frontier for c in self.children(h)]
        self._memo[key] = out
        return out

    def decision_points(self) -> list[History]:
        """Histories at which the agent acts: mu(h) > 0 and len(h) < lifetime."""
        return self.histories(self.lifetime - 1)

    def history_sort_key(self, history: History) -> tuple:
        ai = {a: i for i, a in enumerate(self.actions)}
        ei = {e: i for i, e in enumerate(self.percepts)}
        return (len(history), tuple((ai[a], ei[e]) for a, e in history))

    # display -------------------------------------------------------------

    def label(self, step: int, action: str) -> str:
        return self.labels.get((step, action), action)

    def format_history(self, history: History, action: str | None = None) -> str:
        parts: list[str] = []
        for i, (a, e) in enumerate(history, 1):
            parts += [self.label(i, a), e]
        if action is not None:
            parts.append(self.label(len(history) + 1, action))
        return " ".join(parts)

    def parse_history(self, text: str | Iterable[str]) -> tuple[History, str | None]:
        """Parse ``"L F B_1"``-style text into (history, trailing action or None).

        Step labels are accepted in action positions alongside raw ids.
        """
        tokens = text.split() if isinstance(text, str) else list(text)
        steps: list[Step] = []
        trailing = None
        for i in range(0, len(tokens), 2):
            step = i // 2 + 1
            a = self._resolve_action(step, tokens[i])
            if i + 1 == len(tokens):
                trailing = a
                break
            e = tokens[i + 1]
            if e not in self.percepts:
                raise ValueError(f"unknown percept {e!r} at step {step}")
            steps.append((a, e))
        return tuple(steps), trailing

    def _resolve_action(self, step: int, token: str) -> str:
        for (st, a), lab in self.labels.items():
            if st == step and lab == token:
                return a
        if token in self.actions:
            return token
        raise ValueError(f"unknown action {token!r} at step {step}")

    def replace(self, **changes) -> EnvironmentModel:
        fields_ = {
            k: getattr(self, k)
            for k in (
                "states", "actions", "percepts", "lifetime", "prior", "action_kernel",
                "percept_kernel", "utility", "infosets", "labels", "name",
            )
        }
        fields_.update(changes)
        return EnvironmentModel(**fields_)


def tabulate(
    states: Iterable[str],
    actions: Iterable[str],
    percepts: Iterable[str],
    lifetime: int,
    prior: Mapping[str, Fraction],
    action_rule: Callable[[str, History], Mapping[str, Fraction]],
    percept_rule: Callable[[str, History, str], Mapping[str, Fraction]],
    utility: Mapping[str, Fraction],
    **extra,
) -> EnvironmentModel:
    """Build a model by evaluating kernel rules on every (s, h) reachable for s."""
    states, actions, percepts = tuple(states), tuple(actions), tuple(percepts)
    act: dict[tuple[str, History], dict[str, Fraction]] = {}
    per: dict[tuple[str, History, str], dict[str, Fraction]] = {}
    for s in states:
        if not prior.get(s):
            continue
        frontier: list[History] = [EMPTY]
        for _ in range(lifetime):
            nxt: list[History] = []
            for h in frontier:
                row = {a: Fraction(p) for a, p in action_rule(s, h).items()}
                act[(s, h)] = row
                for a in actions:
                    if not row.get(a):
                        continue
                    prow = {e: Fraction(p) for e, p in percept_rule(s, h, a).items()}
                    per[(s, h, a)] = prow
                    nxt.extend(h + ((a, e),) for e in percepts if prow.get(e))
            frontier = nxt
    return EnvironmentModel(
        states=states,
        actions=actions,
        percepts=percepts,
        lifetime=lifetime,
        prior={s: Fraction(p) for s, p in prior.items()},
        action_kernel=act,
        percept_kernel=per,
        utility={e: Fraction(u) for e, u in utility.items()},
        **extra,
    )


# joint and interventions ---------------------------------------------------


def joint(env: EnvironmentModel) -> FiniteDistribution:
    """The full joint over (s, a_1 e_1 ... a_m e_m), zero entries dropped."""
    table: dict[Outcome, Fraction] = {}

    def walk(s: str, h: History, w: Fraction) -> None:
        if len(h) == env.lifetime:
            table[Outcome(s, h)] = w
            return
        for a, pa in env.action_probs(s, h).items():
            if not pa:
                continue
            for e, pe in env.percept_probs(s, h, a).items():
                if pe:
                    walk(s, h + ((a, e),), w * pa * pe)

    for s in env.states:
        p = env.prior.get(s, 0)
        if p:
            walk(s, EMPTY, Fraction(p))
    return FiniteDistribution(table)


def intervene(env: EnvironmentModel, step: int, action: str) -> FiniteDistribution:
    """Joint under do(a_step := action): the step's action factor is deleted."""
    table: dict[Outcome, Fraction] = {}

    def walk(s: str, h: History, w: Fraction) -> None:
        if len(h) == env.lifetime:
            table[Outcome(s, h)] = w
            return
        if len(h) + 1 == step:
            choices = [(action, Fraction(1))]
        else:
            choices = [(a, p) for a, p in env.action_probs(s, h).items() if p]
        for a, pa in choices:
            for e, pe in env.percept_probs(s, h, a).items():
                if pe:
                    walk(s, h + ((a, e),), w * pa * pe)

    for s in env.states:
        p = env.prior.get(s, 0)
        if p:
            walk(s, EMPTY, Fraction(p))
    return FiniteDistribution(table)


def do_action(env: EnvironmentModel, history: History, action: str) -> FiniteDistribution:
    """mu(e_t | h, do(a_t)): intervene on the next action only.

    The action factor mu(a_t | s, h) is removed from the product rather than
    conditioned on, so the weight of each hidden state stays at mu(s | h).
    """
    weights = env.require_reachable(history)
    if len(history) >= env.lifetime:
        raise UnreachableHistory("no action remains after the final step")
    out: dict[str, Fraction] = {}
    for s, w in weights.items():
        for e, pe in env.percept_probs(s, history, action).items():
            if pe:
                out[e] = out.get(e, Fraction(0)) + w * pe
    return FiniteDistribution.from_weights(out)


def do_policy(
    env: EnvironmentModel, history: History, policy, horizon: int | None = None
) -> FiniteDistribution:
    """mu(e_t | h, do(pi_{t:m})): intervene on every action from t to the horizon.

    All action factors from step t to m are replaced by the policy's choices
    and the percepts e_{t+1:m} are summed out explicitly.
    """
    m = env.lifetime if horizon is None else horizon
    weights = env.require_reachable(history)
    t = len(history) + 1
    if t > m:
        raise UnreachableHistory("no action remains after the final step")
    out: dict[str, Fraction] = {}

    def future(s: str, h: History, w: Fraction, first: str) -> None:
        if len(h) >= m:
            out[first] = out.get(first, Fraction(0)) + w
            return
        a = policy(h)
        for e, pe in env.percept_probs(s, h, a).items():
            if pe:
                future(s, h + ((a, e),), w * pe, first)

    for s, w in weights.items():
        a = policy(history)
        for e, pe in env.percept_probs(s, history, a).items():
            if pe:
                future(s, history + ((a, e),), w * pe, e)
    return FiniteDistribution.from_weights(out)


# validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    kind: str  # "normalization" | "positivity" | "missing-row" | "alphabet" | "utility" | "infoset"
    message: str
    state: str | None = None
    history: History | None = None


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.ok

    def of_kind(self, kind: str) -> list[Issue]:
        return [i for i in self.issues if i.kind == kind]


def _check_row(row: Mapping[str, Fraction], alphabet: tuple[str, ...]) -> str | None:
    unknown = [k for k in row if k not in alphabet]
    if unknown:
        return f"unknown symbols {unknown}"
    neg = [k for k, p in row.items() if p < 0]
    if neg:
        return f"negative probabilities for {neg}"
    total = sum(row.values(), Fraction(0))
    if total != 1:
        return f"row sums to {total}, not 1"
    return None


def validate(env: EnvironmentModel) -> ValidationReport:
    """Report every violated invariant; never raises."""
    issues: list[Issue] = []
    for kind, alphabet in (("states", env.states), ("actions", env.actions), ("percepts", env.percepts)):
        if not alphabet:
            issues.append(Issue("alphabet", f"{kind} alphabet is empty"))
        if len(set(alphabet)) != len(alphabet):
            issues.append(Issue("alphabet", f"{kind} alphabet has duplicates"))
    if env.lifetime < 1:
        issues.append(Issue("alphabet", f"lifetime must be positive, got {env.lifetime}"))
    problem = _check_row(env.prior, env.states)
    if problem:
        issues.append(Issue("normalization", f"prior: {problem}"))
    missing_u = [e for e in env.percepts if e not in env.utility]
    if missing_u:
        issues.append(Issue("utility", f"no utility for percepts {missing_u}"))
    if issues:
        return ValidationReport(tuple(issues))

    for s in env.states:
        if not env.prior.get(s):
            continue
        frontier: list[History] = [EMPTY]
        for _ in range(env.lifetime):
            nxt: list[History] = []
            for h in frontier:
                where = env.format_history(h) or "<empty>"
                row = env.action_kernel.get((s, h))
                if row is None:
                    issues.append(Issue("missing-row", f"no action row for {s} at {where}", s, h))
                    continue
                problem = _check_row(row, env.actions)
                if problem:
                    issues.append(Issue("normalization", f"action row {s} | {where}: {problem}", s, h))
                    continue
                zero = [a for a in env.actions if not row.get(a)]
                if zero:
                    issues.append(
                        Issue(
                            "positivity",
                            f"actions {zero} have probability zero for state {s} at {where}",
                            s,
                            h,
                        )
                    )
                for a in env.actions:
                    if not row.get(a):
                        continue
                    prow = env.percept_kernel.get((s, h, a))
                    w = env.format_history(h, a)
                    if prow is None:
                        issues.append(Issue("missing-row", f"no percept row for {s} at {w}", s, h))
                        continue
                    problem = _check_row(prow, env.percepts)
                    if problem:
                        issues.append(Issue("normalization", f"percept row {s} | {w}: {problem}", s, h))
                        continue
                    nxt.extend(h + ((a, e),) for e in env.percepts if prow.get(e))
            frontier = nxt

    for group in env.infosets:
        for h in group:
            if len(h) >= env.lifetime:
                issues.append(
                    Issue("infoset", f"infoset member {env.format_history(h)!r} is not a decision point")
                )
    return ValidationReport(tuple(issues))


# hidden-state collapse -------------------------------------------------------


def collapse_hidden_state(env: EnvironmentModel, state_name: str = "s0") -> EnvironmentModel:
    """The observably equivalent model with a single hidden state.

    mu'(s0, h) is the sum over s of mu(s, h); kernels become the observable
    conditionals mu(a_t | h) and mu(e_t | h a_t).
    """
    act: dict[tuple[str, History], dict[str, Fraction]] = {}
    per: dict[tuple[str, History, str], dict[str, Fraction]] = {}
    for h in env.decision_points():
        weights = env.state_weights(h)
        total = sum(weights.values(), Fraction(0))
        arow: dict[str, Fraction] = {}
        for a in env.actions:
            wa = {s: w * env.action_probs(s, h).get(a, 0) for s, w in weights.items()}
            mass = sum(wa.values(), Fraction(0))
            if not mass:
                continue
            arow[a] = mass / total
            prow: dict[str, Fraction] = {}
            for s, w in wa.items():
                if not w:
                    continue
                for e, pe in env.percept_probs(s, h, a).items():
                    if pe:
                        prow[e] = prow.get(e, Fraction(0)) + w * pe / mass
            per[(state_name, h, a)] = prow
        act[(state_name, h)] = arow
    return env.replace(
        states=(state_name,),
        prior={state_name: Fraction(1)},
        action_kernel=act,
        percept_kernel=per,
        name=f"{env.name}/collapsed" if env.name else "collapsed",
    )


def equivalent(a: EnvironmentModel, b: EnvironmentModel) -> bool:
    """Extensional equality: same alphabets, lifetime, utilities and joint."""
    return (
        set(a.states) == set(b.states)
        and set(a.actions) == set(b.actions)
        and set(a.percepts) == set(b.percepts)
        and a.lifetime == b.lifetime
        and {e: a.utility[e] for e in a.percepts} == {e: b.utility[e] for e in b.percepts}
        and joint(a) == joint(b)
    )
