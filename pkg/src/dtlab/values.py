"""Sequential value functions for the action-evidential, policy-evidential and
causal theories.

The three theories differ only in the belief they place on the next percept
``e_t`` after history ``h`` and action ``a``:

* ``aev`` conditions on the action, mu(e_t | h a);
* ``pev`` conditions on the action and on the policy being followed for the
  rest of the lifetime, mu(e_t | h a, pi_{t+1:m});
* ``cau`` intervenes on the action, mu(e_t | h, do(a)).

Each value is available in recursive form and in two flattened iterative
forms: one built from direct conditionals, one built from hidden-state
posteriors times per-state likelihoods.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .env import EMPTY, EnvironmentModel, History, do_action
from .errors import UnreachableHistory, ZeroProbabilityEvent
from .prob import FiniteDistribution


class Theory(str, Enum):
    AEV = "aev"
    PEV = "pev"
    CAU = "cau"

    @classmethod
    def parse(cls, name: str | Theory) -> Theory:
        if isinstance(name, Theory):
            return name
        key = name.strip().lower()
        aliases = {
            "aev": cls.AEV, "saedt": cls.AEV, "edt": cls.AEV,
            "pev": cls.PEV, "spedt": cls.PEV,
            "cau": cls.CAU, "scdt": cls.CAU, "cdt": cls.CAU,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown theory {name!r}") from None

    @property
    def display(self) -> str:
        return {"aev": "SAEDT", "pev": "SPEDT", "cau": "SCDT"}[self.value]


THEORIES = (Theory.AEV, Theory.PEV, Theory.CAU)


class Policy:
    """A deterministic decision table from histories to actions."""

    __slots__ = ("_table", "_key", "name")

    def __init__(self, table: Mapping[History, str], name: str = "") -> None:
        self._table = dict(table)
        self._key = frozenset(self._table.items())
        self.name = name

    @classmethod
    def from_rule(
        cls, env: EnvironmentModel, rule: Callable[[History], str], name: str = ""
    ) -> Policy:
        return cls({h: rule(h) for h in env.decision_points()}, name)

    @classmethod
    def constant(cls, env: EnvironmentModel, action: str) -> Policy:
        return cls.from_rule(env, lambda h: action, name=f"always {action}")

    def __call__(self, history: History) -> str:
        try:
            return self._table[history]
        except KeyError:
            raise KeyError(f"policy {self.name or '<anon>'} undefined at {history!r}") from None

    def get(self, history: History, default=None):
        return self._table.get(history, default)

    @property
    def table(self) -> dict[History, str]:
        return dict(self._table)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Policy) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Policy({self.name or len(self._table)})"


@dataclass(frozen=True)
class PolicyWindow:
    """pi restricted to steps ``start`` through ``stop`` (inclusive, 1-based)."""

    policy: Policy
    start: int
    stop: int

    def __post_init__(self) -> None:
        if not 1 <= self.start <= self.stop:
            raise ValueError(f"invalid window {self.start}:{self.stop}")


@dataclass(frozen=True)
class ValueReport:
    theory: Theory
    history: History
    action: str | None
    value: Fraction
    method: str  # "recursive" | "iterative-direct" | "iterative-expanded"


# ---------------------------------------------------------------------------
# policy-consistency likelihoods


def _follow_prob(
    env: EnvironmentModel, policy: Policy, state: str, history: History, stop: int, memo: dict
) -> Fraction:
    """mu(pi followed at steps len(h)+1..stop | s, h)."""
    if len(history) + 1 > stop:
        return Fraction(1)
    key = (state, history)
    if key in memo:
        return memo[key]
    a = policy(history)
    pa = env.action_probs(state, history).get(a, 0)
    total = Fraction(0)
    if pa:
        for e, pe in env.percept_probs(state, history, a).items():
            if pe:
                total += pe * _follow_prob(env, policy, state, history + ((a, e),), stop, memo)
        total *= pa
    memo[key] = total
    return total


class _Context:
    """Per-evaluation memo tables; discarded after each public call."""

    def __init__(self, env: EnvironmentModel, policy: Policy | None, stop: int | None = None):
        self.env = env
        self.policy = policy
        self.stop = env.lifetime if stop is None else stop
        self.follow: dict = {}
        self.values: dict = {}

    def follow_prob(self, state: str, history: History) -> Fraction:
        return _follow_prob(self.env, self.policy, state, history, self.stop, self.follow)


# ---------------------------------------------------------------------------
# next-percept beliefs, direct conditional form


def _check_step(env: EnvironmentModel, history: History) -> dict[str, Fraction]:
    weights = env.require_reachable(history)
    if len(history) >= env.lifetime:
        raise UnreachableHistory(f"no step remains after {env.format_history(history)!r}")
    return weights


def _aev_weights(env: EnvironmentModel, history: History, action: str) -> dict[str, Fraction]:
    # mu(h a e) / mu(h a), built from observable marginals
    weights = _check_step(env, history)
    num: dict[str, Fraction] = {}
    for s, w in weights.items():
        pa = env.action_probs(s, history).get(action, 0)
        if not pa:
            continue
        for e, pe in env.percept_probs(s, history, action).items():
            if pe:
                num[e] = num.get(e, Fraction(0)) + w * pa * pe
    mass = sum(num.values(), Fraction(0))
    if not mass:
        raise ZeroProbabilityEvent(
            f"action {action} has probability zero after {env.format_history(history)!r}"
        )
    return {e: v / mass for e, v in num.items()}


def _pev_weights(ctx: _Context, history: History, action: str) -> dict[str, Fraction]:
    # mu(h a e ∩ Pi_{t+1:m}) / mu(h a ∩ Pi_{t+1:m})
    env = ctx.env
    weights = _check_step(env, history)
    num: dict[str, Fraction] = {}
    for s, w in weights.items():
        pa = env.action_probs(s, history).get(action, 0)
        if not pa:
            continue
        for e, pe in env.percept_probs(s, history, action).items():
            if not pe:
                continue
            f = ctx.follow_prob(s, history + ((action, e),))
            if f:
                num[e] = num.get(e, Fraction(0)) + w * pa * pe * f
    mass = sum(num.values(), Fraction(0))
    if not mass:
        raise ZeroProbabilityEvent(
            f"policy window after {env.format_history(history, action)!r} has probability zero"
        )
    return {e: v / mass for e, v in num.items()}


def _cau_weights(env: EnvironmentModel, history: History, action: str) -> dict[str, Fraction]:
    _check_step(env, history)
    return do_action(env, history, action).as_dict()


def _weights(theory: Theory, ctx: _Context, history: History, action: str) -> dict[str, Fraction]:
    if theory is Theory.AEV:
        return _aev_weights(ctx.env, history, action)
    if theory is Theory.PEV:
        return _pev_weights(ctx, history, action)
    return _cau_weights(ctx.env, history, action)


def next_percept(
    theory: Theory | str,
    env: EnvironmentModel,
    history: History,
    action: str,
    policy: Policy | None = None,
) -> FiniteDistribution:
    """The theory's belief over e_t after ``history`` and ``action``.

    ``policy`` is required for ``pev`` (it supplies pi_{t+1:m}).
    """
    theory = Theory.parse(theory)
    if theory is Theory.PEV and policy is None:
        raise ValueError("policy-evidential beliefs need a policy")
    return FiniteDistribution.from_weights(_weights(theory, _Context(env, policy), history, action))


def policy_condition(
    env: EnvironmentModel, history: History, window: PolicyWindow
) -> FiniteDistribution:
    """mu(e_t | h ∩ Pi_{t:stop}): condition on the policy being followed from t on.

    Only the actions at steps ``window.start`` to ``window.stop`` constrain the
    event; the window must start at the current step.
    """
    t = len(history) + 1
    if window.start != t:
        raise ValueError(f"window starts at step {window.start}, history is at step {t}")
    if window.stop > env.lifetime:
        raise ValueError(f"window stops at {window.stop}, beyond lifetime {env.lifetime}")
    weights = _check_step(env, history)
    ctx = _Context(env, window.policy, window.stop)
    a = window.policy(history)
    num: dict[str, Fraction] = {}
    for s, w in weights.items():
        pa = env.action_probs(s, history).get(a, 0)
        if not pa:
            continue
        for e, pe in env.percept_probs(s, history, a).items():
            if pe:
                f = ctx.follow_prob(s, history + ((a, e),))
                if f:
                    num[e] = num.get(e, Fraction(0)) + w * pa * pe * f
    if not sum(num.values(), Fraction(0)):
        raise ZeroProbabilityEvent("policy window has probability zero")
    return FiniteDistribution.from_weights(num)


# ---------------------------------------------------------------------------
# hidden-state expansion


def belief_expansion(
    theory: Theory | str,
    env: EnvironmentModel,
    history: History,
    action: str | None = None,
    policy: Policy | None = None,
) -> dict[str, Fraction]:
    """Posterior over hidden states that the theory's next-percept belief mixes.

    * aev: mu(s | h a)
    * pev: mu(s | h a, pi_{t+1:m}) when ``action`` is given, otherwise
      mu(s | h, pi_{t:m})
    * cau: mu(s | h); the action plays no evidential role
    """
    theory = Theory.parse(theory)
    weights = _check_step(env, history)
    if theory is Theory.CAU:
        raw = dict(weights)
    elif theory is Theory.AEV:
        if action is None:
            raise ValueError("action-evidential posterior needs the next action")
        raw = {s: w * env.action_probs(s, history).get(action, 0) for s, w in weights.items()}
    else:
        if policy is None:
            raise ValueError("policy-evidential posterior needs a policy")
        ctx = _Context(env, policy)
        if action is None:
            raw = {s: w * ctx.follow_prob(s, history) for s, w in weights.items()}
        else:
            raw = {}
            for s, w in weights.items():
                pa = env.action_probs(s, history).get(action, 0)
                tail = Fraction(0)
                if pa:
                    for e, pe in env.percept_probs(s, history, action).items():
                        if pe:
                            tail += pe * ctx.follow_prob(s, history + ((action, e),))
                raw[s] = w * pa * tail
    total = sum(raw.values(), Fraction(0))
    if not total:
        raise ZeroProbabilityEvent("conditioning event has probability zero")
    return {s: w / total for s, w in raw.items() if w}


def percept_given_state(
    theory: Theory | str,
    env: EnvironmentModel,
    state: str,
    history: History,
    action: str,
    policy: Policy | None = None,
) -> dict[str, Fraction]:
    """Per-state likelihood of e_t that pairs with :func:`belief_expansion`.

    For aev and cau this is the kernel row mu(e_t | s, h a).  For pev it is
    mu(e_t | s, h a, pi_{t+1:m}), the kernel reweighted by how likely the
    policy is to be followed afterwards.
    """
    theory = Theory.parse(theory)
    row = env.percept_probs(state, history, action)
    if theory is not Theory.PEV:
        return {e: p for e, p in row.items() if p}
    ctx = _Context(env, policy)
    raw = {e: p * ctx.follow_prob(state, history + ((action, e),)) for e, p in row.items() if p}
    total = sum(raw.values(), Fraction(0))
    if not total:
        raise ZeroProbabilityEvent(f"policy cannot be followed in state {state}")
    return {e: w / total for e, w in raw.items() if w}


def _expanded_weights(
    theory: Theory, ctx: _Context, history: History, action: str
) -> dict[str, Fraction]:
    env = ctx.env
    # posterior × likelihood, with the pev pieces built from the shared memo
    weights = _check_step(env, history)
    if theory is Theory.CAU:
        post = {s: w for s, w in weights.items()}
        lik = {s: env.percept_probs(s, history, action) for s in post}
    elif theory is Theory.AEV:
        post = {s: w * env.action_probs(s, history).get(action, 0) for s, w in weights.items()}
        lik = {s: env.percept_probs(s, history, action) for s, w in post.items() if w}
    else:
        post, lik = {}, {}
        for s, w in weights.items():
            pa = env.action_probs(s, history).get(action, 0)
            if not pa:
                continue
            row = {
                e: pe * ctx.follow_prob(s, history + ((action, e),))
                for e, pe in env.percept_probs(s, history, action).items()
                if pe
            }
            tail = sum(row.values(), Fraction(0))
            if tail:
                post[s] = w * pa * tail
                lik[s] = {e: v / tail for e, v in row.items()}
    total = sum(post.values(), Fraction(0))
    if not total:
        raise ZeroProbabilityEvent("conditioning event has probability zero")
    out: dict[str, Fraction] = {}
    for s, w in post.items():
        if not w:
            continue
        for e, pe in lik[s].items():
            if pe:
                out[e] = out.get(e, Fraction(0)) + (w / total) * pe
    return out


# ---------------------------------------------------------------------------
# recursive values


def _recursive(theory: Theory, ctx: _Context, history: History, action: str) -> Fraction:
    env = ctx.env
    if len(history) >= env.lifetime:
        return Fraction(0)
    key = (history, action)
    if key in ctx.values:
        return ctx.values[key]
    total = Fraction(0)
    for e, w in _weights(theory, ctx, history, action).items():
        child = history + ((action, e),)
        cont = Fraction(0)
        if len(child) < env.lifetime:
            cont = _recursive(theory, ctx, child, ctx.policy(child))
        total += w * (env.utility[e] + cont)
    ctx.values[key] = total
    return total


def value(
    theory: Theory | str,
    env: EnvironmentModel,
    policy: Policy,
    history: History = EMPTY,
    action: str | None = None,
) -> Fraction:
    """V^pi(h) or V^pi(h a) for the given theory, by the defining recursion.

    A bare history is evaluated at ``a = pi(h)``.  Histories at or beyond the
    lifetime have value 0.  Unreachable histories raise.
    """
    theory = Theory.parse(theory)
    env.require_reachable(history)
    if len(history) >= env.lifetime:
        return Fraction(0)
    if action is None:
        action = policy(history)
    return _recursive(theory, _Context(env, policy), history, action)


def v_aev(env, policy, history=EMPTY, action=None) -> Fraction:
    return value(Theory.AEV, env, policy, history, action)


def v_pev(env, policy, history=EMPTY, action=None) -> Fraction:
    return value(Theory.PEV, env, policy, history, action)


def v_cau(env, policy, history=EMPTY, action=None) -> Fraction:
    return value(Theory.CAU, env, policy, history, action)


def action_values(
    theory: Theory | str, env: EnvironmentModel, policy: Policy, history: History
) -> dict[str, Fraction]:
    """V^pi(h a) for every action, sharing one memo table."""
    theory = Theory.parse(theory)
    env.require_reachable(history)
    ctx = _Context(env, policy)
    return {a: _recursive(theory, ctx, history, a) for a in env.actions}


# ---------------------------------------------------------------------------
# iterative values


_FORMS = {
    "direct": _weights,
    "expanded": _expanded_weights,
}


def v_iterative(
    theory: Theory | str,
    env: EnvironmentModel,
    policy: Policy,
    history: History = EMPTY,
    action: str | None = None,
    form: str = "direct",
) -> Fraction:
    """Flattened value: sum over k and e_{t:k} of u(e_k) times the product of beliefs.

    ``form="direct"`` multiplies direct conditionals; ``form="expanded"``
    multiplies hidden-state mixtures sum_s posterior(s) * likelihood(e | s).
    """
    theory = Theory.parse(theory)
    try:
        weigh = _FORMS[form]
    except KeyError:
        raise ValueError(f"unknown iterative form {form!r}") from None
    env.require_reachable(history)
    m = env.lifetime
    if len(history) >= m:
        return Fraction(0)
    ctx = _Context(env, policy)
    total = Fraction(0)
    # each frontier entry: (history so far, path probability prod_i w_i, next action)
    frontier = [(history, Fraction(1), policy(history) if action is None else action)]
    while frontier:
        nxt = []
        for h, prob, a in frontier:
            for e, w in weigh(theory, ctx, h, a).items():
                p = prob * w
                total += env.utility[e] * p
                child = h + ((a, e),)
                if len(child) < m:
                    nxt.append((child, p, policy(child)))
        frontier = nxt
    return total


def evaluate(
    theory: Theory | str,
    env: EnvironmentModel,
    policy: Policy,
    history: History = EMPTY,
    action: str | None = None,
) -> list[ValueReport]:
    """All three evaluation routes for one query."""
    theory = Theory.parse(theory)
    return [
        ValueReport(theory, history, action, value(theory, env, policy, history, action), "recursive"),
        ValueReport(
            theory, history, action,
            v_iterative(theory, env, policy, history, action, "direct"), "iterative-direct",
        ),
        ValueReport(
            theory, history, action,
            v_iterative(theory, env, policy, history, action, "expanded"), "iterative-expanded",
        ),
    ]


def reachable_under(env: EnvironmentModel, policy: Policy, history: History = EMPTY) -> Iterable[History]:
    """Decision points reachable from ``history`` while following ``policy``."""
    out = []
    frontier = [history]
    while frontier:
        nxt = []
        for h in frontier:
            if len(h) >= env.lifetime:
                continue
            out.append(h)
            a = policy(h)
            nxt.extend(c for c in env.children(h) if c[-1][0] == a)
        frontier = nxt
    return out
