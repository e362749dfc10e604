"""Brute-force reference values computed from the materialized trajectory joint.

Nothing here goes through the engine's value code.  Every conditional is a
ratio of sums over full trajectories (s, a_1 e_1 ... a_m e_m):

* aev: mass of trajectories with prefix h a e over those with prefix h a
* pev: the same, restricted to trajectories that follow the policy after step t
* cau: a mutilated joint in which the step-t action factor is deleted
"""

from __future__ import annotations

import random
from fractions import Fraction

from dtlab.env import EnvironmentModel, tabulate
from dtlab.values import Policy


def trajectories(env: EnvironmentModel):
    """Every full trajectory with positive probability, with its weight and action factors."""
    out = []

    def walk(s, h, w, factors):
        if len(h) == env.lifetime:
            out.append((s, h, w, tuple(factors)))
            return
        for a, pa in env.action_kernel[(s, h)].items():
            if not pa:
                continue
            for e, pe in env.percept_kernel[(s, h, a)].items():
                if pe:
                    walk(s, h + ((a, e),), w * pa * pe, factors + [pa])

    for s in env.states:
        if env.prior.get(s):
            walk(s, (), Fraction(env.prior[s]), [])
    return out


class Oracle:
    def __init__(self, env: EnvironmentModel):
        self.env = env
        self.traj = trajectories(env)
        self.prefix: dict = {}
        self.mutilated: dict = {}
        self._masses: dict = {}
        for s, h, w, factors in self.traj:
            for t in range(len(h)):
                key = (h[:t], h[t][0], h[t][1])
                self.prefix[key] = self.prefix.get(key, 0) + w
                self.mutilated[key] = self.mutilated.get(key, 0) + w / factors[t]

    def _policy_masses(self, policy: Policy) -> dict:
        if policy in self._masses:
            return self._masses[policy]
        masses: dict = {}
        for s, h, w, _ in self.traj:
            last = 0
            for k in range(len(h)):
                if h[k][0] != policy(h[:k]):
                    last = k + 1
            # the step-t belief conditions on following pi at steps t+1..m
            for t in range(max(last, 1), len(h) + 1):
                key = (h[: t - 1], h[t - 1][0], h[t - 1][1])
                masses[key] = masses.get(key, 0) + w
        self._masses[policy] = masses
        return masses

    def weights(self, theory: str, h, a, masses=None) -> dict:
        table = {"aev": self.prefix, "cau": self.mutilated, "pev": masses}[theory]
        raw = {e: table.get((h, a, e), 0) for e in self.env.percepts}
        total = sum(raw.values())
        if not total:
            raise ZeroDivisionError("conditioning event has probability zero")
        return {e: Fraction(v) / total for e, v in raw.items() if v}

    def value(self, theory: str, policy: Policy, h=(), a=None) -> Fraction:
        masses = self._policy_masses(policy) if theory == "pev" else None
        memo: dict = {}

        def q(h, a):
            if len(h) >= self.env.lifetime:
                return Fraction(0)
            key = (h, a)
            if key not in memo:
                total = Fraction(0)
                for e, p in self.weights(theory, h, a, masses).items():
                    nh = h + ((a, e),)
                    cont = q(nh, policy(nh)) if len(nh) < self.env.lifetime else 0
                    total += p * (self.env.utility[e] + cont)
                memo[key] = total
            return memo[key]

        if len(h) >= self.env.lifetime:
            return Fraction(0)
        return q(h, policy(h) if a is None else a)


# ---------------------------------------------------------------------------
# random small environments


def _simplex(rng: random.Random, keys, allow_zero: bool) -> dict:
    lo = 0 if allow_zero else 1
    while True:
        raw = {k: rng.randint(lo, 4) for k in keys}
        total = sum(raw.values())
        if total:
            return {k: Fraction(v, total) for k, v in raw.items()}


def random_env(
    rng: random.Random,
    max_states: int = 3,
    max_actions: int = 3,
    max_percepts: int = 3,
    max_lifetime: int = 3,
    states: int | None = None,
    lifetime: int | None = None,
) -> EnvironmentModel:
    """A random model satisfying action-positivity; percept rows may contain zeros."""
    n_s = states or rng.randint(1, max_states)
    S = tuple(f"s{i}" for i in range(n_s))
    A = tuple(f"a{i}" for i in range(rng.randint(1, max_actions)))
    E = tuple(f"e{i}" for i in range(rng.randint(1, max_percepts)))
    m = lifetime or rng.randint(1, max_lifetime)
    prior = _simplex(rng, S, allow_zero=n_s > 1)
    utility = {e: Fraction(rng.randint(-6, 6), rng.choice((1, 1, 2, 3))) for e in E}
    act: dict = {}
    per: dict = {}

    def action_rule(s, h):
        if (s, h) not in act:
            act[(s, h)] = _simplex(rng, A, allow_zero=False)
        return act[(s, h)]

    def percept_rule(s, h, a):
        if (s, h, a) not in per:
            per[(s, h, a)] = _simplex(rng, E, allow_zero=True)
        return per[(s, h, a)]

    return tabulate(S, A, E, m, prior, action_rule, percept_rule, utility, name="random")


def random_policy(rng: random.Random, env: EnvironmentModel) -> Policy:
    return Policy.from_rule(env, lambda h: rng.choice(env.actions))
