import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from dtlab import library
from dtlab.env import EMPTY, collapse_hidden_state
from dtlab.errors import UnreachableHistory
from dtlab.solver import enumerate_policies
from dtlab.values import (
    THEORIES,
    Policy,
    PolicyWindow,
    Theory,
    belief_expansion,
    evaluate,
    next_percept,
    percept_given_state,
    policy_condition,
    v_aev,
    v_cau,
    v_iterative,
    v_pev,
    value,
)
from oracle import Oracle, random_env, random_policy


def named(env_name, policy_name):
    env = library.build(env_name)
    return env, library.named_policy(env, env_name, policy_name)


def all_policies(env):
    return list(enumerate_policies(env))


def queries(env):
    for h in env.decision_points():
        yield h, None
        for a in env.actions:
            yield h, a


# -- published values -------------------------------------------------------------


def test_looking_values():
    env, p = named("newcomb_looking", "Incurious one-boxer")
    assert v_aev(env, p) == 990000
    _, p = named("newcomb_looking", "Curious one-boxer")
    assert v_pev(env, p) == 990000
    _, p = named("newcomb_looking", "Curious two-boxer")
    assert v_cau(env, p) == 501000
    _, p = named("newcomb_looking", "Incurious two-boxer")
    assert v_iterative("cau", env, p, form="expanded") == 501000


def test_precommit_signing_one_boxer():
    env, p = named("newcomb_precommit", "Signing one-boxer")
    assert v_cau(env, p) == 700000


def test_seq_toxoplasmosis_values():
    env, p1 = named("seq_toxoplasmosis", "pi1")
    _, p2 = named("seq_toxoplasmosis", "pi2")
    assert v_aev(env, p1) == Fraction(-30, 7)
    assert v_pev(env, p1) == Fraction(-110, 31)
    assert v_aev(env, p2) == v_pev(env, p2) == -4
    assert v_iterative("aev", env, p1) == Fraction(-30, 7)


def test_policy_window_conditional_seq_toxoplasmosis():
    env, p1 = named("seq_toxoplasmosis", "pi1")
    d = policy_condition(env, EMPTY, PolicyWindow(p1, 1, 2))
    assert d["K"] == Fraction(21, 31)
    assert d["S"] == Fraction(10, 31)
    assert d["K"] + d["S"] == 1


def test_single_action_window_is_action_conditional(lib_envs):
    for env in lib_envs.values():
        for p in all_policies(env)[:8]:
            for h in env.decision_points():
                if len(h) + 1 != env.lifetime:
                    continue
                window = PolicyWindow(p, len(h) + 1, len(h) + 1)
                assert policy_condition(env, h, window) == next_percept("aev", env, h, p(h))


def test_window_validation():
    env, p = named("seq_toxoplasmosis", "pi1")
    with pytest.raises(ValueError):
        PolicyWindow(p, 0, 1)
    with pytest.raises(ValueError):
        policy_condition(env, EMPTY, PolicyWindow(p, 2, 2))
    with pytest.raises(ValueError):
        policy_condition(env, EMPTY, PolicyWindow(p, 1, 3))


def test_belief_expansion_examples():
    env = library.build("newcomb")
    assert belief_expansion("cau", env, EMPTY) == env.prior
    assert belief_expansion("aev", env, EMPTY, "B_1")["F"] == Fraction(99, 100)
    env = library.build("newcomb_looking")
    h = (("B_2", "0"),)
    assert belief_expansion("aev", env, h, "B_1")["E"] == Fraction(1, 100)


def test_bare_history_pev_uses_current_window(lib_envs):
    for env in lib_envs.values():
        for p in all_policies(env):
            for h in env.decision_points():
                d = policy_condition(env, h, PolicyWindow(p, len(h) + 1, env.lifetime))
                a = p(h)
                expected = sum(
                    (q * (env.utility[e] + value("pev", env, p, h + ((a, e),))) for e, q in d.items()),
                    Fraction(0),
                )
                assert v_pev(env, p, h) == expected


# -- structural properties ----------------------------------------------------------


def test_recursive_equals_iterative_library(lib_envs):
    for env in lib_envs.values():
        for p in all_policies(env):
            for h, a in queries(env):
                for t in THEORIES:
                    reports = evaluate(t, env, p, h, a)
                    assert len({r.value for r in reports}) == 1, (env.name, h, a, t)


def test_terminal_histories_have_value_zero(lib_envs):
    for env in lib_envs.values():
        p = all_policies(env)[0]
        for h in env.histories():
            if len(h) == env.lifetime:
                for t in THEORIES:
                    assert value(t, env, p, h) == 0
                    assert v_iterative(t, env, p, h) == 0


def test_unreachable_queries_raise():
    env, p = named("newcomb_looking", "Fatalistic")
    for t in THEORIES:
        with pytest.raises(UnreachableHistory):
            value(t, env, p, (("B_2", "E"),))
        with pytest.raises(UnreachableHistory):
            v_iterative(t, env, p, (("B_1", "0"),), "B_1")


def _reconstruct(theory, env, h, a, p):
    post = belief_expansion(theory, env, h, a, policy=p)
    out = {}
    for s, w in post.items():
        for e, q in percept_given_state(theory, env, s, h, a, policy=p).items():
            out[e] = out.get(e, 0) + w * q
    return {e: q for e, q in out.items() if q}


def _check_expansion(env, p):
    for h in env.decision_points():
        for a in env.actions:
            for t in THEORIES:
                direct = next_percept(t, env, h, a, policy=p).as_dict()
                assert _reconstruct(t, env, h, a, p) == direct, (t, h, a)


def test_expansion_reconstruction_library(lib_envs):
    for env in lib_envs.values():
        for p in all_policies(env):
            _check_expansion(env, p)


def test_expansion_reconstruction_random():
    rng = random.Random(21)
    for _ in range(120):
        env = random_env(rng)
        _check_expansion(env, random_policy(rng, env))


def test_one_step_coincidence():
    rng = random.Random(22)
    for _ in range(100):
        env = random_env(rng)
        p = random_policy(rng, env)
        for h in env.decision_points():
            if len(h) == env.lifetime - 1:
                for a in env.actions:
                    assert v_aev(env, p, h, a) == v_pev(env, p, h, a)


def test_single_state_causal_equals_evidential():
    rng = random.Random(23)
    for _ in range(100):
        env = random_env(rng, states=1)
        p = random_policy(rng, env)
        for h, a in queries(env):
            assert v_cau(env, p, h, a) == v_aev(env, p, h, a)


def test_collapse_keeps_evidential_values(lib_envs):
    rng = random.Random(24)
    cases = [(env, p) for env in lib_envs.values() for p in all_policies(env)]
    for _ in range(60):
        env = random_env(rng)
        cases.append((env, random_policy(rng, env)))
    for env, p in cases:
        c = collapse_hidden_state(env)
        for h, a in queries(env):
            assert v_aev(c, p, h, a) == v_aev(env, p, h, a)
            assert v_pev(c, p, h, a) == v_pev(env, p, h, a)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10**9))
def test_recursive_equals_iterative_random(seed):
    rng = random.Random(seed)
    env = random_env(rng)
    p = random_policy(rng, env)
    for h, a in queries(env):
        for t in THEORIES:
            reports = evaluate(t, env, p, h, a)
            assert len({r.value for r in reports}) == 1


def test_oracle_library(lib_envs):
    for env in lib_envs.values():
        o = Oracle(env)
        for p in all_policies(env):
            for h, a in queries(env):
                for t in THEORIES:
                    assert value(t, env, p, h, a) == o.value(t.value, p, h, a)


def test_theory_aliases():
    assert Theory.parse("SAEDT") is Theory.AEV
    assert Theory.parse("spedt") is Theory.PEV
    assert Theory.parse("cdt") is Theory.CAU
    assert Theory.CAU.display == "SCDT"
    with pytest.raises(ValueError):
        Theory.parse("fdt")


def test_policy_identity_is_its_table():
    a = Policy({(): "x"}, name="one")
    b = Policy({(): "x"}, name="two")
    assert a == b and hash(a) == hash(b)
    with pytest.raises(KeyError):
        a((("x", "y"),))


def test_pev_needs_policy():
    env = library.build("newcomb")
    with pytest.raises(ValueError):
        next_percept("pev", env, EMPTY, "B_1")
