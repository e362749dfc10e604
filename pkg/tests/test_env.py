import random
from fractions import Fraction

import pytest

from dtlab import library
from dtlab.env import (
    EMPTY,
    collapse_hidden_state,
    do_action,
    do_policy,
    equivalent,
    intervene,
    joint,
    tabulate,
    validate,
)
from dtlab.errors import MissingKernelRow, UnreachableHistory
from dtlab.prob import Event
from oracle import random_env, random_policy

HALF = Fraction(1, 2)


def test_library_envs_validate(lib_envs):
    for name, env in lib_envs.items():
        report = validate(env)
        assert report.ok, (name, report.issues)


def test_joint_is_a_distribution(lib_envs):
    for env in lib_envs.values():
        j = joint(env)
        assert sum(p for _, p in j.items()) == 1


def test_history_probability_matches_joint(lib_envs):
    for env in lib_envs.values():
        j = joint(env)
        for h in env.histories():
            assert env.prob(h) == j.marginal(Event.prefix(h))


def test_newcomb_posterior_after_one_boxing():
    env = library.build("newcomb")
    j = joint(env).condition(Event.of(actions={1: "B_1"}))
    assert j.marginal(Event.of("F")) == Fraction(99, 100)


def test_do_action_equals_intervened_joint(lib_envs):
    for env in lib_envs.values():
        for h in env.decision_points():
            t = len(h) + 1
            for a in env.actions:
                mut = intervene(env, t, a).condition(Event.prefix(h))
                expected = mut.map(lambda o: o.percept(t))
                assert do_action(env, h, a) == expected


def test_causal_ignores_action_evidence():
    env = library.build("newcomb")
    assert do_action(env, EMPTY, "B_1").as_dict() == {"O_0": HALF, "O_M": HALF}


def test_do_policy_equals_do_action_library(lib_envs):
    rng = random.Random(11)
    for env in lib_envs.values():
        policies = [random_policy(rng, env) for _ in range(120)]
        for p in policies:
            for h in env.decision_points():
                assert do_policy(env, h, p) == do_action(env, h, p(h))


def test_do_policy_equals_do_action_random():
    rng = random.Random(12)
    for _ in range(150):
        env = random_env(rng)
        p = random_policy(rng, env)
        for h in env.decision_points():
            assert do_policy(env, h, p) == do_action(env, h, p(h))


def test_unreachable_history_raises():
    env = library.build("newcomb_looking")
    with pytest.raises(UnreachableHistory):
        do_action(env, (("B_2", "E"),), "B_1")
    with pytest.raises(UnreachableHistory):
        env.require_reachable((("B_1", "0"),))


def test_missing_kernel_row():
    env = library.build("toxoplasmosis")
    with pytest.raises(MissingKernelRow):
        env.action_probs("T", (("P", "P_T"),))


def test_validate_flags_positivity_and_normalization():
    def act(s, h):
        return {"a": 1, "b": 0}

    def per(s, h, a):
        return {"x": Fraction(11, 10)}

    env = tabulate("s", "ab", "x", 1, {"s": 1}, act, per, {"x": 0})
    report = validate(env)
    assert not report
    assert report.of_kind("positivity")
    assert report.of_kind("normalization")


def test_validate_flags_bad_prior_and_missing_utility():
    env = tabulate("st", "a", "x", 1, {"s": HALF, "t": Fraction(1, 4)},
                   lambda s, h: {"a": 1}, lambda s, h, a: {"x": 1}, {})
    kinds = {i.kind for i in validate(env).issues}
    assert {"normalization", "utility"} <= kinds


def test_validate_missing_row():
    env = library.build("newcomb")
    broken = env.replace(percept_kernel={k: v for k, v in env.percept_kernel.items() if k[0] != "E"})
    assert validate(broken).of_kind("missing-row")


def test_history_text_round_trip(lib_envs):
    for env in lib_envs.values():
        for h in env.histories():
            text = env.format_history(h)
            assert env.parse_history(text) == (h, None)
            if len(h) < env.lifetime:
                for a in env.actions:
                    assert env.parse_history(env.format_history(h, a)) == (h, a)


def test_labels_resolve_as_actions():
    env = library.build("newcomb_looking")
    assert env.parse_history("L F B_1") == ((("B_1", "F"),), "B_1")
    with pytest.raises(ValueError):
        env.parse_history("L Z")


def test_collapse_preserves_observable_joint(lib_envs):
    rng = random.Random(13)
    envs = list(lib_envs.values()) + [random_env(rng) for _ in range(40)]
    for env in envs:
        c = collapse_hidden_state(env)
        assert validate(c).ok
        obs = joint(env).map(lambda o: o.trajectory)
        assert joint(c).map(lambda o: o.trajectory) == obs


def test_equivalent_is_extensional():
    a = library.build("newcomb")
    assert equivalent(a, library.build("newcomb"))
    assert not equivalent(a, library.build("newcomb", {"eps": Fraction(1, 10)}))


def test_models_pickle(lib_envs):
    import pickle

    env = lib_envs["seq_toxoplasmosis"]
    env.decision_points()
    again = pickle.loads(pickle.dumps(env))
    assert equivalent(env, again)
