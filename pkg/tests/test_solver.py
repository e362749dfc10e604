import random
from fractions import Fraction

import pytest

from dtlab import library
from dtlab.errors import BudgetExceeded
from dtlab.solver import (
    backward_induction,
    behavior_key,
    decision_classes,
    enumerate_policies,
    is_time_consistent,
    policy_at,
    policy_count,
    policy_index,
    solve,
)
from dtlab.values import THEORIES, Theory, action_values, value
from oracle import random_env


def looking():
    return library.build("newcomb_looking")


def test_counts_and_ordering():
    env = looking()
    policies = list(enumerate_policies(env))
    assert len(policies) == policy_count(env) == 16
    assert len(set(policies)) == 16
    for i, p in enumerate(policies):
        assert policy_at(env, i) == p
        assert policy_index(env, p) == i
    with pytest.raises(IndexError):
        policy_at(env, 16)


def test_behavioral_classes():
    assert len(list(enumerate_policies(looking(), behavioral=True))) == 6
    env = library.build("newcomb_precommit")
    assert len(list(enumerate_policies(env, behavioral=True))) == 4


def test_slices_partition_the_space():
    env = looking()
    parts = [list(enumerate_policies(env, start=lo, stop=lo + 5)) for lo in range(0, 16, 5)]
    assert [p for part in parts for p in part] == list(enumerate_policies(env))


def test_budget():
    with pytest.raises(BudgetExceeded) as exc:
        list(enumerate_policies(looking(), budget=15))
    assert exc.value.count == 16 and exc.value.budget == 15
    with pytest.raises(BudgetExceeded):
        solve(looking(), "aev", budget=3)


def test_curious_one_boxer_violates_under_pev():
    env = looking()
    p = library.named_policy(env, "newcomb_looking", "Curious one-boxer")
    check = is_time_consistent(env, "pev", p)
    assert not check
    by_history = {env.format_history(v.history): v for v in check.violations}
    v = by_history["L F"]
    assert v.prescribed == "B_1" and v.argmax == ("B_2",)
    assert v.values == {"B_1": 1000000, "B_2": 1001000}


def test_only_incurious_one_boxer_is_consistent_under_pev():
    env = looking()
    r = solve(env, "pev")
    assert [behavior_key(env, p) for p in r.behaviors(env)] == [
        behavior_key(env, library.named_policy(env, "newcomb_looking", "Incurious one-boxer"))
    ]
    assert r.value == 990000
    assert len(r.diagnostics) == 16 - len(r.ranked)


def test_scdt_looking_tie():
    env = looking()
    r = solve(env, "cau")
    assert r.value == 501000
    keys = {behavior_key(env, p) for p in r.behaviors(env)}
    expected = {
        behavior_key(env, library.named_policy(env, "newcomb_looking", n))
        for n in ("Curious two-boxer", "Incurious two-boxer")
    }
    assert keys == expected


def test_precommit_solutions():
    env = library.build("newcomb_precommit")
    signing = library.named_policy(env, "newcomb_precommit", "Signing one-boxer")
    refusing = library.named_policy(env, "newcomb_precommit", "Refusing one-boxer")
    causal = solve(env, "cau")
    assert [behavior_key(env, p) for p in causal.behaviors(env)] == [behavior_key(env, signing)]
    # off the signing path the causal optimum two-boxes
    assert causal.canonical((("B_2", "0"),)) == "B_2"
    for t in ("aev", "pev"):
        r = solve(env, t)
        assert [behavior_key(env, p) for p in r.behaviors(env)] == [behavior_key(env, refusing)]
        assert r.value == 990000


def test_seq_toxoplasmosis_solutions():
    env = library.build("seq_toxoplasmosis")
    assert solve(env, "aev").value == -4
    assert solve(env, "pev").value == Fraction(-110, 31)
    assert solve(env, "cau").value == -4


def test_solutions_are_consistent_and_maximal(lib_envs):
    for env in lib_envs.values():
        for t in THEORIES:
            r = solve(env, t)
            for p in r.policies:
                assert is_time_consistent(env, t, p)
                assert value(t, env, p) == r.value
            for p, v in r.ranked:
                assert v <= r.value
            assert [v for _, v in r.ranked] == sorted((v for _, v in r.ranked), reverse=True)


def test_backward_induction_matches_enumeration(lib_envs):
    for env in lib_envs.values():
        for t in (Theory.AEV, Theory.CAU):
            assert set(backward_induction(env, t)) == set(solve(env, t).policies)
    with pytest.raises(ValueError):
        backward_induction(looking(), "pev")


def test_ties_count_as_consistent():
    env = library.build("newcomb_looking")
    # the fatalistic policy ties at the root under every theory
    p = library.named_policy(env, "newcomb_looking", "Fatalistic")
    for t in THEORIES:
        vals = action_values(t, env, p, ())
        if len(set(vals.values())) == 1:
            assert p(()) in vals


def test_workers_give_identical_results():
    env = looking()
    for t in THEORIES:
        a, b = solve(env, t), solve(env, t, workers=3)
        assert a.policies == b.policies and a.ranked == b.ranked


def _with_random_infosets(rng, env):
    points = [h for h in env.decision_points() if h]
    by_len = {}
    for h in points:
        by_len.setdefault(len(h), []).append(h)
    sets = []
    for group in by_len.values():
        if len(group) > 1 and rng.random() < 0.7:
            sets.append(frozenset(rng.sample(group, 2)))
    return env.replace(infosets=tuple(sets))


def test_infosets_make_policies_measurable():
    env = looking().replace(infosets=(frozenset({(("B_1", "E"),), (("B_1", "F"),)}),))
    assert len(decision_classes(env)) == 3
    for p in enumerate_policies(env):
        assert p((("B_1", "E"),)) == p((("B_1", "F"),))
    r = solve(env, "cau")
    assert r.value == 501000


def test_random_envs_backward_induction_agrees():
    rng = random.Random(31)
    for i in range(150):
        env = random_env(rng, max_actions=2, max_lifetime=2)
        if i % 2:
            env = _with_random_infosets(rng, env)
        for t in (Theory.AEV, Theory.CAU):
            # solve() raises if the two methods disagree
            r = solve(env, t)
            assert set(r.backward_induction) == set(r.policies)
