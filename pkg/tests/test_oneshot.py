from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dtlab import library
from dtlab.errors import MissingPerceptFamily
from dtlab.oneshot import (
    OneShotProblem,
    causal_family,
    cdt_decide,
    edt_decide,
    evidential_family,
    project_step,
    sdt_decide,
)

eps_values = st.fractions(min_value=0, max_value=1, max_denominator=1000).filter(lambda e: 0 < e < 1)


def test_newcomb_edt_and_cdt():
    env = library.build("newcomb")
    edt = edt_decide(OneShotProblem(env))
    assert edt.values == {"B_1": 990000, "B_2": 11000}
    assert edt.best == "B_1" and not edt.tie
    cdt = cdt_decide(OneShotProblem(env))
    assert cdt.values == {"B_1": 500000, "B_2": 501000}
    assert cdt.best == "B_2"


def test_toxoplasmosis():
    env = library.build("toxoplasmosis")
    edt = edt_decide(OneShotProblem(env))
    assert edt.values == {"P": -7, "N": -2} and edt.best == "N"
    cdt = cdt_decide(OneShotProblem(env))
    assert cdt.values == {"P": -4, "N": -5} and cdt.best == "P"


@given(eps_values)
def test_newcomb_closed_forms(eps):
    env = library.build("newcomb", {"eps": eps})
    edt = edt_decide(OneShotProblem(env)).values
    assert edt["B_1"] == (1 - eps) * 1000000
    assert edt["B_2"] == 1000 + eps * 1000000
    cdt = cdt_decide(OneShotProblem(env)).values
    # two-boxing dominates by exactly the transparent box, whatever the predictor does
    assert cdt["B_2"] - cdt["B_1"] == 1000


@given(eps_values)
def test_edt_flips_only_near_chance(eps):
    best = edt_decide(OneShotProblem(library.build("newcomb", {"eps": eps}))).best
    threshold = Fraction(999, 2000)
    assert best == ("B_1" if eps < threshold else "B_2") or eps == threshold


def test_sdt_requires_percept_family():
    env = library.build("newcomb")
    with pytest.raises(MissingPerceptFamily):
        sdt_decide(OneShotProblem(env))


def test_sdt_reproduces_edt_and_cdt(lib_envs):
    for env in lib_envs.values():
        if env.lifetime != 1:
            continue
        problem = OneShotProblem(env)
        ev = sdt_decide(OneShotProblem(env, evidential_family(env)))
        ca = sdt_decide(OneShotProblem(env, causal_family(env)))
        assert ev.values == edt_decide(problem).values
        assert ca.values == cdt_decide(problem).values


def test_sdt_with_explicit_family():
    env = library.build("newcomb")
    family = {"B_1": {"O_M": Fraction(1)}, "B_2": {"O_T": Fraction(1)}}
    report = sdt_decide(OneShotProblem(env, family))
    assert report.values == {"B_1": 1000000, "B_2": 1000}


def test_tie_reported():
    env = library.build("newcomb")
    family = {"B_1": {"O_T": Fraction(1)}, "B_2": {"O_T": Fraction(1)}}
    report = sdt_decide(OneShotProblem(env, family))
    assert report.tie and report.best_actions == ("B_1", "B_2") and report.best == "B_1"


def test_lifetime_must_be_one():
    with pytest.raises(ValueError):
        OneShotProblem(library.build("newcomb_looking"))


def test_project_step_after_looking():
    env = library.build("newcomb_looking")
    step = project_step(env, (("B_1", "F"),))
    assert step.lifetime == 1
    assert edt_decide(OneShotProblem(step)).values == {"B_1": 1000000, "B_2": 1001000}
    assert cdt_decide(OneShotProblem(step)).best == "B_2"


def test_project_step_root_is_myopic():
    env = library.build("newcomb_precommit")
    # only the immediate percept counts, so the fee makes refusing look better
    report = edt_decide(OneShotProblem(project_step(env, ())))
    assert report.best == "B_2"
