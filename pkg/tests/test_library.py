from fractions import Fraction

import pytest

from dtlab import dsl, library
from dtlab.env import equivalent, validate
from dtlab.errors import ParameterOutOfDomain, UnknownEnvironment
from dtlab.solver import solve
from dtlab.values import THEORIES

NAMES = ["newcomb", "toxoplasmosis", "newcomb_looking", "newcomb_precommit", "seq_toxoplasmosis"]


def test_catalog():
    assert [e.name for e in library.list_entries()] == NAMES
    with pytest.raises(UnknownEnvironment):
        library.entry("prisoners_dilemma")


@pytest.mark.parametrize("name", NAMES)
def test_entries_are_documented_and_valid(name):
    e = library.entry(name)
    assert e.notes
    env = e.build()
    assert validate(env).ok
    for p in e.params:
        assert p.doc and p.domain[0] < p.default < p.domain[1]


@pytest.mark.parametrize("name", NAMES)
def test_named_policies_are_total(name):
    env = library.build(name)
    for label, policy in library.entry(name).named_policies(env):
        assert set(policy.table) == set(env.decision_points()), label
        assert library.named_policy(env, name, label.upper()) == policy


def test_named_policy_counts():
    env = library.build("newcomb_looking")
    assert len(library.entry("newcomb_looking").named_policies(env)) == 6
    env = library.build("newcomb_precommit")
    assert len(library.entry("newcomb_precommit").named_policies(env)) == 4
    with pytest.raises(KeyError):
        library.named_policy(env, "newcomb_precommit", "Curious one-boxer")


@pytest.mark.parametrize("bad", [{"eps": 0}, {"eps": 1}, {"eps": "3/2"}, {"eps": "x"}, {"delta": "1/2"}])
def test_parameter_domain(bad):
    with pytest.raises(ParameterOutOfDomain):
        library.build("newcomb", bad)


def test_parameterless_entry_rejects_params():
    with pytest.raises(ParameterOutOfDomain):
        library.build("toxoplasmosis", {"eps": "1/2"})


def test_parameters_take_effect():
    env = library.build("newcomb", {"eps": "1/4"})
    assert env.action_probs("E", ())["B_1"] == Fraction(1, 4)


@pytest.mark.parametrize("name", NAMES)
def test_corpus_matches_builder(name, corpus_dir):
    lowered = dsl.load(corpus_dir / f"{name}.env")
    built = library.build(name)
    assert equivalent(lowered, built)
    assert dsl.serialize(lowered) == dsl.serialize(built)


def test_decision_strings():
    expected = {
        "newcomb": ("1-box", "1-box", "2-box"),
        "newcomb_precommit": ("not commit, 1-box", "not commit, 1-box", "commit, 1-box"),
        "newcomb_looking": ("not look, 1-box", "not look, 1-box", "indifferent, 2-box"),
        "toxoplasmosis": ("not pet", "not pet", "pet"),
        "seq_toxoplasmosis": ("doc, not pet", "no doc, not pet", "doc, pet"),
    }
    for name, row in expected.items():
        e = library.entry(name)
        env = e.build()
        assert tuple(e.describe(env, solve(env, t)) for t in THEORIES) == row, name
