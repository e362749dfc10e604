"""The five worked environments: two one-shot problems and three sequential ones."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .env import EMPTY, EnvironmentModel, History, tabulate
from .errors import ParameterOutOfDomain, UnknownEnvironment
from .prob import as_rational
from .values import Policy, reachable_under

HALF = Fraction(1, 2)
EPS = Fraction(1, 100)

# Newcomb payoffs shared by the three Newcomb variants
_NEWCOMB_U = {"O_0": 0, "O_T": 1000, "O_M": 1000000, "O_MT": 1001000}


def _box(state: str, action: str) -> str:
    return {("E", "B_1"): "O_0", ("E", "B_2"): "O_T", ("F", "B_1"): "O_M", ("F", "B_2"): "O_MT"}[
        (state, action)
    ]


def _prediction(state: str, eps: Fraction) -> dict[str, Fraction]:
    # the box is full exactly when one-boxing was predicted
    p1 = 1 - eps if state == "F" else eps
    return {"B_1": p1, "B_2": 1 - p1}


def newcomb(eps: Fraction = EPS) -> EnvironmentModel:
    return tabulate(
        states=("E", "F"),
        actions=("B_1", "B_2"),
        percepts=("O_0", "O_T", "O_M", "O_MT"),
        lifetime=1,
        prior={"E": HALF, "F": HALF},
        action_rule=lambda s, h: _prediction(s, eps),
        percept_rule=lambda s, h, a: {_box(s, a): 1},
        utility=_NEWCOMB_U,
        name="newcomb",
    )


def toxoplasmosis() -> EnvironmentModel:
    return tabulate(
        states=("T", "H"),
        actions=("P", "N"),
        percepts=("P_T", "N_T", "P_H", "N_H"),
        lifetime=1,
        prior={"T": HALF, "H": HALF},
        action_rule=lambda s, h: {"P": Fraction(4, 5), "N": Fraction(1, 5)}
        if s == "T"
        else {"P": Fraction(1, 5), "N": Fraction(4, 5)},
        percept_rule=lambda s, h, a: {f"{a}_{s}": 1},
        utility={"P_T": -9, "N_T": -10, "P_H": 1, "N_H": 0},
        name="toxoplasmosis",
    )


def newcomb_looking(eps: Fraction = EPS) -> EnvironmentModel:
    """Step 1: look (B_1, shown as L) or not (B_2, shown as N); step 2: Newcomb."""

    def act(s: str, h: History) -> dict[str, Fraction]:
        return {"B_1": HALF, "B_2": HALF} if not h else _prediction(s, eps)

    def per(s: str, h: History, a: str) -> dict[str, int]:
        if not h:
            return {s: 1} if a == "B_1" else {"0": 1}
        return {_box(s, a): 1}

    return tabulate(
        states=("E", "F"),
        actions=("B_1", "B_2"),
        percepts=("E", "F", "0", "O_0", "O_T", "O_M", "O_MT"),
        lifetime=2,
        prior={"E": HALF, "F": HALF},
        action_rule=act,
        percept_rule=per,
        utility={"E": 0, "F": 0, "0": 0, **_NEWCOMB_U},
        labels={(1, "B_1"): "L", (1, "B_2"): "N"},
        name="newcomb_looking",
    )


def newcomb_precommit(eps: Fraction = EPS) -> EnvironmentModel:
    """Step 1: sign a contract (B_1, shown as S) or not (B_2, shown as N); step 2: Newcomb.

    Signing costs 300,000 and fixes the prediction to one-boxing; two-boxing
    after signing costs a further 2,000.
    """

    def act(s: str, h: History) -> dict[str, Fraction]:
        if not h:
            return {"B_1": HALF, "B_2": HALF}
        if h[0] == ("B_1", "C"):
            return {"B_1": 1 - eps, "B_2": eps}
        return _prediction(s, eps)

    def per(s: str, h: History, a: str) -> dict[str, int]:
        if not h:
            return {"C": 1} if a == "B_1" else {"0": 1}
        if h[0][0] == "B_1":
            return {"O_M": 1} if a == "B_1" else {"O_MminusT": 1}
        return {_box(s, a): 1}

    return tabulate(
        states=("E", "F"),
        actions=("B_1", "B_2"),
        percepts=("C", "0", "O_0", "O_T", "O_minusT", "O_M", "O_MT", "O_MminusT"),
        lifetime=2,
        prior={"E": HALF, "F": HALF},
        action_rule=act,
        percept_rule=per,
        utility={
            "C": -300000, "0": 0, "O_minusT": -1000, "O_MminusT": 999000, **_NEWCOMB_U,
        },
        labels={(1, "B_1"): "S", (1, "B_2"): "N"},
        name="newcomb_precommit",
    )


def seq_toxoplasmosis() -> EnvironmentModel:
    """Step 1: see the doctor (Y) or not (N); step 2: pet a kitten (Y) or not (N).

    Percepts: C cured (fee), K kitten, S sick and did not pet, s sick and
    pet, P pet and healthy, 0 nothing happens.
    """

    def act(s: str, h: History) -> dict[str, Fraction]:
        if h == (("N", "K"),):
            return {"Y": Fraction(4, 5), "N": Fraction(1, 5)} if s == "T" else {
                "Y": Fraction(1, 5), "N": Fraction(4, 5)}
        return {"Y": HALF, "N": HALF}

    def per(s: str, h: History, a: str) -> dict[str, Fraction]:
        if not h:
            if a == "Y":
                return {"C": 1}
            return {"K": Fraction(1, 5), "S": Fraction(4, 5)} if s == "T" else {"K": 1}
        if h == (("N", "K"),):
            if s == "T":
                return {"s": 1} if a == "Y" else {"S": 1}
            return {"P": 1} if a == "Y" else {"0": 1}
        return {"0": 1}

    return tabulate(
        states=("T", "H"),
        actions=("Y", "N"),
        percepts=("C", "K", "S", "s", "P", "0"),
        lifetime=2,
        prior={"T": HALF, "H": HALF},
        action_rule=act,
        percept_rule=per,
        utility={"C": -4, "K": 0, "S": -10, "s": -9, "P": 1, "0": 0},
        labels={(1, "Y"): "Y_1", (1, "N"): "N_1", (2, "Y"): "Y_2", (2, "N"): "N_2"},
        name="seq_toxoplasmosis",
    )


# ---------------------------------------------------------------------------
# named policies and decision phrases


def _table(env: EnvironmentModel, rows: Mapping[History, str], name: str) -> Policy:
    # unspecified decision points get the first action
    return Policy.from_rule(env, lambda h: rows.get(h, env.actions[0]), name)


def _two_step_policies(env, words: tuple[str, str]) -> list[tuple[str, Policy]]:
    out = []
    for root, who in (("B_1", words[0]), ("B_2", words[1])):
        for a, how in (("B_1", "one-boxer"), ("B_2", "two-boxer")):
            rows = {EMPTY: root}
            rows.update({h: a for h in env.decision_points() if h and h[0][0] == root})
            out.append((f"{who} {how}", _table(env, rows, f"{who} {how}")))
    return out


def _looking_policies(env: EnvironmentModel) -> list[tuple[str, Policy]]:
    base = _two_step_policies(env, ("Curious", "Incurious"))
    le, lf = (("B_1", "E"),), (("B_1", "F"),)
    base.append(("Paradox-lover", _table(env, {EMPTY: "B_1", le: "B_1", lf: "B_2"}, "Paradox-lover")))
    base.append(("Fatalistic", _table(env, {EMPTY: "B_1", le: "B_2", lf: "B_1"}, "Fatalistic")))
    return base


def _precommit_policies(env: EnvironmentModel) -> list[tuple[str, Policy]]:
    return _two_step_policies(env, ("Signing", "Refusing"))


def _seqtoxo_policies(env: EnvironmentModel) -> list[tuple[str, Policy]]:
    return [
        ("pi1", Policy.from_rule(env, lambda h: "N", "pi1")),
        ("pi2", Policy.from_rule(env, lambda h: "Y" if not h else "N", "pi2")),
    ]


def _oneshot_policies(env: EnvironmentModel) -> list[tuple[str, Policy]]:
    return [(a, Policy.constant(env, a)) for a in env.actions]


def _phrase(policies, histories_of: Callable[[Policy], list[History]], words: Mapping[str, str]) -> str:
    if not policies:
        return "none"
    chosen = {p(h) for p in policies for h in histories_of(p)}
    if len(chosen) == 1:
        return words[chosen.pop()]
    return "indifferent"


def _on_path(env: EnvironmentModel, step: int):
    def pick(policy: Policy) -> list[History]:
        return [h for h in reachable_under(env, policy) if len(h) == step - 1]

    return pick


_BOX = {"B_1": "1-box", "B_2": "2-box"}


def _describe_newcomb(env, result) -> str:
    return _phrase(result.policies, lambda p: [EMPTY], _BOX)


def _describe_toxo(env, result) -> str:
    return _phrase(result.policies, lambda p: [EMPTY], {"P": "pet", "N": "not pet"})


def _describe_looking(env, result) -> str:
    first = _phrase(result.policies, lambda p: [EMPTY], {"B_1": "look", "B_2": "not look"})
    return f"{first}, {_phrase(result.policies, _on_path(env, 2), _BOX)}"


def _describe_precommit(env, result) -> str:
    first = _phrase(result.policies, lambda p: [EMPTY], {"B_1": "commit", "B_2": "not commit"})
    return f"{first}, {_phrase(result.policies, _on_path(env, 2), _BOX)}"


def _describe_seqtoxo(env, result) -> str:
    # the kitten decision is reported even when the chosen policy never meets it
    first = _phrase(result.policies, lambda p: [EMPTY], {"Y": "doc", "N": "no doc"})
    kitten = _phrase(result.policies, lambda p: [(("N", "K"),)], {"Y": "pet", "N": "not pet"})
    return f"{first}, {kitten}"


def _no_decision(env, result) -> str:
    return "none"


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class ParamDoc:
    name: str
    default: Fraction
    doc: str
    # open interval (low, high)
    domain: tuple[Fraction, Fraction] = (Fraction(0), Fraction(1))


@dataclass(frozen=True)
class LibraryEntry:
    name: str
    builder: Callable[..., EnvironmentModel]
    params: tuple[ParamDoc, ...]
    notes: str
    named_policies: Callable[[EnvironmentModel], list[tuple[str, Policy]]] = field(repr=False)
    describe: Callable = field(default=_no_decision, repr=False)

    @property
    def defaults(self) -> dict[str, Fraction]:
        return {p.name: p.default for p in self.params}

    def build(self, params: Mapping[str, object] | None = None) -> EnvironmentModel:
        values = self.defaults
        known = {p.name: p for p in self.params}
        for key, raw in (params or {}).items():
            if key not in known:
                raise ParameterOutOfDomain(
                    f"{self.name} has no parameter {key!r}"
                    + (f"; known: {', '.join(known)}" if known else "; it takes none")
                )
            try:
                v = as_rational(raw)
            except (TypeError, ValueError, ZeroDivisionError):
                raise ParameterOutOfDomain(f"{key}={raw!r} is not an exact rational") from None
            lo, hi = known[key].domain
            if not lo < v < hi:
                raise ParameterOutOfDomain(f"{key}={v} is outside the open interval ({lo}, {hi})")
            values[key] = v
        return self.builder(**values)


_EPS_DOC = ParamDoc(
    "eps", EPS, "predictor error: probability that the predicted action is not the one modelled"
)

CATALOG: tuple[LibraryEntry, ...] = (
    LibraryEntry(
        "newcomb",
        newcomb,
        (_EPS_DOC,),
        "one-shot Newcomb problem with a near-perfect predictor",
        _oneshot_policies,
        _describe_newcomb,
    ),
    LibraryEntry(
        "toxoplasmosis",
        toxoplasmosis,
        (),
        "one-shot toxoplasmosis problem: petting correlates with infection",
        _oneshot_policies,
        _describe_toxo,
    ),
    LibraryEntry(
        "newcomb_looking",
        newcomb_looking,
        (_EPS_DOC,),
        "Newcomb with the option to look into the opaque box first",
        _looking_policies,
        _describe_looking,
    ),
    LibraryEntry(
        "newcomb_precommit",
        newcomb_precommit,
        (_EPS_DOC,),
        "Newcomb with an optional costly contract that binds the prediction",
        _precommit_policies,
        _describe_precommit,
    ),
    LibraryEntry(
        "seq_toxoplasmosis",
        seq_toxoplasmosis,
        (),
        "doctor visit followed by a possible kitten encounter",
        _seqtoxo_policies,
        _describe_seqtoxo,
    ),
)

_BY_NAME = {e.name: e for e in CATALOG}


def list_entries() -> tuple[LibraryEntry, ...]:
    return CATALOG


def entry(name: str) -> LibraryEntry:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise UnknownEnvironment(
            f"unknown environment {name!r}; available: {', '.join(_BY_NAME)}"
        ) from None


def build(name: str, params: Mapping[str, object] | None = None) -> EnvironmentModel:
    return entry(name).build(params)


def named_policy(env: EnvironmentModel, entry_name: str, policy_name: str) -> Policy:
    wanted = policy_name.strip().lower()
    options = entry(entry_name).named_policies(env)
    for label, policy in options:
        if label.lower() == wanted:
            return policy
    raise KeyError(
        f"no policy {policy_name!r} for {entry_name}; known: {', '.join(l for l, _ in options)}"
    )
