"""Exact finite probability tables.

Every probability is a :class:`fractions.Fraction`; nothing in here ever
rounds.  Distributions are immutable value objects over arbitrary hashable
outcomes.  The joint over hidden states and trajectories uses
:class:`Outcome`, and :class:`Event` expresses conjunctive cylinder sets over
such outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Union

from .errors import ZeroProbabilityEvent

Rational = Fraction

Step = tuple[str, str]


def as_rational(value: Any) -> Fraction:
    """Convert ints, Fractions and numeric strings to an exact Fraction.

    Floats are rejected: they already carry rounding error.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


@dataclass(frozen=True)
class Outcome:
    """One point (s, a_1 e_1 ... a_m e_m) of a joint distribution."""

    hidden_state: str
    trajectory: tuple[Step, ...]

    def action(self, step: int) -> str:
        return self.trajectory[step - 1][0]

    def percept(self, step: int) -> str:
        return self.trajectory[step - 1][1]


@dataclass(frozen=True)
class Event:
    """A conjunction of atomic constraints on an :class:`Outcome`.

    ``actions`` and ``percepts`` map 1-based step numbers to the required
    symbol.  The empty event is always true.
    """

    hidden_state: str | None = None
    actions: tuple[tuple[int, str], ...] = ()
    percepts: tuple[tuple[int, str], ...] = ()

    @classmethod
    def of(
        cls,
        hidden_state: str | None = None,
        actions: Mapping[int, str] | None = None,
        percepts: Mapping[int, str] | None = None,
    ) -> Event:
        return cls(
            hidden_state,
            tuple(sorted((actions or {}).items())),
            tuple(sorted((percepts or {}).items())),
        )

    @classmethod
    def prefix(
        cls,
        history: Iterable[Step],
        action: str | None = None,
        hidden_state: str | None = None,
    ) -> Event:
        """The cylinder of all trajectories starting with ``history`` (then ``action``)."""
        history = tuple(history)
        acts = {i: a for i, (a, _) in enumerate(history, 1)}
        pers = {i: e for i, (_, e) in enumerate(history, 1)}
        if action is not None:
            acts[len(history) + 1] = action
        return cls.of(hidden_state, acts, pers)

    def __and__(self, other: Event) -> Event:
        if (
            self.hidden_state is not None
            and other.hidden_state is not None
            and self.hidden_state != other.hidden_state
        ):
            return _EMPTY_MARKER
        acts = dict(self.actions)
        pers = dict(self.percepts)
        for table, extra in ((acts, other.actions), (pers, other.percepts)):
            for step, sym in extra:
                if table.get(step, sym) != sym:
                    return _EMPTY_MARKER
                table[step] = sym
        return Event.of(self.hidden_state or other.hidden_state, acts, pers)

    @property
    def max_step(self) -> int:
        steps = [i for i, _ in self.actions] + [i for i, _ in self.percepts]
        return max(steps, default=0)

    def matches(self, outcome: Outcome) -> bool:
        if self.hidden_state is not None and outcome.hidden_state != self.hidden_state:
            return False
        traj = outcome.trajectory
        for step, a in self.actions:
            if traj[step - 1][0] != a:
                return False
        for step, e in self.percepts:
            if traj[step - 1][1] != e:
                return False
        return True


class _Contradiction(Event):
    def matches(self, outcome: Outcome) -> bool:
        return False


_EMPTY_MARKER = _Contradiction()

Predicate = Union[Event, Callable[[Any], bool]]


def _predicate(ev: Predicate, first: Any) -> Callable[[Any], bool]:
    if isinstance(ev, Event):
        if isinstance(first, Outcome) and ev.max_step > len(first.trajectory):
            raise ValueError(
                f"event constrains step {ev.max_step} beyond lifetime {len(first.trajectory)}"
            )
        return ev.matches
    return ev


class FiniteDistribution:
    """An immutable, exactly normalized distribution over hashable outcomes.

    Zero-probability outcomes are dropped on construction.
    """

    __slots__ = ("_table",)

    def __init__(self, support: Mapping[Hashable, Fraction] | Iterable[tuple[Hashable, Fraction]]):
        items = support.items() if isinstance(support, Mapping) else support
        table: dict[Hashable, Fraction] = {}
        for outcome, p in items:
            p = as_rational(p)
            if p < 0:
                raise ValueError(f"negative probability {p} for {outcome!r}")
            if outcome in table:
                raise ValueError(f"duplicate support entry {outcome!r}")
            if p:
                table[outcome] = p
        total = sum(table.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self._table = table

    @classmethod
    def _trusted(cls, table: dict[Hashable, Fraction]) -> FiniteDistribution:
        obj = cls.__new__(cls)
        obj._table = table
        return obj

    @classmethod
    def from_weights(cls, weights: Mapping[Hashable, Fraction]) -> FiniteDistribution:
        """Normalize non-negative weights with positive total mass."""
        table = {o: w for o, w in weights.items() if w}
        total = sum(table.values(), Fraction(0))
        if total <= 0:
            raise ZeroProbabilityEvent("weights have zero total mass")
        return cls._trusted({o: w / total for o, w in table.items()})

    @classmethod
    def point(cls, outcome: Hashable) -> FiniteDistribution:
        return cls._trusted({outcome: Fraction(1)})

    def __getitem__(self, outcome: Hashable) -> Fraction:
        return self._table.get(outcome, Fraction(0))

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self._table == other._table

    def __hash__(self) -> int:
        return hash(frozenset(self._table.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{o!r}: {p}" for o, p in self._table.items())
        return f"FiniteDistribution({{{body}}})"

    def items(self):
        return self._table.items()

    def support(self) -> list[tuple[Hashable, Fraction]]:
        return list(self._table.items())

    def as_dict(self) -> dict[Hashable, Fraction]:
        return dict(self._table)

    def marginal(self, ev: Predicate) -> Fraction:
        if not self._table:
            return Fraction(0)
        pred = _predicate(ev, next(iter(self._table)))
        return sum((p for o, p in self._table.items() if pred(o)), Fraction(0))

    def condition(self, ev: Predicate) -> FiniteDistribution:
        pred = _predicate(ev, next(iter(self._table)))
        kept = {o: p for o, p in self._table.items() if pred(o)}
        mass = sum(kept.values(), Fraction(0))
        if mass == 0:
            raise ZeroProbabilityEvent(f"cannot condition on {ev!r}: probability zero")
        return FiniteDistribution._trusted({o: p / mass for o, p in kept.items()})

    def expectation(self, f: Callable[[Any], Fraction]) -> Fraction:
        return sum((p * as_rational(f(o)) for o, p in self._table.items()), Fraction(0))

    def map(self, f: Callable[[Any], Hashable]) -> FiniteDistribution:
        """Push the distribution forward through ``f``."""
        out: dict[Hashable, Fraction] = {}
        for o, p in self._table.items():
            key = f(o)
            out[key] = out.get(key, Fraction(0)) + p
        return FiniteDistribution._trusted(out)


def marginal(dist: FiniteDistribution, ev: Predicate) -> Fraction:
    return dist.marginal(ev)


def condition(dist: FiniteDistribution, ev: Predicate) -> FiniteDistribution:
    return dist.condition(ev)


def expectation(dist: FiniteDistribution, f: Callable[[Any], Fraction]) -> Fraction:
    return dist.expectation(f)
