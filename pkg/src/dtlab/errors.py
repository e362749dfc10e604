"""Exception types raised by the engine."""

from __future__ import annotations


class DtlabError(Exception):
    """Base class for all domain errors."""


class ZeroProbabilityEvent(DtlabError):
    """Conditioning on an event of measure zero."""


class UnreachableHistory(DtlabError):
    """A query was posed at a history the model assigns probability zero."""


class MissingKernelRow(DtlabError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class MissingPerceptFamily(DtlabError):
    """Savage decision theory was asked to decide without explicit P_a."""


class BudgetExceeded(DtlabError):
    def __init__(self, count: int, budget: int) -> None:
        super().__init__(f"{count} policies exceed the enumeration budget of {budget}")
        self.count = count
        self.budget = budget


class UnknownEnvironment(DtlabError):
    pass


class ParameterOutOfDomain(DtlabError):
    pass
