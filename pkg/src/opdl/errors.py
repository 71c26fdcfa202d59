"""Exception types shared across the package."""

from __future__ import annotations


class OpdlError(Exception):
    """Base class for all package errors."""


class BudgetExceeded(OpdlError):
    """A bounded computation ran out of its state or size budget."""

    def __init__(self, what: str, limit: int) -> None:
        super().__init__(f"{what} exceeded budget {limit}")
        self.what = what
        self.limit = limit


class RegistryError(OpdlError):
    """A foreign program refers to an unknown semantics or definition."""


class UnboundName(OpdlError):
    """A process or choreography name has no definition."""

    def __init__(self, name: str) -> None:
        super().__init__(f"no definition for {name}")
        self.name = name
