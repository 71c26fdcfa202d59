"""Immutable term base class with cached structural hashing."""

from __future__ import annotations

from dataclasses import fields
from typing import Any


class Term:
    """Structural equality and hashing for frozen dataclasses.

    Subclasses are declared with ``@dataclass(frozen=True, eq=False)``. The
    hash is computed once and memoised, which matters because sequents are
    frozensets of deeply nested formulas.
    """

    @classmethod
    def _names(cls) -> tuple[str, ...]:
        names = cls.__dict__.get("_cached_names")
        if names is None:
            names = tuple(f.name for f in fields(cls))  # type: ignore[arg-type]
            setattr(cls, "_cached_names", names)
        return names

    def _values(self) -> tuple[Any, ...]:
        return tuple(getattr(self, n) for n in self._names())

    def __hash__(self) -> int:
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + self._values())
            object.__setattr__(self, "_h", h)
        return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._values() == other._values()  # type: ignore[attr-defined]

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def __str__(self) -> str:
        s = self.__dict__.get("_s")
        if s is None:
            s = self._render()
            object.__setattr__(self, "_s", s)
        return s

    def __repr__(self) -> str:
        return f"{type(self).__name__}<{self}>"

    def _render(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError
