"""Opaque wrapper for credentials so they never leak into logs or dumps."""

from __future__ import annotations


class Secret:
    """Holds a sensitive string; every rendering path shows a redacted form."""

    __slots__ = ("_value",)

    def __init__(self, value: str):
        self._value = value

    def reveal(self) -> str:
        return self._value

    def redacted(self) -> str:
        tail = self._value[-4:] if len(self._value) >= 4 else ""
        return "••••" + tail

    def __repr__(self) -> str:
        return f"Secret({self.redacted()!r})"

    def __str__(self) -> str:
        return self.redacted()

    def __bool__(self) -> bool:
        return bool(self._value)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Secret) and other._value == self._value

    def __hash__(self) -> int:
        return hash(("secret", self._value))
