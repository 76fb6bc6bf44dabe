"""Exception hierarchy shared by every dposmeter module."""

from __future__ import annotations


class DposmeterError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DposmeterError, ValueError):
    """An argument is outside the domain of the operation."""


class VoteLimitError(DomainError):
    pass


class MissingAccountError(DposmeterError, KeyError):
    def __init__(self, account_id: str, context: str = "") -> None:
        self.account_id = account_id
        msg = f"unknown account {account_id!r}"
        if context:
            msg = f"{msg} ({context})"
        super().__init__(msg)

    def __str__(self) -> str:
        return self.args[0]


class DanglingProxyError(DomainError):
    pass


class InsufficientCandidatesError(DomainError):
    pass


class DegenerateInputError(DomainError):
    pass


class RangeError(DomainError):
    pass


class DataError(DposmeterError, ValueError):
    """Input data is internally inconsistent (e.g. a repeated block height)."""


class FormatError(DataError):
    """A file does not follow its declared format."""


class ValidationError(DataError):
    """A loaded snapshot violates one or more ledger invariants."""

    def __init__(self, violations) -> None:
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


class FixtureNotFoundError(DposmeterError, KeyError):
    def __init__(self, name: str, available) -> None:
        self.name = name
        self.available = sorted(available)
        super().__init__(
            f"unknown fixture {name!r}; available: {', '.join(self.available)}"
        )

    def __str__(self) -> str:
        return self.args[0]
