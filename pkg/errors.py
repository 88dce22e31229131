"""Exception types raised by the SpineGrip modules.

Domain errors subclass ValueError so callers that only know the
built-in exceptions still catch them.
"""

from typing import List


class SpineGripError(Exception):
    """Base class for every SpineGrip error."""


class DomainError(SpineGripError, ValueError):
    """A value is outside the domain of an operation or type."""


class PhalanxIndexError(SpineGripError, IndexError):
    """A joint or phalanx index is out of range."""


class UndefinedContactError(DomainError):
    """Contact load requested with no spines touching."""


class SelfLockingAsperityError(DomainError):
    """mu * tan(beta) >= 1, so the effective friction is unbounded."""


class ClosureStateError(DomainError):
    """A finger has moved further than the pulling plate."""


class ConfigError(SpineGripError):
    """The scenario configuration failed validation."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} configuration error(s):\n{lines}")
