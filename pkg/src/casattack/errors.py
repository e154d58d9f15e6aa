"""Exception hierarchy shared by all casattack modules."""

from __future__ import annotations


class CasAttackError(Exception):
    """Base class for every error raised by this package."""


class DivergenceError(CasAttackError, ArithmeticError):
    """A flow produced a non-finite derivative."""

    def __init__(self, message: str, last_state, time: float):
        super().__init__(message)
        self.last_state = last_state
        self.time = time


class ResamplingRequiredError(CasAttackError, ValueError):
    """Two trajectories are sampled on different grids."""


class DomainError(CasAttackError, ValueError):
    pass


class NotFoundError(CasAttackError, KeyError):
    pass


class InvalidActionError(CasAttackError, ValueError):
    pass


class IntegrityError(CasAttackError):
    """Embedded data failed its checksum."""


class BudgetExceededError(CasAttackError):
    pass


class NotInCatalogError(CasAttackError, KeyError):
    pass


class MixedUnitsError(CasAttackError, ValueError):
    pass


class ConfigError(CasAttackError, ValueError):
    """Configuration could not be parsed or validated.

    ``field`` names the offending key, ``line``/``column`` locate parse errors.
    """

    def __init__(self, message: str, field: str | None = None,
                 line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column


class TargetFailure(CasAttackError):
    """A target adapter raised while observing or acting."""
