"""Shared exception types.

Three failure families show up across the suite: a caller handed us
arguments outside a function's mathematical domain, a caller combined
objects that do not belong together, and a randomized routine gave up.
Keeping them as distinct types lets the CLI map them onto exit codes.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class UsageError(ValueError):
    """Inconsistent combination of otherwise valid objects."""


class GeneralPositionError(RuntimeError):
    """A configuration violates a general-position precondition.

    Carries enough context to name the offending pair of objects.
    """

    def __init__(self, message: str, *, offender: tuple | None = None):
        super().__init__(message)
        self.offender = offender


class SamplingError(RuntimeError):
    """Rejection sampling exceeded its iteration cap.

    ``acceptance_rate`` is the empirical acceptance probability observed
    before giving up, so callers can size a retry.
    """

    def __init__(self, message: str, acceptance_rate: float):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate
