"""
Error Hierarchy

Every error raised by the library derives from EliasThetaError and carries a
human-readable message plus an optional field naming the offending input
(for example ``W[2]`` for a bad channel row). The CLI maps the subclasses to
exit codes; library code never exits.
"""


class EliasThetaError(Exception):
    """
    Base exception for the library.

    Attributes:
        message: Human-readable error description
        field: Optional name of the input that caused the error
    """

    def __init__(self, message: str, field: str | None = None):
        self.message = message
        self.field = field
        super().__init__(self.message)


class ChannelValidationError(EliasThetaError):
    """Malformed channel, distribution, stochastic matrix or code."""


class PreconditionError(EliasThetaError):
    """An operation was called outside its domain (e.g. non-stationary V)."""


class OptimizationError(EliasThetaError):
    """Numeric failure: no handle with positive inner products, or no feasible certificate."""


class EnumerationGuardError(EliasThetaError):
    """The exhaustive oracle refused to enumerate more codes than the configured guard."""

    def __init__(self, message: str, count: int):
        self.count = count
        super().__init__(message, field="M")
