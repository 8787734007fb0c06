"""Exception types shared across the package."""


class ConsensusClockError(Exception):
    """Base class for all package errors."""


class DomainError(ConsensusClockError):
    """Argument outside the mathematical domain of a transform or series."""


class PreconditionError(ConsensusClockError):
    """Model precondition violated (e.g. p at or below the security threshold)."""

    def __init__(self, message, p_critical=None):
        super().__init__(message)
        self.p_critical = p_critical


class BracketError(ConsensusClockError):
    """Root bracket does not change sign."""


class SecurityThresholdError(ConsensusClockError):
    """Stylized-model parameters violate p*q > 1-p."""


class InsufficientDataError(ConsensusClockError):
    """Not enough samples/cycles for the requested statistic."""


class SchemaError(ConsensusClockError):
    """A CSV/JSON input does not match the documented schema."""
