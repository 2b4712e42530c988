"""Exception hierarchy.

``ValidationError`` subclasses signal contract violations in inputs or
configuration (CLI exit code 2); ``NumericBlowupError`` signals a diverging
recursive prediction (exit code 3).
"""

__all__ = [
    "MnarxError",
    "ValidationError",
    "ChannelMissingError",
    "LagOutOfRangeError",
    "TooShortError",
    "InvalidCountError",
    "SizeOverflowError",
    "UnderdeterminedError",
    "MissingGroundTruthError",
    "CyclicPlanError",
    "UnknownTransformError",
    "WindowTooLongError",
    "DimensionMismatchError",
    "LengthMismatchError",
    "EmptySeriesError",
    "DtMismatchError",
    "NonPositiveParamError",
    "NumericBlowupError",
]


class MnarxError(Exception):
    """Base class for all package errors."""


class ValidationError(MnarxError, ValueError):
    """Invalid input data or configuration."""


class ChannelMissingError(ValidationError):
    """A layout or plan references a channel the data does not provide."""


class LagOutOfRangeError(ValidationError):
    """A regressor would read outside the available time range."""


class TooShortError(ValidationError):
    """A realization is too short for the requested lag structure."""


class InvalidCountError(ValidationError):
    """A sample or row count is outside its admissible range."""


class SizeOverflowError(ValidationError):
    """Requested polynomial basis exceeds the configured size cap."""


class UnderdeterminedError(ValidationError):
    """Fewer design rows than coefficients to estimate."""


class MissingGroundTruthError(ValidationError):
    """The experimental design lacks a required intermediate-output channel."""


class CyclicPlanError(ValidationError):
    """A manifold stage references a channel not constructed before it."""


class UnknownTransformError(ValidationError):
    """Unrecognized direct-transform identifier."""


class WindowTooLongError(ValidationError):
    """Moving-average window exceeds the series length."""


class DimensionMismatchError(ValidationError):
    """Spatial grid or coefficient dimensions do not agree."""


class LengthMismatchError(ValidationError):
    """Two series that must share a time axis have different lengths."""


class EmptySeriesError(ValidationError):
    """An operation received no data points."""


class DtMismatchError(ValidationError):
    """Series time step differs from the one a model was trained at."""


class NonPositiveParamError(ValidationError):
    """A physical parameter that must be strictly positive is not."""


class NumericBlowupError(MnarxError, FloatingPointError):
    """Recursive prediction exceeded the instability guard."""
