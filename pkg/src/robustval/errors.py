"""Exception hierarchy shared across the package."""


class RobustvalError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(RobustvalError):
    """Input does not match the shape a network or layer expects."""


class FormatError(RobustvalError):
    """Malformed network or dataset file."""


class DataError(RobustvalError):
    """Dataset contents violate the documented constraints."""


class TrainingError(RobustvalError):
    """Training diverged (non-finite loss)."""


class InsufficientSampleError(RobustvalError):
    """Too few samples for the normality test to be meaningful."""


class DegenerateSampleError(RobustvalError):
    """Sample variance is zero; the normality statistic is undefined."""
