"""Exception hierarchy shared by all modules."""


class SddError(Exception):
    """Base class for package errors."""


class InvalidConfigurationError(SddError, ValueError):
    pass


class InvalidParameterError(SddError, ValueError):
    pass


class DimensionError(SddError, ValueError):
    pass


class HypothesisViolationError(SddError, ValueError):
    pass


class NumericOverflowError(SddError, FloatingPointError):
    pass


class BlowUpError(SddError, FloatingPointError):
    """Raised when the discrete state leaves the finite range."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"blow-up detected at t={self.time:.6g}")


class OrderingError(SddError, ValueError):
    pass


class OutOfRangeError(SddError, ValueError):
    pass


class UnsupportedOracleError(SddError, ValueError):
    pass


class UndefinedDistanceError(SddError, ValueError):
    pass
