"""Exception hierarchy shared across the package."""

from sklearn.exceptions import NotFittedError


class PreyHandlingError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PreyHandlingError, ValueError):
    """Malformed input file. ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(PreyHandlingError, ValueError):
    """Timestamps are not strictly increasing."""


class ConfigurationError(PreyHandlingError, ValueError):
    """Inconsistent configuration, e.g. a sampling-rate mismatch."""


class BalanceError(PreyHandlingError, ValueError):
    """Class balancing impossible (a class is missing)."""


class TrainingError(PreyHandlingError, ValueError):
    """Training data violates a trainer precondition."""


class ConvergenceError(PreyHandlingError, RuntimeError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, iterations=None):
        self.iterations = iterations
        super().__init__(message)


class NumericalError(PreyHandlingError, ArithmeticError):
    """Singular or otherwise ill-posed linear algebra."""


class ModelStateError(PreyHandlingError, NotFittedError):
    """Operation requires a trained model."""


__all__ = [
    "PreyHandlingError",
    "ParseError",
    "OrderingError",
    "ConfigurationError",
    "BalanceError",
    "TrainingError",
    "ConvergenceError",
    "NumericalError",
    "ModelStateError",
]
