"""Exception types shared across the package."""


class DoaError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DoaError, ValueError):
    """Invalid scenario, experiment or training configuration."""


class DomainError(DoaError, ValueError):
    """Argument outside the domain an operation accepts."""


class ShapeError(DoaError, ValueError):
    """Array dimensions do not match what the operation expects."""


class NumericError(DoaError, ArithmeticError):
    """Numerical failure: non-convergence, NaN loss and similar."""
