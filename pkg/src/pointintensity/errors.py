"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class PointIntensityError(Exception):
    exit_code = 1


class ConfigurationError(PointIntensityError, ValueError):
    """Inconsistent or unusable configuration (grid/horizon mismatch, bad flags)."""

    exit_code = 2


class ParameterError(PointIntensityError, ValueError):
    """A distribution or algorithm parameter is outside its valid range."""

    exit_code = 2


class DataError(PointIntensityError, ValueError):
    """Observations violate the model's assumptions (e.g. event outside [0, T])."""

    exit_code = 3


class NumericalError(PointIntensityError, ArithmeticError):
    exit_code = 4
