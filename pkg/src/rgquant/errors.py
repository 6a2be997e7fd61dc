"""Exception types raised across the package."""


class RGQuantError(Exception):
    """Base class for package errors."""


class DataError(RGQuantError, ValueError):
    """Malformed, misordered or insufficient input data."""

    def __init__(self, message: str, line: int | None = None, day: int | None = None):
        self.line = line
        self.day = day
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if day is not None:
            prefix.append(f"day {day}")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


class ParseError(DataError):
    pass


class OrderingError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class NumericError(RGQuantError, ArithmeticError):
    pass


class ConfigurationError(RGQuantError, ValueError):
    pass


class SingularDesignError(RGQuantError, ArithmeticError):
    """Design matrix is rank deficient."""


class OptimizationError(RGQuantError, RuntimeError):
    pass
