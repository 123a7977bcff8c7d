"""Exception hierarchy.

Input problems derive from ``InputError`` (mapped to CLI exit code 2);
numerical problems derive from ``NumericalFailure`` (exit code 1).
"""


class SparsecastError(Exception):
    """Base class for every error raised by this package."""


class InputError(SparsecastError, ValueError):
    """Bad arguments, bad data or violated preconditions."""


class EmptyWindow(InputError):
    pass


class SeriesCountMismatch(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class InsufficientData(InputError):
    pass


class InsufficientHistory(InsufficientData):
    pass


class InvalidOrders(InputError):
    pass


class InvalidConfig(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


class InvalidSpec(InputError):
    pass


class TargetNotFound(InputError):
    def __init__(self, sensor_id):
        super().__init__(f"target sensor not found: {sensor_id}")
        self.sensor_id = sensor_id


class ParseError(InputError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class GridViolation(InputError):
    def __init__(self, sensor, timestamp, reason="off the sampling grid"):
        super().__init__(f"sensor {sensor} at {timestamp}: {reason}")
        self.sensor = sensor
        self.timestamp = timestamp


class TooSparse(InputError):
    def __init__(self, sensor, missing_fraction):
        super().__init__(
            f"sensor {sensor}: {missing_fraction:.1%} of samples missing (limit 5%)"
        )
        self.sensor = sensor
        self.missing_fraction = missing_fraction


class NumericalFailure(SparsecastError, ArithmeticError):
    """A factorization or solve did not produce a usable result."""


SolverFailure = NumericalFailure
