"""Exception hierarchy.

DataError covers bad inputs (shapes, lags, parsing, configuration) and maps
to CLI exit code 1; NumericError covers numerical failures (factorization,
conditioning, consistency) and maps to exit code 2.
"""


class MapfiltError(Exception):
    pass


class DataError(MapfiltError):
    pass


class InvalidLagError(DataError):
    pass


class LengthError(DataError):
    pass


class ShapeError(DataError):
    pass


class IngestError(DataError):
    pass


class NumericError(MapfiltError):
    pass


class FactorizationError(NumericError):
    pass


class ConditioningError(NumericError):
    pass


class ConsistencyError(NumericError):
    pass
