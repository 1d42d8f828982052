"""Exception hierarchy shared across the package.

The CLI maps ``ConfigError`` to exit code 2, ``DataError`` subclasses to
exit code 3 and ``InvariantViolation`` to exit code 4.
"""


class SaparaError(Exception):
    pass


class ConfigError(SaparaError):
    pass


class DataError(SaparaError):
    pass


class InvariantViolation(SaparaError):
    pass


class EmptyAfterNormalization(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ZeroVector(DataError):
    pass


class InvalidPosition(DataError):
    pass


class EmptyInput(DataError):
    pass


class LengthMismatch(DataError):
    pass


class DegenerateOps(DataError):
    pass


class EmptyCandidateSet(DataError):
    pass


class MalformedTrajectory(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


class DegenerateInput(DataError):
    pass
