"""Exception hierarchy.

Verdicts (continuous / discontinuous, feasible / infeasible) are returned as
values; exceptions are reserved for malformed input and broken preconditions.
"""


class PwqError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PwqError, ValueError):
    pass


class PreconditionError(PwqError):
    pass


class DegenerateConeError(InvalidInputError):
    pass


class PartitionInvalidError(PwqError):
    def __init__(self, message, pair=None, report=None):
        super().__init__(message)
        self.pair = pair
        self.report = report


class UnsupportedDimensionError(PwqError):
    pass


class OutOfDomainError(PwqError):
    def __init__(self, message, time=None, state=None):
        super().__init__(message)
        self.time = time
        self.state = state


class NumericalInconsistencyError(PwqError):
    pass


class SolverError(PwqError):
    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status
