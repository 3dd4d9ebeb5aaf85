"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI reports for it.
"""


class MultiOpError(Exception):
    """Base class for all library errors"""

    exit_code = 1


class ParameterError(MultiOpError, ValueError):
    """Invalid parameters, multi-indices or configuration values"""

    exit_code = 2


class NumericalError(MultiOpError):
    """A numerical procedure could not produce a certified answer"""

    exit_code = 3


class SingularSystemError(NumericalError):
    pass


class PoleError(NumericalError):
    pass


class IndeterminateSignError(NumericalError):
    """Interval evaluation straddles zero at the requested precision"""

    def __init__(self, message: str, bits: int):
        super().__init__(message)
        self.bits = bits


class IsolationError(NumericalError):
    pass


class UndecidableError(NumericalError):
    pass


class ContinuationError(NumericalError):
    pass


class EvaluationAtZeroError(NumericalError):
    pass
