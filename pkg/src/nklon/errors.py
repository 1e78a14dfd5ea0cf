"""Exception types shared across the package.

Each maps to a CLI exit code (see ``nklon.cli``).
"""


class NklonError(Exception):
    exit_code = 1


class ParameterError(NklonError, ValueError):
    exit_code = 2


class CapacityError(NklonError):
    exit_code = 3


class ConvergenceError(NklonError):
    exit_code = 4


class DivergenceError(NklonError, RuntimeError):
    exit_code = 4


class ConsistencyError(NklonError):
    exit_code = 1


class DocumentError(NklonError, ValueError):
    """Malformed instance document. ``path`` names the offending field."""

    exit_code = 2

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ZeroVarianceError(NklonError, ValueError):
    """A statistic is undefined because a sample has no spread."""

    exit_code = 2
