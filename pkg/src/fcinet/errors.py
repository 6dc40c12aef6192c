"""Exception types shared across the package.

The CLI maps InputError to exit code 2 and ConvergenceError to exit code 3.
"""


class InputError(ValueError):
    """Invalid data, file contents, or arguments that violate a contract."""


class AlignmentError(InputError):
    """Tables cannot be joined because their date ranges do not intersect."""


class InsufficientSampleError(InputError):
    """Sample too short for the requested lag order / regressor count."""


class RankDeficientError(InputError):
    """Design matrix is rank deficient; message names the collinear columns."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration budget.

    Carries the last iterate where meaningful (see attribute docs at raise
    sites).
    """
