"""Exception types shared across the package.

The CLI maps these onto exit codes, so raise the most specific one.
"""


class CavityError(Exception):
    """Base class for all package errors."""


class InvalidArgument(CavityError, ValueError):
    """An argument violates a documented precondition."""


class NotFound(CavityError, LookupError):
    """A searched-for feature (stopband, branch crossing, peak) is absent."""


class UnstableGeometry(CavityError, ValueError):
    """Gaussian-optics geometry outside the stable range 0 <= g <= 1."""


class FitError(CavityError, RuntimeError):
    """A least-squares fit failed to produce a meaningful result.

    ``best`` carries the best-so-far parameters when available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InputFormatError(CavityError, ValueError):
    """An input file or document could not be parsed."""
