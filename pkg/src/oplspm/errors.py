"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes: model/data problems are
reported as input errors, convergence failures separately, and anything
else propagates as an internal fault.
"""


class OplsError(Exception):
    """Base class for all package-specific errors."""


class ModelError(OplsError):
    """Invalid path model specification (bad config, cycles, empty blocks)."""


class DataError(OplsError):
    """Invalid or degenerate input data."""


class ConvergenceError(OplsError):
    """An iterative procedure failed to converge.

    Carries optional diagnostics so callers can inspect how far the
    procedure got before giving up.
    """

    def __init__(self, message, *, trace=None, best=None):
        super().__init__(message)
        self.trace = trace
        self.best = best


class EstimationError(OplsError):
    """Ending-phase estimation failed (e.g. singular inner system)."""
