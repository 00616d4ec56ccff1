"""Exception hierarchy."""


class FrechetError(Exception):
    """Base class for all package errors."""


class InvalidObjectError(FrechetError, ValueError):
    """An object violates the invariants of its kind."""


class IncompatibleObjectsError(FrechetError, ValueError):
    """Objects of different kinds, dimensions or grids were combined."""


class DegenerateSampleError(FrechetError, ValueError):
    """The sample carries no information (e.g. all predictors identical)."""


class ConvergenceError(FrechetError, RuntimeError):
    """An iterative solver hit its iteration cap.

    ``iterations`` and ``residual`` carry the state at exit.
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class ParseError(FrechetError, ValueError):
    """Malformed input file; the message names the offending line."""
