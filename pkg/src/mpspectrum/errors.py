"""Exception types raised across the package."""


class MPSpectrumError(Exception):
    """Base class for all package errors."""


class DomainError(MPSpectrumError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConvergenceError(MPSpectrumError, RuntimeError):
    """An iterative procedure stopped before reaching its tolerance.

    ``best`` holds the last (best) estimate and ``residual`` its error
    measure, so callers can decide whether the partial result is usable.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ConsistencyError(MPSpectrumError, RuntimeError):
    """A converged result violates an identity it must satisfy."""


class DegenerateEdgeError(MPSpectrumError, ValueError):
    """A stationary point of x(h) is an inflection, not a support edge."""
