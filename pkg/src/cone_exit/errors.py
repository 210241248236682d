"""Exception types shared across the package."""


class ConeExitError(Exception):
    """Base class for errors raised by cone_exit."""


class DomainError(ConeExitError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class SeriesNotConverged(ConeExitError):
    """A series hit its term cap before reaching the requested tolerance."""

    def __init__(self, message, achieved_bound=float("nan"), terms=0):
        super().__init__(message)
        self.achieved_bound = achieved_bound
        self.terms = terms


class QuadratureError(ConeExitError):
    """Node doubling changed a quadrature result by more than allowed."""

    def __init__(self, message, coarse, fine):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine
