"""Exception hierarchy shared across the package.

Everything raised deliberately by this package derives from :class:`NnicError`
so callers can catch one base class at API boundaries (the CLI maps subtrees
of this hierarchy onto exit codes).
"""


class NnicError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefinite(NnicError):
    """A matrix required to be symmetric positive definite is not."""


class SingularMatrix(NnicError):
    """A linear system could not be solved because its matrix is singular."""


class DomainError(NnicError):
    """A sample point lies outside the model family's sample domain."""


class CapabilityError(NnicError):
    """The model family does not support the requested operation."""


class NoiseDensityZero(NnicError):
    """The noise density vanishes at a point where it must dominate."""


class OptimizationFailure(NnicError):
    """An iterative fit terminated without reaching the gradient tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class LineSearchFailure(OptimizationFailure):
    """The Wolfe line search exhausted its bracketing budget."""


class NonFiniteObjective(NnicError):
    """The objective or gradient returned NaN (or was infinite at the start)."""


class EmptyFold(NnicError):
    """Leave-one-out was requested on a sample too small to split."""


class DegenerateComponent(NnicError):
    """A mixture component collapsed (variance below the floor) during EM."""


class QuadratureNonConvergence(NnicError):
    """Adaptive quadrature did not reach the requested absolute tolerance."""


class DataFormatError(NnicError):
    """A data file or inline data specification could not be parsed."""
