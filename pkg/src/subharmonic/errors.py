"""Exception types shared across the package."""


class SubharmonicError(Exception):
    """Base class for all package-specific errors."""


class DomainTooSmall(SubharmonicError):
    """A line grid does not cover the periodic window it must contain."""


class IncompatibleSpacing(SubharmonicError):
    """Two grids cannot be aligned sample-by-sample."""


class GridMismatch(SubharmonicError):
    """An operation received functions living on different grids."""


class MalformedFamily(SubharmonicError):
    """A Bloch family does not have the structure the operation requires."""


class TruncationTooSmall(SubharmonicError):
    """A Fourier truncation parameter is too small to be meaningful."""


class HypothesisViolation(SubharmonicError):
    """An input violates a stated hypothesis (e.g. a Sobolev-index floor)."""


class BoundExceeded(SubharmonicError):
    """A computed a-priori bound was exceeded by sampled data."""


class NonFiniteEvolution(SubharmonicError):
    """A semigroup step produced non-finite values (operator not semibounded
    at this truncation)."""


class NoConvergence(SubharmonicError):
    """An iterative solver failed to converge; carries the final residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularJacobian(SubharmonicError):
    """A Newton system is rank-deficient beyond the expected symmetry kernel."""


class NotIncreasing(SubharmonicError):
    """A schedule that must be strictly increasing is not."""


class ScheduleExceedsDomain(SubharmonicError):
    """A period schedule requires windows larger than the ambient line grid."""
