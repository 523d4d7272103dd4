"""Exception hierarchy shared by all geomaxent modules."""


class GeoMaxEntError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GeoMaxEntError, ValueError):
    """An input violates a structural invariant.

    ``deviation`` carries the measured size of the violation.
    """

    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class NotHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidSimplexPoint(ValidationError):
    pass


class ZeroVector(ValidationError):
    pass


class ConvergenceFailure(GeoMaxEntError):
    """The dense eigensolver did not converge."""


class SingularDensity(GeoMaxEntError):
    """The density matrix has an eigenvalue below the rank tolerance."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class MaxIterationsExceeded(GeoMaxEntError):
    """A solver ran out of iterations; ``report`` holds the best iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report

    @property
    def residual(self):
        return None if self.report is None else self.report.residual


class DegenerateWeights(GeoMaxEntError):
    """Importance weights collapsed (effective sample size below the floor)."""

    def __init__(self, message, ess=None):
        super().__init__(message)
        self.ess = ess


class NotInformationallyComplete(GeoMaxEntError):
    """The measured effects do not span the space of Hermitian matrices."""

    def __init__(self, message, rank=None, required=None):
        super().__init__(message)
        self.rank = rank
        self.required = required
