"""Exception types raised across the ssmt package."""


class SsmtError(Exception):
    """Base class for all package errors."""


class NonTerminating(SsmtError):
    """The requested process has no killing and nonnegative mean drift."""


class ExactUnavailable(SsmtError):
    """Exact local times exist only for piecewise-linear paths with drift."""


class FourierUnavailable(SsmtError):
    """Fourier inversion of -1/psi needs a strictly positive killing rate."""


class InvalidTilt(SsmtError):
    """Esscher tilt requires psi(beta) <= 0."""


class InvalidShift(SsmtError):
    """Cumulant shift requires kappa(gamma) <= 0."""


class NoRoot(SsmtError):
    """No negative root of the exponent was found on the search bracket."""


class OutOfGrid(SsmtError):
    """Requested point lies outside the tabulated grid."""


class BudgetExhausted(SsmtError):
    """A sampling loop hit its rejection or node budget."""


class DegeneratePath(SsmtError):
    """A pssMp path hit zero before its recorded lifetime."""


class MismatchedPath(SsmtError):
    """Local-time profile does not belong to the given path."""


class SubcriticalityViolated(SsmtError):
    """min kappa >= 0 on the search grid: no valid gamma0 exists."""


class LevelTooLow(SsmtError):
    """Level statistics requested below the truncation safety margin."""


class EmptyMeasure(SsmtError):
    """Cannot mark a point from a zero-mass measure."""


class MalformedSequence(SsmtError):
    """Atom sequence is not a valid depth-first tree encoding."""


class ConfigInvalid(SsmtError):
    """Experiment configuration failed validation."""
