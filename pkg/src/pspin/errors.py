"""Exception types shared across the package."""


class PspinError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PspinError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class BracketFailure(PspinError):
    """A scalar root solve could not bracket a sign change."""


class NoLowTempSolution(PspinError):
    """No overlap solves the replica equation; beta is below the low-temperature regime."""


class DimensionMismatch(PspinError, ValueError):
    """Arrays or model objects with incompatible shapes were combined."""


class SizeError(PspinError):
    """A requested coupling tensor exceeds the memory budget."""


class NoConvergence(PspinError):
    """An iterative solver exhausted its iteration budget."""


class QuadratureFailure(PspinError):
    """A numerical integral returned a non-finite value."""


class NonMonotoneSchedule(PspinError, ValueError):
    """An annealing schedule of inverse temperatures is not increasing from zero."""


class ValidationError(PspinError, ValueError):
    """A run configuration is malformed or inconsistent."""
