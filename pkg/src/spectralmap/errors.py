"""Exception hierarchy for spectralmap."""


class SpectralMapError(Exception):
    """Base class for all errors raised by this package."""


class RepresentationError(SpectralMapError, ValueError):
    """Malformed piecewise-polynomial or coefficient representation."""


class UnsupportedOrderError(SpectralMapError, ValueError):
    """The requested differential order is not handled by the operation."""


class AccuracyError(SpectralMapError):
    """An integrator or solver did not reach the requested tolerance.

    ``achieved`` carries the residual that was actually obtained.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class WindingError(SpectralMapError):
    """Argument-principle count disagrees with the number of located roots."""

    def __init__(self, message, expected=None, counted=None):
        super().__init__(message)
        self.expected = expected
        self.counted = counted


class MultiplicityError(SpectralMapError):
    """A multiple eigenvalue was detected, within one problem."""


class ConditioningError(SpectralMapError):
    """A linear solve is too close to singular (lambda near an eigenvalue)."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class RadiusError(SpectralMapError):
    """A residue circle would enclose or touch another eigenvalue."""


class StructuralError(SpectralMapError):
    """A weight matrix violates the expected sparsity pattern."""


class DegenerateWeightError(SpectralMapError):
    """A weight number vanished to working precision."""


class ExtrapolationError(SpectralMapError):
    """A limit extrapolation did not settle."""


class FitError(SpectralMapError):
    """Asymptotic parameter fit diverged; data inconsistent with the class."""


class PoleProximityError(SpectralMapError):
    """Kernel evaluation requested too close to a singular point."""


class SolvabilityAlarm(SpectralMapError):
    """The truncated main equation is singular or nearly singular."""

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class IndexMismatchError(SpectralMapError, ValueError):
    """Two spectral data sets do not share the same index range."""


class PivotError(SpectralMapError):
    """Reconstructed solution matrix is singular at some grid node."""


class InconsistencyError(SpectralMapError):
    """Recovered quantities disagree between two independent spectral points."""


class ValidationFailure(SpectralMapError):
    """Spectral data failed one or more hypothesis checks; ``report`` lists them."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
