"""Exception types shared across the package."""


class ChargeWignerError(Exception):
    """Base class for all domain errors raised by this package."""


class GridError(ChargeWignerError):
    """Invalid phase-space grid, or grids of two operands do not match."""


class SpectrumError(ChargeWignerError):
    """Invalid spectrum parameters or level indices out of range."""


class StateError(ChargeWignerError):
    """Invalid state coefficients, kernels, or state files."""


class StarConvergenceError(ChargeWignerError):
    """An accelerated spectral sum or star-exponential failed to converge.

    Carries diagnostics for the worst grid point in ``details``.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ProjectionTailError(ChargeWignerError):
    """A symbol could not be represented in the truncated level basis."""


class StabilityError(ChargeWignerError):
    """A grid evolution plan violates the time-step stability guard."""
