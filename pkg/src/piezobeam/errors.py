"""Exception types shared across the package."""


class PiezobeamError(Exception):
    """Base class for all package errors."""


class AssumptionViolatedError(PiezobeamError):
    """Raised when a structural assumption on the model constants fails."""


class DimensionMismatchError(PiezobeamError):
    """Field vector does not conform to the grid."""


class NewtonDivergedError(PiezobeamError):
    def __init__(self, message, residual=None, time=None):
        super().__init__(message)
        self.residual = residual
        self.time = time


class SingularJacobianError(PiezobeamError):
    pass


class BlowUpError(PiezobeamError):
    def __init__(self, message, time=None, norm=None):
        super().__init__(message)
        self.time = time
        self.norm = norm


class NonpositiveDataError(PiezobeamError):
    """Decay fit input is not strictly above the requested floor."""


class ConfigError(PiezobeamError):
    """Run configuration failed to parse or validate."""
