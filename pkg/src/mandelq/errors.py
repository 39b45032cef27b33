"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class MandelQError(Exception):
    """Base class for all library errors."""

    exit_code = 4


class ZeroIntensity(MandelQError):
    """The total mean photon number vanishes, so Q is undefined."""

    exit_code = 2


class ZeroModeIntensity(ZeroIntensity):
    """The selected mode carries no photons (covariant denominator vanishes)."""


class CutoffTooSmall(MandelQError):
    exit_code = 4


class ConvergenceFailure(MandelQError):
    exit_code = 4


class NumericalFailure(MandelQError):
    exit_code = 4


class InvalidParameter(MandelQError, ValueError):
    exit_code = 3


class InvalidTemperature(InvalidParameter):
    pass


class InvalidWeight(InvalidParameter):
    pass


class DimensionMismatch(MandelQError, ValueError):
    exit_code = 3


class ParseError(MandelQError):
    exit_code = 3


class ValidationError(MandelQError):
    exit_code = 3


class ClosedFormMismatch(MandelQError):
    exit_code = 4
