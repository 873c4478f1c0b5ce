"""Exception hierarchy shared by all weylstab modules."""


class WeylstabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(WeylstabError, ValueError):
    """Invalid experiment configuration or parameter value."""


class NumericalError(WeylstabError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""


# symbols
class OrderExceeded(ConfigError):
    pass


class DeltaOutOfRange(ConfigError):
    pass


class InvalidParameter(ConfigError):
    pass


# quantize
class UnsupportedFamily(ConfigError):
    pass


class OffsetNotOnGrid(ConfigError):
    pass


class GridTooSmall(ConfigError):
    pass


# spectra
class EmptySet(ConfigError):
    pass


class GridMismatch(ConfigError):
    pass


class EigSolveFailure(NumericalError):
    pass


# stability
class CoverageFailure(ConfigError):
    pass


class ShiftTooLarge(ConfigError):
    pass


class TooCloseToSpectrum(NumericalError):
    pass


# lab
class NonPositiveData(ConfigError):
    pass


class TooFewPoints(ConfigError):
    pass


class ColumnMissing(ConfigError):
    pass
