"""Exception hierarchy shared by all levelcross modules."""


class LevelcrossError(Exception):
    """Base class for every error raised by this package."""


class TruncationError(LevelcrossError):
    """A sequence or spectrum is too short to answer the query."""


class LevelOverflowError(TruncationError):
    """A level number exceeded the representable or configured maximum."""


class DegenerateSpectrum(LevelcrossError, ValueError):
    """Two energies from different groups coincide within tolerance."""


class DomainError(LevelcrossError, ValueError):
    pass


class NumericalError(LevelcrossError, RuntimeError):
    pass


class ConfigError(LevelcrossError, ValueError):
    pass
