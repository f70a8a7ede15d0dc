"""Exception hierarchy shared by all modules."""


class SteadyRCError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SteadyRCError):
    """Invalid or inconsistent configuration."""


class DataError(SteadyRCError):
    """Problem with episode data (ingestion, labeling, normalization)."""


class DimensionMismatch(SteadyRCError, ValueError):
    pass


class DegenerateMatrix(SteadyRCError):
    """Spectral radius too small to rescale."""


class SingularSystem(SteadyRCError):
    """Unregularized normal equations are rank-deficient."""


class InsufficientData(DataError):
    pass


class EpisodeTooShort(DataError):
    pass


class NoSteadyState(DataError):
    """The capacity never settles permanently inside the steady-state band."""


class ZeroMaximum(DataError):
    pass


class SingleClass(SteadyRCError):
    """ROC quantities need both positive and negative samples."""


class Unattainable(SteadyRCError):
    """No threshold reaches the requested false positive rate."""
