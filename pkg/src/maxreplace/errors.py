"""Exception types shared across the package."""


class MaxReplaceError(Exception):
    """Base class for all package errors."""


class InvalidParameter(MaxReplaceError):
    """A spec field is out of its admissible range."""


class NonPSDCovariance(MaxReplaceError):
    """Covariance sequence is not positive semidefinite at the requested length."""


class UnknownMarginal(MaxReplaceError):
    """Marginal distribution name not in the sampler catalogue."""


class UnsupportedMarginal(MaxReplaceError):
    """Marginal outside the Gumbel domain of the quantile norming recipe."""


class DomainError(MaxReplaceError):
    """Norming constants undefined for this sample size."""


class QuadratureFailure(MaxReplaceError):
    """Adaptive quadrature did not reach the requested tolerance."""


class GridMismatch(MaxReplaceError):
    """Empirical and theoretical surfaces live on different grids."""


class SupportTooLarge(MaxReplaceError):
    """Exact enumeration would exceed the term budget."""


class ConfigParseError(MaxReplaceError):
    """Experiment config file is malformed or fails validation."""
