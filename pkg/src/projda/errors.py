"""Exception types shared across the package."""


class ProjdaError(Exception):
    """Base class for all package errors."""


class NumericsError(ProjdaError):
    """A dense factorization failed to converge or produced invalid output."""


class RankDeficiencyError(NumericsError):
    """Input matrix is rank deficient where full rank is required."""


class BlowupError(ProjdaError):
    """Model integration produced non-finite values or violated a stability bound."""


class WeightCollapseError(ProjdaError):
    """All particle likelihoods underflowed to zero; the filter has diverged."""


class DegenerateWeightsError(ProjdaError):
    """Weight vector is identically zero; ESS is undefined."""


class ReductionError(ProjdaError):
    """Basis construction or reduced-model assembly failed."""


class ConfigError(ProjdaError):
    """Configuration file is malformed or inconsistent; message names the field."""
