"""Exception and warning types shared across the package."""


class PostdensError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSample(PostdensError):
    """Sample positions contain non-finite entries or have a bad shape."""


class InvalidWeight(PostdensError):
    """Sample weights are negative or sum to zero."""


class InvalidInput(PostdensError):
    """Generic argument validation failure (length mismatch etc.)."""


class OutOfSupport(PostdensError):
    """A point lies on or outside the supported domain."""


class DegenerateSample(PostdensError):
    """Sample has zero variance or a singular covariance."""


class DegenerateCovariance(PostdensError):
    """A covariance matrix is not symmetric positive definite."""


class InsufficientSamples(PostdensError):
    """Too few samples for the requested fit."""


class InsufficientTail(PostdensError):
    """Too few threshold excesses to estimate a tail."""


class InvalidQuantile(PostdensError):
    """Quantile argument outside the open unit interval."""


class InvalidPIT(PostdensError):
    """Copula input outside the open unit interval."""


class InvalidLengthScale(PostdensError):
    """Kernel length scale must be strictly positive."""


class MissingDensities(PostdensError):
    """Operation requires unnormalized log-posterior values per sample."""


class IllConditioned(PostdensError):
    """Linear algebra failed even after regularization."""


class DegenerateWeights(PostdensError):
    """All importance weights vanished (log-weights all -inf)."""


class DegenerateInput(PostdensError):
    """Metric undefined for the given input (e.g. constant vector)."""


class InitFailure(PostdensError):
    """No valid starting point found for the sampler."""


class StiffnessFailure(PostdensError):
    """ODE integrator step size underflowed."""


class RegionTooSmall(UserWarning):
    """Integration region appears to miss non-negligible probability mass."""
