"""Common estimator interface for all density approximations.

Every approximation follows the scikit-learn estimator protocol: construct
with hyperparameters, ``fit(X[, y])``, then evaluate with ``pdf`` /
``score_samples`` (log density) and, where defined, draw new points with
``sample``.  Fitted models are immutable and safe to share across threads.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import InvalidInput
from .transforms import (build_transform, log_jacobian, transform_forward,
                         transform_inverse)
from .utils import as_matrix, check_rng


class BaseDensity(BaseEstimator):
    """Mixin providing the shared density-model surface."""

    def score_samples(self, X):
        """Log density at each row of X."""
        raise NotImplementedError

    def pdf(self, X):
        return np.exp(self.score_samples(X))

    def logpdf(self, X):
        return self.score_samples(X)

    def score(self, X, y=None):
        """Mean log density (scikit-learn model-selection hook)."""
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None):
        raise NotImplementedError(f"{type(self).__name__} does not define sampling")

    def _check_fitted(self, attr):
        if not hasattr(self, attr):
            raise InvalidInput(f"{type(self).__name__} is not fitted yet")


class TransformedDensity(BaseDensity):
    """Fit an unbounded estimator on transformed coordinates.

    Wraps another density estimator: samples are mapped through the
    bound-removing transform before fitting, and evaluated densities are
    corrected with the transform's Jacobian so that the wrapper is a proper
    density on the original (bounded) support.

    Parameters
    ----------
    estimator : BaseDensity
        The inner, unbounded-domain estimator.
    bounds : Bounds
        Support of the original variables.
    """

    def __init__(self, estimator, bounds):
        self.estimator = estimator
        self.bounds = bounds

    def fit(self, X, y=None):
        X = as_matrix(X)
        self.transform_ = build_transform(self.bounds)
        Z = transform_forward(self.transform_, X)
        if y is not None:
            # regression targets are density values: divide by the Jacobian
            # so the inner fit sees the transformed-space density
            y = np.asarray(y, dtype=float) - log_jacobian(self.transform_, X)
        self.estimator_ = self.estimator.fit(Z, y) if y is not None else self.estimator.fit(Z)
        return self

    def score_samples(self, X):
        self._check_fitted("estimator_")
        X = as_matrix(X)
        out = np.full(X.shape[0], -np.inf)
        inside = self.bounds.contains(X)
        if np.any(inside):
            Z = transform_forward(self.transform_, X[inside])
            out[inside] = (self.estimator_.score_samples(Z)
                           + log_jacobian(self.transform_, X[inside]))
        return out

    def sample(self, n_samples=1, random_state=None):
        self._check_fitted("estimator_")
        rng = check_rng(random_state)
        Z = self.estimator_.sample(n_samples, random_state=rng)
        if Z.shape[0] == 0:
            return Z
        return transform_inverse(self.transform_, Z)
