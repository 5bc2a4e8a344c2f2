"""Normalized Gaussian-process density regression.

Regresses unnormalized posterior density values on sample positions with a
zero-mean GP (squared-exponential or Matern-3/2 kernel, single isotropic
length scale) and rescales the predictive mean by its analytic integral so
the result is a proper density.  The integral of any isotropic kernel
follows from a polar-coordinate reduction; closed forms for both kernels
are implemented in :func:`gp_normalization`.

Raw posterior values are rescaled by ``exp(-max log p)`` before the solve;
the normalization constant absorbs the factor, so predictions are
unaffected while the linear algebra stays in range.
"""

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from .base import BaseDensity
from .exceptions import (IllConditioned, InsufficientSamples,
                         InvalidLengthScale, MissingDensities)
from .utils import as_matrix, check_rng, golden_section_minimize

_SQRT3 = np.sqrt(3.0)
_JITTER_START = 1e-8
_JITTER_CAP = 1e-2


def kernel_eval(kind, l, r):
    """Isotropic kernel value at distance ``r`` (both kernels equal 1 at 0)."""
    if l <= 0:
        raise InvalidLengthScale("length scale must be positive")
    r = np.asarray(r, dtype=float)
    if kind == "se":
        return np.exp(-(r**2) / (2.0 * l**2))
    if kind == "matern32":
        s = _SQRT3 * r / l
        return (1.0 + s) * np.exp(-s)
    raise InvalidLengthScale(f"unknown kernel {kind!r}")


def _kernel_from_sq(kind, l, d2):
    """Kernel matrix from squared distances (avoids a redundant sqrt for SE)."""
    if kind == "se":
        return np.exp(-d2 / (2.0 * l**2))
    s = _SQRT3 * np.sqrt(np.maximum(d2, 0.0)) / l
    return (1.0 + s) * np.exp(-s)


def kernel_volume(kind, l, d):
    """Integral of the kernel over R^d (polar-coordinate closed forms)."""
    if l <= 0:
        raise InvalidLengthScale("length scale must be positive")
    if kind == "se":
        return (2.0 * np.pi * l**2) ** (d / 2.0)
    if kind == "matern32":
        omega = 2.0 * np.pi ** (d / 2.0) / np.exp(gammaln(d / 2.0))
        return omega * (l / _SQRT3) ** d * (1.0 + d) * np.exp(gammaln(d))
    raise InvalidLengthScale(f"unknown kernel {kind!r}")


def gp_normalization(kind, l, alpha, d):
    """Normalization constant: kernel volume times the sum of dual weights."""
    return kernel_volume(kind, l, d) * float(np.sum(alpha))


class GaussianProcessDensity(BaseDensity):
    """GP regression through posterior density values, normalized to 1.

    Parameters
    ----------
    kernel : {"se", "matern32"}, default "se"
    n_folds : int, default 5
        Cross-validation folds for the length-scale search.
    random_state : int or Generator, optional
        Seeds the fold shuffle.

    Attributes
    ----------
    length_scale_ : selected kernel length scale
    alpha_ : dual weights (solve of K against the rescaled densities)
    normalization_ : integral of the unclipped predictive mean
    clip_count_ : number of negative predictions clipped to zero so far

    Notes
    -----
    ``fit`` expects ``y`` = unnormalized log-posterior per sample.  Negative
    predictive densities are clipped to zero during evaluation (counted in
    ``clip_count_``); candidate length scales whose normalization constant
    is not positive are rejected during the search.
    """

    def __init__(self, kernel="se", n_folds=5, random_state=None):
        self.kernel = kernel
        self.n_folds = n_folds
        self.random_state = random_state

    def fit(self, X, y=None):
        X = as_matrix(X)
        if y is None:
            raise MissingDensities("GP regression needs per-sample log posterior values")
        y = np.asarray(y, dtype=float).ravel()
        n, d = X.shape
        if y.shape[0] != n:
            raise MissingDensities("log posterior length does not match positions")
        if n < 20:
            raise InsufficientSamples("GP fit needs at least 20 samples")

        p = np.exp(y - np.max(y))
        d2 = cdist(X, X, "sqeuclidean")
        pos = d2[d2 > 0]
        if pos.size == 0:
            raise InsufficientSamples("all training positions coincide")
        d_min = np.sqrt(pos.min())
        d_max = np.sqrt(pos.max())

        rng = check_rng(self.random_state)
        perm = rng.permutation(n)
        m = n // self.n_folds
        folds = perm[: self.n_folds * m].reshape(self.n_folds, m)
        train_idx = np.stack([np.setdiff1d(perm, folds[i]) for i in range(self.n_folds)])

        def cv_loss(log_l):
            l = np.exp(log_l)
            K = _kernel_from_sq(self.kernel, l, d2)
            vol = kernel_volume(self.kernel, l, d)
            nt = train_idx.shape[1]
            Ktt = np.empty((self.n_folds, nt, nt))
            Ktv = np.empty((self.n_folds, m, nt))
            for i in range(self.n_folds):
                Ktt[i] = K[np.ix_(train_idx[i], train_idx[i])]
                Ktv[i] = K[np.ix_(folds[i], train_idx[i])]
            Ktt[:, np.arange(nt), np.arange(nt)] += _JITTER_START * nt
            try:
                alpha = np.linalg.solve(Ktt, p[train_idx][:, :, None])
            except np.linalg.LinAlgError:
                return np.inf
            z = vol * alpha.sum(axis=(1, 2))
            if np.any(z <= 0):
                return np.inf
            pred = (Ktv @ alpha)[:, :, 0]
            resid = (pred - p[folds]) / z[:, None]
            return float(np.sqrt(np.mean(resid**2)))

        log_l, best = golden_section_minimize(
            cv_loss, np.log(d_min), np.log(10.0 * d_max), tol=1e-3)
        if not np.isfinite(best):
            raise IllConditioned("no usable length scale found in the search range")
        l = float(np.exp(log_l))

        K = _kernel_from_sq(self.kernel, l, d2)
        mean_diag = float(np.mean(np.diag(K)))
        factor = _JITTER_START
        alpha = None
        while factor <= _JITTER_CAP:
            jitter = factor * n * mean_diag
            try:
                L = np.linalg.cholesky(K + jitter * np.eye(n))
                rhs = np.linalg.solve(L, p)
                alpha = np.linalg.solve(L.T, rhs)
                break
            except np.linalg.LinAlgError:
                factor *= 10.0
        if alpha is None:
            raise IllConditioned("kernel matrix factorization failed at maximum jitter")

        z = gp_normalization(self.kernel, l, alpha, d)
        if z <= 0:
            raise IllConditioned("normalization constant is not positive at the optimum")
        self.train_ = X.copy()
        self.train_.setflags(write=False)
        self.alpha_ = alpha
        self.length_scale_ = l
        self.jitter_ = jitter
        self.normalization_ = float(z)
        self.clip_count_ = 0
        return self

    def predict_unclipped(self, X):
        """Normalized predictive mean without the nonnegativity clip."""
        self._check_fitted("alpha_")
        X = as_matrix(X)
        d2 = cdist(X, self.train_, "sqeuclidean")
        return _kernel_from_sq(self.kernel, self.length_scale_, d2) @ self.alpha_ \
            / self.normalization_

    def pdf(self, X):
        raw = self.predict_unclipped(X)
        neg = raw < 0
        self.clip_count_ += int(np.count_nonzero(neg))
        return np.where(neg, 0.0, raw)

    def score_samples(self, X):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(X))
