"""Multivariate Gaussian kernel density estimation.

The kernel is a single multivariate normal shared by all samples.  Up to
four dimensions a full bandwidth matrix is estimated: samples are whitened
with the Cholesky factor of the sample covariance, a solve-the-equation
plug-in bandwidth is selected per whitened axis, and the result is rotated
back.  Above four dimensions the bandwidth is diagonal: per-dimension
plug-in values rescaled to the multivariate rate ``N^(-1/(D+4))``.
"""

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq

from .base import BaseDensity
from .exceptions import DegenerateSample, InsufficientSamples
from .utils import as_matrix, check_rng

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_MIN_BW_FACTOR = 1e-8  # bandwidth floor, relative to the sample std


def _pair_bin_counts(x, nb=1000):
    """Binned pair-separation counts for the plug-in functionals.

    Bins the data onto a regular grid and returns ``(d, cnt)`` where
    ``cnt[k]`` is the number of unordered pairs whose bin indices differ by
    ``k`` and ``d`` is the bin width.
    """
    x = np.sort(x)
    rang = (x[-1] - x[0]) * 1.01
    if rang <= 0:
        raise DegenerateSample("all samples equal: zero variance")
    d = rang / nb
    idx = np.minimum((np.floor((x - x[0]) / d)).astype(np.int64), nb - 1)
    bc = np.bincount(idx, minlength=nb)
    # cnt[k] = sum_m bc[m] * bc[m+k] for k >= 1; cnt[0] = C(bc, 2) summed
    corr = np.correlate(bc.astype(float), bc.astype(float), mode="full")[nb - 1:]
    cnt = corr.copy()
    cnt[0] = np.sum(bc * (bc - 1) / 2.0)
    return d, cnt


def _phi4_sum(n, d, cnt, h):
    """Estimate of the 4th-derivative density functional psi_4 at pilot h."""
    delta = d * np.arange(cnt.shape[0]) / h
    term = np.exp(-0.5 * delta**2) * (delta**4 - 6.0 * delta**2 + 3.0)
    s = 2.0 * np.sum(term * cnt) + n * 3.0
    return s / (n * (n - 1) * h**5 * _SQRT_2PI)


def _phi6_sum(n, d, cnt, h):
    """Estimate of the 6th-derivative density functional psi_6 at pilot h."""
    delta = d * np.arange(cnt.shape[0]) / h
    term = np.exp(-0.5 * delta**2) * (delta**6 - 15.0 * delta**4 + 45.0 * delta**2 - 15.0)
    s = 2.0 * np.sum(term * cnt) + n * (-15.0)
    return s / (n * (n - 1) * h**7 * _SQRT_2PI)


def sheather_jones_bandwidth(x):
    """Solve-the-equation plug-in bandwidth for a 1-D Gaussian kernel.

    Returns the kernel standard deviation.  Requires at least five
    observations with nonzero spread.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.shape[0]
    if n < 5:
        raise InsufficientSamples("plug-in bandwidth needs at least 5 samples")
    std = x.std()
    q75, q25 = np.percentile(x, [75.0, 25.0])
    scale = min(std, (q75 - q25) / 1.349)
    if scale <= 0:
        scale = std
    if scale <= 0:
        raise DegenerateSample("all samples equal: zero variance")

    d, cnt = _pair_bin_counts(x)
    a = 1.24 * scale * n ** (-1.0 / 7.0)
    b = 1.23 * scale * n ** (-1.0 / 9.0)
    c1 = 1.0 / (2.0 * np.sqrt(np.pi) * n)
    td = -_phi6_sum(n, d, cnt, b)
    sda = _phi4_sum(n, d, cnt, a)
    if not np.isfinite(td) or td <= 0 or not np.isfinite(sda) or sda <= 0:
        raise DegenerateSample("sample too sparse for plug-in bandwidth")
    alph2 = 1.357 * (sda / td) ** (1.0 / 7.0)

    def f(h):
        return (c1 / _phi4_sum(n, d, cnt, alph2 * h ** (5.0 / 7.0))) ** 0.2 - h

    hmax = 1.144 * scale * n ** (-0.2)
    lo, hi = 0.1 * hmax, hmax
    for _ in range(100):
        if f(lo) * f(hi) <= 0:
            break
        if f(hi) > 0:
            hi *= 1.2
        else:
            lo *= 0.8
    else:
        raise DegenerateSample("no sign change found for plug-in bandwidth equation")
    return brentq(f, lo, hi, xtol=1e-10 * hmax)


class KernelDensityEstimator(BaseDensity):
    """Gaussian-kernel density estimate with plug-in bandwidth selection.

    Parameters
    ----------
    bandwidth : "plugin" or ndarray, default "plugin"
        Either the automatic rule described in the module docstring, or an
        explicit D x D kernel covariance matrix (a scalar is interpreted as
        ``scalar**2 * I`` on the std-dev scale).

    Attributes
    ----------
    covariance_ : ndarray of shape (d, d)
        Kernel covariance matrix.
    cholesky_ : ndarray of shape (d, d)
        Lower-triangular factor of ``covariance_``.
    """

    def __init__(self, bandwidth="plugin"):
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        X = as_matrix(X)
        n, d = X.shape
        if isinstance(self.bandwidth, str) and self.bandwidth == "plugin":
            cov = self._plugin_covariance(X)
        else:
            bw = np.asarray(self.bandwidth, dtype=float)
            cov = float(bw) ** 2 * np.eye(d) if bw.ndim == 0 else bw.copy()
        self.train_ = X.copy()
        self.train_.setflags(write=False)
        self.covariance_ = cov
        try:
            self.cholesky_ = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise DegenerateSample("kernel covariance is not positive definite") from exc
        self.log_norm_ = -(d / 2.0) * np.log(2.0 * np.pi) \
            - np.sum(np.log(np.diag(self.cholesky_)))
        return self

    def _plugin_covariance(self, X):
        n, d = X.shape
        if n <= d:
            raise DegenerateSample("plug-in bandwidth needs more samples than dimensions")
        floors = _MIN_BW_FACTOR * np.maximum(X.std(axis=0), np.finfo(float).tiny)
        if d <= 4:
            S = np.cov(X, rowvar=False).reshape(d, d)
            try:
                L = np.linalg.cholesky(S)
            except np.linalg.LinAlgError as exc:
                raise DegenerateSample("singular sample covariance") from exc
            W = solve_triangular(L, (X - X.mean(axis=0)).T, lower=True).T
            h = np.array([max(sheather_jones_bandwidth(W[:, j]), _MIN_BW_FACTOR)
                          for j in range(d)])
            return L @ np.diag(h**2) @ L.T
        rescale = n ** 0.2 * n ** (-1.0 / (d + 4))
        h = np.array([sheather_jones_bandwidth(X[:, j]) for j in range(d)]) * rescale
        h = np.maximum(h, floors)
        return np.diag(h**2)

    def score_samples(self, X):
        self._check_fitted("train_")
        X = as_matrix(X)
        # whiten pairwise differences by the kernel Cholesky factor
        diff = X[:, None, :] - self.train_[None, :, :]
        z = solve_triangular(self.cholesky_, diff.reshape(-1, self.train_.shape[1]).T,
                             lower=True)
        q = np.sum(z**2, axis=0).reshape(X.shape[0], self.train_.shape[0])
        logk = self.log_norm_ - 0.5 * q
        m = logk.max(axis=1)
        return m + np.log(np.mean(np.exp(logk - m[:, None]), axis=1))

    def sample(self, n_samples=1, random_state=None):
        self._check_fitted("train_")
        rng = check_rng(random_state)
        n, d = self.train_.shape
        if n_samples == 0:
            return np.empty((0, d))
        idx = rng.integers(0, n, size=n_samples)
        z = rng.standard_normal((n_samples, d))
        return self.train_[idx] + z @ self.cholesky_.T
