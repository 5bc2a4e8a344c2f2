"""Gaussian mixtures, truncated Gaussian mixtures, and 1-D parametric mixtures.

Multivariate mixtures use full covariance matrices fitted by EM with
k-means++ seeded restarts; the number of components is chosen by BIC.  The
truncated variant renormalizes each component to a bounding box (box masses
by randomized quasi-Monte Carlo over the Cholesky-reordered integrand) and
corrects the M-step moments for the truncation.  The 1-D mixtures (normal,
gamma, or beta depending on the bound pattern) are reused by the marginal
models of the copula machinery.
"""

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import digamma, gammaln, ndtr, ndtri, polygamma
from scipy.stats import beta as beta_dist
from scipy.stats import gamma as gamma_dist
from scipy.stats import qmc

from .base import BaseDensity
from .exceptions import (DegenerateCovariance, InsufficientSamples,
                         OutOfSupport, PostdensError)
from .utils import as_matrix, check_rng

_LOG_2PI = np.log(2.0 * np.pi)


# ---------------------------------------------------------------------------
# multivariate normal helpers
# ---------------------------------------------------------------------------

def _chol(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance("covariance is not positive definite") from exc


def mvn_logpdf(X, mean, chol):
    """Log density of N(mean, chol @ chol.T) at the rows of X."""
    d = mean.shape[0]
    z = solve_triangular(chol, (X - mean).T, lower=True)
    return (-0.5 * np.sum(z**2, axis=0)
            - 0.5 * d * _LOG_2PI - np.sum(np.log(np.diag(chol))))


def _logsumexp(a, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis)) + np.squeeze(m, axis=axis)
    return out


# ---------------------------------------------------------------------------
# box probabilities and truncated moments (Genz sequential transform + RQMC)
# ---------------------------------------------------------------------------

def _genz_batch(L, a, b, W):
    """Sequential conditional transform for one batch of unit-cube points.

    Returns per-point box-probability factors ``f`` and the standard-normal
    coordinates ``Y`` (m, d) of the generated interior points.
    """
    m, d = W.shape
    Y = np.empty((m, d))
    eps = 1e-14
    lo = ndtr(a[0] / L[0, 0]) * np.ones(m)
    hi = ndtr(b[0] / L[0, 0]) * np.ones(m)
    f = hi - lo
    for i in range(d):
        p = lo + W[:, i] * (hi - lo)
        Y[:, i] = ndtri(np.clip(p, eps, 1.0 - eps))
        if i + 1 == d:
            break
        mu_c = Y[:, : i + 1] @ L[i + 1, : i + 1]
        lo = ndtr((a[i + 1] - mu_c) / L[i + 1, i + 1])
        hi = ndtr((b[i + 1] - mu_c) / L[i + 1, i + 1])
        f = f * (hi - lo)
    return f, Y


def _reorder_for_genz(cov, a, b):
    """Put narrow directions first; returns permutation."""
    sd = np.sqrt(np.diag(cov))
    width = ndtr(b / sd) - ndtr(a / sd)
    return np.argsort(width, kind="stable")


def mvn_box_probability(mean, cov, lower, upper, random_state=None,
                        target_se=1e-4, max_points=100_000):
    """P(lower <= X <= upper) for X ~ N(mean, cov), by randomized QMC.

    Runs scrambled Sobol batches through the Cholesky-reordered sequential
    transform until the standard error drops below ``target_se`` or the
    point budget is exhausted.
    """
    prob, _, _, se = _mvn_box_qmc(np.asarray(mean, float), np.asarray(cov, float),
                                  np.asarray(lower, float), np.asarray(upper, float),
                                  check_rng(random_state), target_se, max_points,
                                  want_moments=False)
    return prob


def _mvn_box_qmc(mean, cov, lower, upper, rng, target_se=1e-4,
                 max_points=100_000, want_moments=True, n_points=None):
    """Shared RQMC driver: box probability and, optionally, truncated moments."""
    d = mean.shape[0]
    a = lower - mean
    b = upper - mean
    if d == 1:
        sd = np.sqrt(cov[0, 0])
        if cov[0, 0] <= 0:
            raise DegenerateCovariance("covariance is not positive definite")
        prob = float(ndtr(b[0] / sd) - ndtr(a[0] / sd))
        if not want_moments:
            return prob, None, None, 0.0
        # fall through to QMC for the moments with the exact probability kept

    perm = _reorder_for_genz(cov, a, b)
    L = _chol(cov[np.ix_(perm, perm)])
    ap, bp = a[perm], b[perm]

    n_streams = 8
    m = 1 << 10 if n_points is None else max(n_points, 8)
    sob = qmc.Sobol(d=d, scramble=True, seed=rng)
    while True:
        fs, ys = [], []
        for _ in range(n_streams):
            W = sob.random(m)
            f, Y = _genz_batch(L, ap, bp, W)
            fs.append(f)
            ys.append(Y)
        stream_means = np.array([f.mean() for f in fs])
        prob = float(stream_means.mean())
        se = float(stream_means.std(ddof=1) / np.sqrt(n_streams))
        if n_points is not None or se <= target_se or n_streams * m * 2 > max_points:
            break
        m *= 2

    if not want_moments:
        return prob, None, None, se
    f = np.concatenate(fs)
    Y = np.vstack(ys)
    wsum = f.sum()
    if wsum <= 0:
        raise DegenerateCovariance("box probability vanished during moment estimation")
    X = Y @ L.T
    inv = np.argsort(perm)
    X = X[:, inv] + mean
    w = f / wsum
    m1 = w @ X
    xc = X - m1
    m2 = (w[:, None] * xc).T @ xc
    return prob, m1, m2, se


# ---------------------------------------------------------------------------
# EM scaffolding
# ---------------------------------------------------------------------------

def _kmeanspp_init(X, k, rng):
    """k-means++ center selection."""
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min([np.sum((X - c) ** 2, axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(X[rng.integers(n)])
            continue
        centers.append(X[rng.choice(n, p=d2 / total)])
    return np.array(centers)


class _CollapseSignal(PostdensError):
    """Internal: a mixture proportion dropped below the floor."""


# EM stall cutoff: when the log-likelihood gain over a 25-iteration window
# falls below 1e-4 * (1 + |ll|) the run is treated as converged.  The drift
# this truncates is orders of magnitude below any BIC penalty step, so
# component selection is unaffected; it only short-circuits the slow
# component-merging regime.
_STALL_WINDOW = 25
_STALL_GAIN = 1e-4


def _stalled(path):
    if len(path) <= _STALL_WINDOW:
        return False
    return path[-1] - path[-1 - _STALL_WINDOW] < _STALL_GAIN * (1.0 + abs(path[-1]))


def _batched_logpdf(X, means, covs):
    """(n, k) multivariate-normal log densities, batched over components."""
    k, d = means.shape
    try:
        L = np.linalg.cholesky(covs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance("covariance is not positive definite") from exc
    Linv = np.linalg.inv(L)
    diff = X[None, :, :] - means[:, None, :]           # (k, n, d)
    z = diff @ np.swapaxes(Linv, 1, 2)
    q = np.sum(z * z, axis=2)
    logdet = np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1)
    return (-0.5 * q - logdet[:, None] - 0.5 * d * _LOG_2PI).T


def _em_gmm(X, k, rng, tol, max_iter, reg):
    """One EM run from a k-means++ start; returns (props, means, covs, ll, path)."""
    n, d = X.shape
    means = _kmeanspp_init(X, k, rng)
    base_cov = np.cov(X, rowvar=False).reshape(d, d) + reg
    covs = np.array([base_cov.copy() for _ in range(k)])
    props = np.full(k, 1.0 / k)
    prev_ll = -np.inf
    path = []
    for _ in range(max_iter):
        logp = _batched_logpdf(X, means, covs) + np.log(props)
        m = logp.max(axis=1)
        w = np.exp(logp - m[:, None])
        s = w.sum(axis=1)
        ll = float(np.log(s).sum() + m.sum())
        path.append(ll)
        R = w / s[:, None]
        nk = R.sum(axis=0)
        if np.any(nk / n < 1.0 / (10.0 * n)):
            raise _CollapseSignal(f"component collapsed in k={k} fit")
        props = nk / n
        means = (R.T @ X) / nk[:, None]
        diff = X[None, :, :] - means[:, None, :]
        wdiff = diff * R.T[:, :, None]
        covs = np.swapaxes(wdiff, 1, 2) @ diff / nk[:, None, None] + reg
        if abs(ll - prev_ll) <= tol * (1.0 + abs(ll)) or _stalled(path):
            break
        prev_ll = ll
    return props, means, covs, path[-1], path


def _gmm_param_count(k, d):
    return k - 1 + k * d + k * d * (d + 1) // 2


class GaussianMixtureDensity(BaseDensity):
    """Full-covariance Gaussian mixture fitted by EM with BIC selection.

    Parameters
    ----------
    max_components : int, default 9
        Largest component count tried when ``n_components`` is None.
    n_components : int, optional
        Fit exactly this many components instead of selecting by BIC.
    n_init : int, default 5
        Number of k-means++ seeded EM restarts per component count.
    tol : float, default 1e-8
        Relative log-likelihood change declaring EM convergence.
    max_iter : int, default 500
    reg_covar_scale : float, default 1e-6
        Each M-step adds ``reg_covar_scale * tr(S)/d * I`` (S = sample
        covariance) so covariances stay positive definite.
    random_state : int or Generator, optional

    Attributes
    ----------
    weights_, means_, covariances_ : mixture parameters (G,), (G, d), (G, d, d)
    n_components_ : selected component count
    bic_ : BIC of the selected model
    loglik_path_ : per-iteration log-likelihood of the winning EM run
    """

    def __init__(self, max_components=9, n_components=None, n_init=5, tol=1e-8,
                 max_iter=500, reg_covar_scale=1e-6, random_state=None):
        self.max_components = max_components
        self.n_components = n_components
        self.n_init = n_init
        self.tol = tol
        self.max_iter = max_iter
        self.reg_covar_scale = reg_covar_scale
        self.random_state = random_state

    # -- fitting -----------------------------------------------------------

    def _fit_k(self, X, k, rng):
        n, d = X.shape
        if n < k * (d + 1):
            raise InsufficientSamples(
                f"need at least k*(d+1) = {k * (d + 1)} samples for k={k}, got {n}")
        S = np.cov(X, rowvar=False).reshape(d, d)
        reg = self.reg_covar_scale * np.trace(S) / d * np.eye(d)
        best = None
        for _ in range(self.n_init):
            sub = np.random.default_rng(rng.integers(2**63))
            try:
                out = _em_gmm(X, k, sub, self.tol, self.max_iter, reg)
            except _CollapseSignal:
                if k == 1:
                    raise DegenerateCovariance("single-component EM collapsed")
                return self._fit_k(X, k - 1, rng)
            if best is None or out[3] > best[3]:
                best = out
        return best

    def fit(self, X, y=None):
        X = as_matrix(X)
        rng = check_rng(self.random_state)
        n, d = X.shape
        ks = [self.n_components] if self.n_components else range(1, self.max_components + 1)
        best = None
        for k in ks:
            if n < k * (d + 1):
                if best is None and (self.n_components or k == 1):
                    raise InsufficientSamples(
                        f"need at least {k * (d + 1)} samples for k={k}, got {n}")
                continue
            props, means, covs, ll, path = self._fit_k(X, k, rng)
            bic = -2.0 * ll + _gmm_param_count(len(props), d) * np.log(n)
            if best is None or bic < best[0]:
                best = (bic, props, means, covs, ll, path)
        bic, props, means, covs, ll, path = best
        self.weights_ = props
        self.means_ = means
        self.covariances_ = np.asarray(covs)
        self.cholesky_ = np.array([_chol(c) for c in covs])
        self.n_components_ = len(props)
        self.bic_ = float(bic)
        self.loglik_ = float(ll)
        self.loglik_path_ = list(path)
        return self

    # -- evaluation ---------------------------------------------------------

    def _finalize(self):
        self._linv = np.linalg.inv(self.cholesky_)
        self._logdet = np.sum(np.log(np.diagonal(self.cholesky_, axis1=1, axis2=2)),
                              axis=1)

    def score_samples(self, X):
        self._check_fitted("weights_")
        if not hasattr(self, "_linv"):
            self._finalize()
        X = as_matrix(X)
        d = X.shape[1]
        diff = X[None, :, :] - self.means_[:, None, :]
        z = diff @ np.swapaxes(self._linv, 1, 2)
        q = np.sum(z * z, axis=2)
        logp = (np.log(self.weights_)[:, None] - self._logdet[:, None]
                - 0.5 * d * _LOG_2PI - 0.5 * q).T
        return _logsumexp(logp, axis=1)

    def sample(self, n_samples=1, random_state=None):
        self._check_fitted("weights_")
        rng = check_rng(random_state)
        d = self.means_.shape[1]
        if n_samples == 0:
            return np.empty((0, d))
        comps = rng.choice(self.n_components_, size=n_samples, p=self.weights_)
        z = rng.standard_normal((n_samples, d))
        out = np.empty((n_samples, d))
        for g in range(self.n_components_):
            mask = comps == g
            out[mask] = self.means_[g] + z[mask] @ self.cholesky_[g].T
        return out


class TruncatedGaussianMixtureDensity(BaseDensity):
    """Mixture of box-truncated Gaussians with known bounds.

    EM responsibilities use the truncated component densities
    ``N(x; mu, Sigma) / m_g`` where ``m_g`` is the component's box mass, and
    the M-step shifts the moment estimates by the difference between the
    untruncated parameters and the truncated mean/covariance (estimated by
    QMC with a fixed scrambled point set per run, so the corrections vary
    smoothly across iterations).

    Parameters mirror :class:`GaussianMixtureDensity`, plus:

    bounds : Bounds
        The known truncation box.
    qmc_points : int, default 4096
        QMC points per component per iteration for the moment corrections.
    """

    def __init__(self, bounds, max_components=9, n_components=None, n_init=5,
                 tol=1e-6, max_iter=200, reg_covar_scale=1e-6, qmc_points=4096,
                 random_state=None):
        self.bounds = bounds
        self.max_components = max_components
        self.n_components = n_components
        self.n_init = n_init
        self.tol = tol
        self.max_iter = max_iter
        self.reg_covar_scale = reg_covar_scale
        self.qmc_points = qmc_points
        self.random_state = random_state

    def fit(self, X, y=None):
        X = as_matrix(X)
        lo, hi = self.bounds.lower, self.bounds.upper
        if np.any(X < lo) or np.any(X > hi):
            raise OutOfSupport("training sample outside the truncation box")
        if self.bounds.is_unbounded():
            inner = GaussianMixtureDensity(
                max_components=self.max_components, n_components=self.n_components,
                n_init=self.n_init, tol=self.tol, max_iter=self.max_iter,
                reg_covar_scale=self.reg_covar_scale, random_state=self.random_state,
            ).fit(X)
            self._adopt(inner.weights_, inner.means_, inner.covariances_,
                        np.ones(inner.n_components_), inner.bic_, inner.loglik_path_)
            return self
        rng = check_rng(self.random_state)
        n, d = X.shape
        ks = [self.n_components] if self.n_components else range(1, self.max_components + 1)
        best = None
        for k in ks:
            if n < k * (d + 1):
                if best is None and (self.n_components or k == 1):
                    raise InsufficientSamples(
                        f"need at least {k * (d + 1)} samples for k={k}, got {n}")
                continue
            out = self._fit_k(X, k, rng)
            props, means, covs, masses, ll, path = out
            bic = -2.0 * ll + _gmm_param_count(len(props), d) * np.log(n)
            if best is None or bic < best[0]:
                best = (bic, props, means, covs, masses, ll, path)
        bic, props, means, covs, masses, ll, path = best
        # final tight box masses
        rng_final = np.random.default_rng(check_rng(self.random_state).integers(2**63))
        masses = np.array([
            mvn_box_probability(means[g], covs[g], self.bounds.lower, self.bounds.upper,
                                random_state=np.random.default_rng(rng_final.integers(2**63)))
            for g in range(len(props))])
        self._adopt(props, means, covs, masses, bic, path)
        return self

    def _adopt(self, props, means, covs, masses, bic, path):
        self.weights_ = np.asarray(props)
        self.means_ = np.asarray(means)
        self.covariances_ = np.asarray(covs)
        self.cholesky_ = np.array([_chol(c) for c in self.covariances_])
        self.box_masses_ = np.asarray(masses)
        self.n_components_ = len(props)
        self.bic_ = float(bic)
        self.loglik_path_ = list(path)

    def _fit_k(self, X, k, rng):
        best = None
        for _ in range(self.n_init):
            sub = np.random.default_rng(rng.integers(2**63))
            try:
                out = self._em_run(X, k, sub)
            except _CollapseSignal:
                if k == 1:
                    raise DegenerateCovariance("single-component EM collapsed")
                return self._fit_k(X, k - 1, rng)
            if best is None or out[4] > best[4]:
                best = out
        return best

    def _em_run(self, X, k, rng):
        n, d = X.shape
        lo, hi = self.bounds.lower, self.bounds.upper
        means = _kmeanspp_init(X, k, rng)
        S = np.cov(X, rowvar=False).reshape(d, d)
        reg = self.reg_covar_scale * np.trace(S) / d * np.eye(d)
        covs = np.array([S + reg for _ in range(k)])
        props = np.full(k, 1.0 / k)
        # one fixed seed per (run, component): the same scrambled point set is
        # reused every iteration so the moment corrections vary smoothly
        moment_seeds = rng.integers(2**63, size=k)
        prev_ll = -np.inf
        path = []
        masses = np.ones(k)
        for _ in range(self.max_iter):
            chols = [_chol(c) for c in covs]
            m1s, covts = [], []
            for g in range(k):
                mg, m1, covt, _ = _mvn_box_qmc(
                    means[g], covs[g], lo, hi,
                    np.random.default_rng(moment_seeds[g]),
                    want_moments=True, n_points=max(self.qmc_points // 8, 64))
                masses[g] = max(mg, 1e-300)
                m1s.append(m1)
                covts.append(covt)
            logp = np.column_stack(
                [np.log(props[g]) - np.log(masses[g]) + mvn_logpdf(X, means[g], chols[g])
                 for g in range(k)])
            norm = _logsumexp(logp, axis=1)
            ll = float(norm.sum())
            path.append(ll)
            R = np.exp(logp - norm[:, None])
            nk = R.sum(axis=0)
            if np.any(nk / n < 1.0 / (10.0 * n)):
                raise _CollapseSignal(f"component collapsed in k={k} fit")
            props = nk / n
            xbar = (R.T @ X) / nk[:, None]
            for g in range(k):
                xc = X - xbar[g]
                Sg = (R[:, g] * xc.T) @ xc / nk[g]
                means[g] = means[g] + (xbar[g] - m1s[g])
                cand = Sg + (covs[g] - covts[g])
                cand = 0.5 * (cand + cand.T) + reg
                covs[g] = self._repair_spd(cand)
            if abs(ll - prev_ll) <= self.tol * (1.0 + abs(ll)) or _stalled(path):
                break
            prev_ll = ll
        return props, means, covs, masses.copy(), path[-1], path

    @staticmethod
    def _repair_spd(cov):
        try:
            np.linalg.cholesky(cov)
            return cov
        except np.linalg.LinAlgError:
            w, V = np.linalg.eigh(cov)
            floor = max(np.abs(w).max(), 1e-30) * 1e-8
            return (V * np.maximum(w, floor)) @ V.T

    def score_samples(self, X):
        self._check_fitted("weights_")
        X = as_matrix(X)
        out = np.full(X.shape[0], -np.inf)
        inside = np.all((X >= self.bounds.lower) & (X <= self.bounds.upper), axis=1)
        if np.any(inside):
            if not hasattr(self, "_linv"):
                self._linv = np.linalg.inv(self.cholesky_)
                self._logdet = np.sum(
                    np.log(np.diagonal(self.cholesky_, axis1=1, axis2=2)), axis=1)
            Xi = X[inside]
            d = Xi.shape[1]
            diff = Xi[None, :, :] - self.means_[:, None, :]
            z = diff @ np.swapaxes(self._linv, 1, 2)
            q = np.sum(z * z, axis=2)
            logp = (np.log(self.weights_)[:, None] - np.log(self.box_masses_)[:, None]
                    - self._logdet[:, None] - 0.5 * d * _LOG_2PI - 0.5 * q).T
            out[inside] = _logsumexp(logp, axis=1)
        return out

    def sample(self, n_samples=1, random_state=None):
        """Exact sampling by per-component rejection against the box."""
        self._check_fitted("weights_")
        rng = check_rng(random_state)
        d = self.means_.shape[1]
        if n_samples == 0:
            return np.empty((0, d))
        comps = rng.choice(self.n_components_, size=n_samples, p=self.weights_)
        out = np.empty((n_samples, d))
        lo, hi = self.bounds.lower, self.bounds.upper
        for i, g in enumerate(comps):
            for _ in range(100_000):
                x = self.means_[g] + self.cholesky_[g] @ rng.standard_normal(d)
                if np.all(x >= lo) and np.all(x <= hi):
                    out[i] = x
                    break
            else:
                raise DegenerateCovariance("rejection sampling failed: negligible box mass")
        return out


# ---------------------------------------------------------------------------
# 1-D parametric mixtures (normal / gamma / beta)
# ---------------------------------------------------------------------------

_BETA_CLAMP = 1e-9


def _gamma_weighted_mle(z, r):
    """Weighted gamma MLE (shape, scale) via Newton on the digamma equation."""
    w = r / r.sum()
    mean = w @ z
    s = np.log(mean) - w @ np.log(z)
    s = max(s, 1e-12)
    k = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(25):
        g = np.log(k) - digamma(k) - s
        dg = 1.0 / k - polygamma(1, k)
        step = g / dg
        k_new = k - step
        if k_new <= 0:
            k_new = k / 2.0
        if abs(k_new - k) < 1e-12 * k:
            k = k_new
            break
        k = k_new
    return k, mean / k


def _beta_weighted_mle(z, r):
    """Weighted beta MLE (alpha, beta) via Newton with a moment start."""
    w = r / r.sum()
    m = w @ z
    v = w @ (z - m) ** 2
    v = max(v, 1e-12)
    common = m * (1.0 - m) / v - 1.0
    if common <= 0:
        a, b = 1.0, 1.0
    else:
        a, b = max(m * common, 1e-3), max((1.0 - m) * common, 1e-3)
    m1 = w @ np.log(z)
    m2 = w @ np.log1p(-z)
    for _ in range(50):
        s = a + b
        g = np.array([digamma(a) - digamma(s) - m1, digamma(b) - digamma(s) - m2])
        tg = polygamma(1, s)
        J = np.array([[polygamma(1, a) - tg, -tg], [-tg, polygamma(1, b) - tg]])
        try:
            step = np.linalg.solve(J, g)
        except np.linalg.LinAlgError:
            break
        a_new, b_new = a - step[0], b - step[1]
        scale = 1.0
        while (a_new <= 0 or b_new <= 0) and scale > 1e-6:
            scale /= 2.0
            a_new, b_new = a - scale * step[0], b - scale * step[1]
        if a_new <= 0 or b_new <= 0:
            break
        if abs(a_new - a) < 1e-10 * a and abs(b_new - b) < 1e-10 * b:
            a, b = a_new, b_new
            break
        a, b = a_new, b_new
    return a, b


class UnivariateMixture:
    """1-D mixture of normals, gammas, or betas selected by the bound pattern.

    Fitted by EM with k-means++ restarts and BIC component selection.  The
    data are shifted/reflected (one-sided bounds) or rescaled to (0, 1)
    (two-sided bounds) before fitting; evaluation maps back.
    """

    def __init__(self, kind, props, params, shift=0.0, scale=1.0, reflect=False,
                 bic=np.nan):
        self.kind = kind
        self.props = np.asarray(props, dtype=float)
        self.params = np.asarray(params, dtype=float)  # one row per component
        self.shift = float(shift)
        self.scale = float(scale)
        self.reflect = bool(reflect)
        self.bic = float(bic)

    # transformed coordinate: z in the base family's support
    def _to_z(self, x):
        x = np.asarray(x, dtype=float)
        z = (self.shift - x) / self.scale if self.reflect else (x - self.shift) / self.scale
        return z

    def _base_pdf(self, z):
        out = np.zeros_like(z)
        for p, row in zip(self.props, self.params):
            if self.kind == "normal":
                out += p * np.exp(-0.5 * ((z - row[0]) / row[1]) ** 2) / (row[1] * np.sqrt(2 * np.pi))
            elif self.kind == "gamma":
                out += p * gamma_dist.pdf(z, row[0], scale=row[1])
            else:
                out += p * beta_dist.pdf(z, row[0], row[1])
        return out

    def _base_cdf(self, z):
        out = np.zeros_like(z, dtype=float)
        for p, row in zip(self.props, self.params):
            if self.kind == "normal":
                out += p * ndtr((z - row[0]) / row[1])
            elif self.kind == "gamma":
                out += p * gamma_dist.cdf(z, row[0], scale=row[1])
            else:
                out += p * beta_dist.cdf(z, row[0], row[1])
        return out

    def pdf(self, x):
        z = self._to_z(x)
        return self._base_pdf(z) / self.scale

    def cdf(self, x):
        z = self._to_z(x)
        c = self._base_cdf(z)
        return 1.0 - c if self.reflect else c

    def mean(self):
        if self.kind == "normal":
            base = self.props @ self.params[:, 0]
        elif self.kind == "gamma":
            base = self.props @ (self.params[:, 0] * self.params[:, 1])
        else:
            base = self.props @ (self.params[:, 0] / (self.params[:, 0] + self.params[:, 1]))
        return self.shift - self.scale * base if self.reflect else self.shift + self.scale * base


def fit_mixture_1d(x, bounds=None, g_max=9, random_state=None, n_init=5,
                   tol=1e-8, max_iter=500):
    """Fit a 1-D parametric mixture; family chosen from the bound pattern.

    ``bounds`` is None or a (lower, upper) pair where entries may be
    infinite.  Unbounded data get a normal mixture, one-sided bounds a
    (shifted or reflected) gamma mixture, two-sided bounds a beta mixture on
    the rescaled variable.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.shape[0]
    if n < 10:
        raise InsufficientSamples("1-D mixture fit needs at least 10 samples")
    lo, hi = (-np.inf, np.inf) if bounds is None else (float(bounds[0]), float(bounds[1]))
    rng = check_rng(random_state)

    if np.isneginf(lo) and np.isposinf(hi):
        kind, shift, scale, reflect = "normal", 0.0, 1.0, False
        z = x.copy()
    elif np.isposinf(hi):
        kind, shift, scale, reflect = "gamma", lo, 1.0, False
        z = x - lo
    elif np.isneginf(lo):
        kind, shift, scale, reflect = "gamma", hi, 1.0, True
        z = hi - x
    else:
        kind, shift, scale, reflect = "beta", lo, hi - lo, False
        z = (x - lo) / (hi - lo)
        z = np.clip(z, _BETA_CLAMP, 1.0 - _BETA_CLAMP)
    if kind == "gamma":
        z = np.maximum(z, 1e-300)

    best = None
    for k in range(1, g_max + 1):
        if n < 2 * k + 2:
            continue
        fit = _fit_mixture_1d_k(z, kind, k, rng, n_init, tol, max_iter)
        if fit is None:
            continue
        props, params, ll = fit
        n_par = (len(props) - 1) + 2 * len(props)
        bic = -2.0 * ll + n_par * np.log(n)
        if best is None or bic < best[0]:
            best = (bic, props, params)
    if best is None:
        raise InsufficientSamples("no feasible component count for 1-D mixture")
    bic, props, params = best
    return UnivariateMixture(kind, props, params, shift, scale, reflect, bic)


def _fit_mixture_1d_k(z, kind, k, rng, n_init, tol, max_iter):
    best = None
    n_runs = 1 if k == 1 else n_init  # k=1 is start-independent
    for _ in range(n_runs):
        sub = np.random.default_rng(rng.integers(2**63))
        try:
            out = _em_1d(z, kind, k, sub, tol, max_iter)
        except (_CollapseSignal, np.linalg.LinAlgError, FloatingPointError):
            if k == 1:
                return None
            continue
        if out is not None and (best is None or out[2] > best[2]):
            best = out
    return best


def _all_logpdf_1d(z, ln_z, ln_1mz, kind, params):
    """(n, k) component log densities, vectorized over components."""
    if kind == "normal":
        mu, sd = params[:, 0], params[:, 1]
        return -0.5 * ((z[:, None] - mu) / sd) ** 2 - np.log(sd) - 0.5 * _LOG_2PI
    if kind == "gamma":
        kk, th = params[:, 0], params[:, 1]
        return ((kk - 1.0) * ln_z[:, None] - z[:, None] / th
                - gammaln(kk) - kk * np.log(th))
    a, b = params[:, 0], params[:, 1]
    return ((a - 1.0) * ln_z[:, None] + (b - 1.0) * ln_1mz[:, None]
            + gammaln(a + b) - gammaln(a) - gammaln(b))


def _em_1d(z, kind, k, rng, tol, max_iter):
    n = z.shape[0]
    centers = np.sort(_kmeanspp_init(z.reshape(-1, 1), k, rng).ravel())
    std = max(z.std() / max(k, 1), 1e-6 * (abs(z.mean()) + 1.0))
    if kind == "normal":
        params = np.column_stack([centers, np.full(k, max(z.std(), 1e-12))])
    elif kind == "gamma":
        centers = np.maximum(centers, 1e-6)
        params = np.column_stack([np.maximum(centers**2 / std**2, 0.1),
                                  std**2 / np.maximum(centers, 1e-12)])
    else:
        centers = np.clip(centers, 0.01, 0.99)
        params = np.tile([2.0, 2.0], (k, 1)).astype(float)
        params[:, 0] = 2.0 * centers / (1.0 - centers + 1e-9)
        params[:, 0] = np.clip(params[:, 0], 0.05, 50.0)
    props = np.full(k, 1.0 / k)
    ln_z = np.log(z) if kind in ("gamma", "beta") else None
    ln_1mz = np.log1p(-z) if kind == "beta" else None
    prev_ll = -np.inf
    path = []
    for _ in range(max_iter):
        logp = _all_logpdf_1d(z, ln_z, ln_1mz, kind, params) + np.log(props)
        m = logp.max(axis=1)
        w = np.exp(logp - m[:, None])
        s = w.sum(axis=1)
        ll = float(np.log(s).sum() + m.sum())
        if not np.isfinite(ll):
            return None
        path.append(ll)
        R = w / s[:, None]
        nk = R.sum(axis=0)
        if np.any(nk / n < 1.0 / (10.0 * n)):
            raise _CollapseSignal("1-D component collapsed")
        props = nk / n
        if kind == "normal":
            mu = (R * z[:, None]).sum(axis=0) / nk
            var = (R * (z[:, None] - mu) ** 2).sum(axis=0) / nk
            params = np.column_stack([mu, np.sqrt(np.maximum(var, 1e-24))])
        else:
            for g in range(k):
                if kind == "gamma":
                    params[g] = _gamma_weighted_mle(z, R[:, g])
                else:
                    params[g] = _beta_weighted_mle(z, R[:, g])
        if abs(ll - prev_ll) <= tol * (1.0 + abs(ll)) or _stalled(path):
            break
        prev_ll = ll
    return props, params, ll
