"""Accuracy metrics and validation protocols.

Includes the metrics used by the reconstruction experiments (Spearman
correlation and RMSE against a reference density), a weighted two-sample
Kolmogorov-Smirnov statistic for comparing posterior marginals, numeric
normalization checks, and repeated random-subsampling cross-validation.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.stats import rankdata
from sklearn.base import clone

from .exceptions import DegenerateInput, InsufficientSamples, InvalidInput, RegionTooSmall
from .utils import check_rng


def spearman(a, b):
    """Spearman rank correlation (average ranks for ties)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInput("inputs must have equal length")
    if a.shape[0] < 3:
        raise InvalidInput("need at least 3 observations")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInput("rank correlation undefined for constant input")
    ra, rb = rankdata(a), rankdata(b)
    return float(np.corrcoef(ra, rb)[0, 1])


def rmse(a, b):
    """Root mean squared difference."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInput("inputs must have equal length")
    if a.shape[0] < 1:
        raise InvalidInput("need at least one observation")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def ks_statistic(x1, x2, weights1=None, weights2=None):
    """Two-sample Kolmogorov-Smirnov statistic with weighted ECDFs.

    The supremum of the absolute difference between the two (weighted,
    right-continuous) empirical CDFs over the pooled support.
    """
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x1.size == 0 or x2.size == 0:
        raise InvalidInput("both samples must be nonempty")

    def prep(x, w):
        if w is None:
            w = np.full(x.shape[0], 1.0 / x.shape[0])
        else:
            w = np.asarray(w, dtype=float).ravel()
            if w.shape != x.shape:
                raise InvalidInput("weights must match sample length")
            w = w / w.sum()
        order = np.argsort(x, kind="stable")
        return x[order], np.cumsum(w[order])

    s1, c1 = prep(x1, weights1)
    s2, c2 = prep(x2, weights2)
    pooled = np.union1d(s1, s2)
    f1 = np.concatenate([[0.0], c1])[np.searchsorted(s1, pooled, side="right")]
    f2 = np.concatenate([[0.0], c2])[np.searchsorted(s2, pooled, side="right")]
    return float(np.abs(f1 - f2).max())


def check_normalization(model, region, method="grid", n_grid=201, n_mc=200_000,
                        random_state=None):
    """Estimate the integral of ``model.pdf`` over a box region.

    ``region`` is a (lower, upper) pair of length-D arrays.  The grid method
    (D <= 3) uses composite Simpson quadrature on a tensor grid and reports
    a resolution-based error proxy; the Monte Carlo method draws uniform
    points over the region and reports the standard error.  A
    :class:`RegionTooSmall` warning is issued when the boundary density is
    not negligible relative to the interior.
    """
    lower = np.asarray(region[0], dtype=float).ravel()
    upper = np.asarray(region[1], dtype=float).ravel()
    d = lower.shape[0]
    if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
        raise InvalidInput("normalization check needs a finite region")

    if method == "grid":
        if d > 3:
            raise InvalidInput("grid integration supports at most 3 dimensions")
        axes = [np.linspace(lower[j], upper[j], n_grid) for j in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = model.pdf(pts).reshape([n_grid] * d)
        integral = vals
        for j in range(d - 1, -1, -1):
            integral = simpson(integral, x=axes[j], axis=j)
        coarse = vals[tuple(slice(None, None, 2) for _ in range(d))]
        coarse_int = coarse
        for j in range(d - 1, -1, -1):
            coarse_int = simpson(coarse_int, x=axes[j][::2], axis=j)
        err = abs(float(integral) - float(coarse_int))
        boundary_mask = np.zeros([n_grid] * d, dtype=bool)
        for j in range(d):
            sl = [slice(None)] * d
            sl[j] = 0
            boundary_mask[tuple(sl)] = True
            sl[j] = -1
            boundary_mask[tuple(sl)] = True
        interior_max = float(vals[~boundary_mask].max())
        boundary_max = float(vals[boundary_mask].max())
    elif method == "mc":
        rng = check_rng(random_state)
        pts = rng.uniform(lower, upper, size=(n_mc, d))
        vals = model.pdf(pts)
        volume = float(np.prod(upper - lower))
        integral = volume * float(vals.mean())
        err = volume * float(vals.std(ddof=1) / np.sqrt(n_mc))
        edge = rng.uniform(lower, upper, size=(2000, d))
        j = rng.integers(0, d, size=2000)
        side = rng.integers(0, 2, size=2000).astype(bool)
        edge[np.arange(2000), j] = np.where(side, upper[j], lower[j])
        boundary_max = float(model.pdf(edge).max())
        interior_max = float(vals.max())
    else:
        raise InvalidInput("method must be 'grid' or 'mc'")

    if interior_max > 0 and boundary_max > 1e-4 * interior_max:
        warnings.warn("region may miss probability mass: boundary density "
                      f"{boundary_max:.3g} vs interior peak {interior_max:.3g}",
                      RegionTooSmall)
    return float(integral), float(err)


@dataclass
class CrossValidationResult:
    """Per-repeat reconstruction metrics and their medians."""

    spearman: np.ndarray
    rmse: np.ndarray
    rmse_unnorm: np.ndarray | None
    median_spearman: float
    median_rmse: float

    def rows(self):
        for i in range(self.spearman.shape[0]):
            yield i, self.spearman[i], self.rmse[i]


def _fresh_estimator(estimator, seed):
    est = clone(estimator)
    if "random_state" in est.get_params():
        est.set_params(random_state=seed)
    return est


def cross_validate_known_target(target, estimator, train_size, n_repeats=100,
                                test_size=500, random_state=None,
                                use_log_density=None):
    """Reconstruction accuracy against a target with a known density.

    Per repeat: draw fresh training and test samples from ``target``, fit a
    clone of ``estimator``, and score the fitted density against the true
    density at the test points.  ``use_log_density`` controls whether the
    estimator's ``fit`` receives the target's log density as regression
    targets (defaults to automatic: only for estimators that require it).
    """
    rng = check_rng(random_state)
    sp = np.empty(n_repeats)
    rm = np.empty(n_repeats)
    if use_log_density is None:
        use_log_density = type(estimator).__name__ == "GaussianProcessDensity" or (
            hasattr(estimator, "estimator")
            and type(estimator.estimator).__name__ == "GaussianProcessDensity")
    for i in range(n_repeats):
        seed = int(rng.integers(2**63))
        sub = np.random.default_rng(seed)
        train = target.sample(train_size, random_state=sub)
        test = target.sample(test_size, random_state=sub)
        est = _fresh_estimator(estimator, seed)
        if use_log_density:
            est.fit(train, target.logpdf(train))
        else:
            est.fit(train)
        p_true = target.pdf(test)
        p_est = est.pdf(test)
        sp[i] = spearman(p_est, p_true)
        rm[i] = rmse(p_est, p_true)
    return CrossValidationResult(sp, rm, None, float(np.median(sp)), float(np.median(rm)))


def cross_validate_posterior(samples, estimator, train_size, n_repeats=100,
                             test_size=500, random_state=None):
    """Repeated random-subsampling validation on posterior samples.

    The reference is the stored unnormalized posterior value at held-out
    positions.  Spearman is scale-free; for the RMSE the fitted density is
    matched to the unnormalized scale with the evidence-regression constant
    (reported on both the normalized and unnormalized scales).
    """
    from .inference import estimate_log_evidence

    if samples.log_unnorm_post is None:
        raise InvalidInput("posterior cross-validation needs log_unnorm_post")
    n = samples.n
    if n < train_size + test_size:
        raise InsufficientSamples(
            f"need at least train+test = {train_size + test_size} samples, have {n}")
    rng = check_rng(random_state)
    sp = np.empty(n_repeats)
    rm = np.empty(n_repeats)
    rmu = np.empty(n_repeats)
    X = samples.positions
    lp = samples.log_unnorm_post
    is_gp = type(estimator).__name__ == "GaussianProcessDensity" or (
        hasattr(estimator, "estimator")
        and type(estimator.estimator).__name__ == "GaussianProcessDensity")
    for i in range(n_repeats):
        seed = int(rng.integers(2**63))
        sub = np.random.default_rng(seed)
        perm = sub.permutation(n)
        tr, te = perm[:train_size], perm[train_size:train_size + test_size]
        est = _fresh_estimator(estimator, seed)
        est.fit(X[tr], lp[tr]) if is_gp else est.fit(X[tr])
        log_est = est.score_samples(X[te])
        sp[i] = spearman(log_est, lp[te])
        fit = estimate_log_evidence(est, X[te], lp[te])
        shift = np.max(lp[te])
        ref = np.exp(lp[te] - shift)
        matched = np.exp(log_est + fit.log_evidence - shift)
        rmu[i] = rmse(matched, ref)
        rm[i] = rmse(np.exp(log_est), ref * np.exp(-fit.log_evidence))
    return CrossValidationResult(sp, rm, rmu, float(np.median(sp)), float(np.median(rm)))
