"""One-dimensional marginal models: CDF / PDF / quantile triples.

Three interchangeable kinds feed the copula machinery:

* ``ecdf_kd`` — a Gaussian kernel-smoothed empirical distribution with
  plug-in bandwidth; near a known bound the kernels are mirrored across the
  boundary, which doubles the density on the valid side.
* ``pareto_tail`` — the same smoothed body on the middle mass with
  generalized Pareto tails fitted to the outer 10% of samples on each side;
  the GPD scale is pinned to ``q / f(t)`` so the density is continuous at
  the thresholds.
* ``param_mixture`` — a parametric 1-D mixture (normal, gamma, or beta
  depending on the bound pattern).

All three expose an exactly consistent (cdf, pdf, quantile) triple: the pdf
is the derivative of the cdf and the quantile inverts it to solver
precision.
"""

import numpy as np
from scipy.special import ndtr

from .exceptions import (InsufficientSamples, InsufficientTail, InvalidInput,
                         InvalidQuantile)
from .kde import sheather_jones_bandwidth
from .mixture import UnivariateMixture, fit_mixture_1d
from .utils import golden_section_minimize

_XI_RANGE = (-0.45, 2.0)


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise InvalidQuantile("quantile argument must lie strictly inside (0, 1)")
    return u


def _invert_monotone(fun, u, lo, hi, iters=90):
    """Vectorized bisection for a nondecreasing function on [lo, hi]."""
    u = np.asarray(u, dtype=float)
    a = np.full(u.shape, lo, dtype=float)
    b = np.full(u.shape, hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        below = fun(mid) < u
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


class MarginalModel:
    """Interface shared by all marginal kinds."""

    kind = None

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError


class EcdfKdMarginal(MarginalModel):
    """Kernel-smoothed empirical marginal, optionally mirrored at bounds."""

    kind = "ecdf_kd"

    def __init__(self, samples, sigma, lower=-np.inf, upper=np.inf):
        self.samples = np.sort(np.asarray(samples, dtype=float).ravel())
        self.sigma = float(sigma)
        self.lower = float(lower)
        self.upper = float(upper)
        centers = [self.samples]
        if np.isfinite(self.lower):
            centers.append(2.0 * self.lower - self.samples)
        if np.isfinite(self.upper):
            centers.append(2.0 * self.upper - self.samples)
        self._centers = np.concatenate(centers)
        # normalize so the cdf spans exactly [0, 1] on the support
        self._offset = self._raw_cdf(self.lower) if np.isfinite(self.lower) else 0.0
        top = self._raw_cdf(self.upper) if np.isfinite(self.upper) else 1.0
        self._norm = top - self._offset

    def _raw_cdf(self, x):
        z = (np.asarray(x, dtype=float)[..., None] - self._centers) / self.sigma
        return np.mean(ndtr(z), axis=-1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = (self._raw_cdf(np.clip(x, self.lower, self.upper)) - self._offset) / self._norm
        return np.clip(out, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self._centers) / self.sigma
        dens = np.mean(np.exp(-0.5 * z**2), axis=-1) / (
            self.sigma * np.sqrt(2.0 * np.pi) * self._norm)
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, dens, 0.0)

    def quantile(self, u):
        u = _check_u(u)
        lo = self.lower if np.isfinite(self.lower) else self.samples[0] - 40 * self.sigma
        hi = self.upper if np.isfinite(self.upper) else self.samples[-1] + 40 * self.sigma
        return _invert_monotone(self.cdf, u, lo, hi)


def fit_ecdf_marginal(x, bound=None):
    """Fit the kernel-smoothed empirical marginal.

    ``bound`` is None or a (lower, upper) pair, entries possibly infinite;
    finite entries trigger kernel mirroring at that side.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] < 10:
        raise InsufficientSamples("marginal fit needs at least 10 samples")
    lo, hi = (-np.inf, np.inf) if bound is None else (float(bound[0]), float(bound[1]))
    sigma = sheather_jones_bandwidth(x)
    return EcdfKdMarginal(x, sigma, lo, hi)


# ---------------------------------------------------------------------------
# generalized Pareto tails
# ---------------------------------------------------------------------------

def _gpd_logpdf_std(z, xi):
    """Log density of the standardized GPD at z >= 0 (scale already removed)."""
    if abs(xi) < 1e-10:
        return -z
    arg = 1.0 + xi * z
    if np.any(arg <= 0):
        return np.full_like(z, -np.inf)
    return -(1.0 + 1.0 / xi) * np.log(arg)


def _gpd_cdf_std(z, xi):
    z = np.maximum(z, 0.0)
    if abs(xi) < 1e-10:
        return -np.expm1(-z)
    arg = np.maximum(1.0 + xi * z, 0.0)
    if xi < 0:
        out = np.where(arg > 0, 1.0 - arg ** (-1.0 / xi), 1.0)
        return out
    return 1.0 - arg ** (-1.0 / xi)


def _gpd_quantile_std(p, xi):
    if abs(xi) < 1e-10:
        return -np.log1p(-p)
    return (np.power(1.0 - p, -xi) - 1.0) / xi


def fit_gpd_shape(excesses, sigma_fixed):
    """Maximum-likelihood GPD shape with the scale held fixed.

    Golden-section search over xi in [-0.45, 2]; needs at least 30 excesses.
    """
    z = np.asarray(excesses, dtype=float).ravel() / float(sigma_fixed)
    if z.shape[0] < 30:
        raise InsufficientTail("need at least 30 tail excesses")
    if np.any(z < 0):
        raise InvalidInput("excesses must be nonnegative")
    zmax = z.max()

    def negll(xi):
        if xi < 0 and 1.0 + xi * zmax <= 0:
            return np.inf
        return -float(np.sum(_gpd_logpdf_std(z, xi)))

    lo = _XI_RANGE[0]
    if zmax > 0:
        lo = max(lo, -1.0 / zmax + 1e-9)
    xi, _ = golden_section_minimize(negll, lo, _XI_RANGE[1], tol=1e-6)
    return float(xi)


class ParetoTailMarginal(MarginalModel):
    """Smoothed empirical body with GPD tails beyond the q / 1-q quantiles.

    On a bounded side the tail is only used when the kernel density at the
    boundary is below 1/N; otherwise the mirrored body extends to the bound.
    """

    kind = "pareto_tail"

    def __init__(self, body, q, lower_tail, upper_tail):
        self.body = body
        self.q = float(q)
        self.lower_tail = lower_tail  # None or dict(threshold, xi, sigma)
        self.upper_tail = upper_tail

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = self.body.cdf(x)
        if self.lower_tail is not None:
            t, xi, sg = (self.lower_tail[k] for k in ("threshold", "xi", "sigma"))
            mask = x <= t
            if np.any(mask):
                out = np.where(mask, self.q * (1.0 - _gpd_cdf_std((t - x) / sg, xi)), out)
        if self.upper_tail is not None:
            t, xi, sg = (self.upper_tail[k] for k in ("threshold", "xi", "sigma"))
            mask = x >= t
            if np.any(mask):
                out = np.where(mask, 1.0 - self.q + self.q * _gpd_cdf_std((x - t) / sg, xi), out)
        return np.clip(out, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = self.body.pdf(x)
        if self.lower_tail is not None:
            t, xi, sg = (self.lower_tail[k] for k in ("threshold", "xi", "sigma"))
            mask = x <= t
            if np.any(mask):
                z = (t - x) / sg
                out = np.where(mask, self.q / sg * np.exp(_gpd_logpdf_std(np.maximum(z, 0.0), xi)), out)
        if self.upper_tail is not None:
            t, xi, sg = (self.upper_tail[k] for k in ("threshold", "xi", "sigma"))
            mask = x >= t
            if np.any(mask):
                z = (x - t) / sg
                out = np.where(mask, self.q / sg * np.exp(_gpd_logpdf_std(np.maximum(z, 0.0), xi)), out)
        return out

    def quantile(self, u):
        u = _check_u(u)
        out = np.empty_like(u)
        lo_mask = np.zeros(u.shape, dtype=bool)
        hi_mask = np.zeros(u.shape, dtype=bool)
        if self.lower_tail is not None:
            t, xi, sg = (self.lower_tail[k] for k in ("threshold", "xi", "sigma"))
            lo_mask = u < self.q
            if np.any(lo_mask):
                out[lo_mask] = t - sg * _gpd_quantile_std(1.0 - u[lo_mask] / self.q, xi)
        if self.upper_tail is not None:
            t, xi, sg = (self.upper_tail[k] for k in ("threshold", "xi", "sigma"))
            hi_mask = u > 1.0 - self.q
            if np.any(hi_mask):
                out[hi_mask] = t + sg * _gpd_quantile_std((u[hi_mask] - (1.0 - self.q)) / self.q, xi)
        mid = ~(lo_mask | hi_mask)
        if np.any(mid):
            out[mid] = self.body.quantile(u[mid])
        return out


def fit_pareto_tail_marginal(x, bound=None, q=0.1):
    """Fit the Pareto-tail marginal: smoothed body plus ML tails.

    Needs at least 300 samples so each tail is estimated from >= 30 points.
    On a bounded side the GPD tail replaces the mirrored body only when the
    kernel density at that bound is below 1/N.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.shape[0]
    if n < 300:
        raise InsufficientSamples("pareto-tail marginal needs at least 300 samples")
    lo, hi = (-np.inf, np.inf) if bound is None else (float(bound[0]), float(bound[1]))
    body = fit_ecdf_marginal(x, bound=(lo, hi))

    def build_tail(side):
        bounded = np.isfinite(lo) if side == "lower" else np.isfinite(hi)
        if bounded:
            edge = lo if side == "lower" else hi
            if body.pdf(np.array([edge]))[0] >= 1.0 / n:
                return None  # mirrored body handles the boundary
        if side == "lower":
            t = float(body.quantile(np.array([q]))[0])
            exc = t - x[x <= t]
        else:
            t = float(body.quantile(np.array([1.0 - q]))[0])
            exc = x[x >= t] - t
        f_t = float(body.pdf(np.array([t]))[0])
        sigma = q / f_t
        xi = fit_gpd_shape(exc, sigma)
        return {"threshold": t, "xi": xi, "sigma": sigma}

    return ParetoTailMarginal(body, q, build_tail("lower"), build_tail("upper"))


class MixtureMarginal(MarginalModel):
    """Parametric-mixture marginal wrapping a 1-D mixture model."""

    kind = "param_mixture"

    def __init__(self, mixture: UnivariateMixture, lower=-np.inf, upper=np.inf):
        self.mixture = mixture
        self.lower = float(lower)
        self.upper = float(upper)

    def cdf(self, x):
        return np.clip(self.mixture.cdf(np.asarray(x, dtype=float)), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = self.mixture.pdf(x)
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, out, 0.0)

    def quantile(self, u):
        u = _check_u(u)
        if np.isfinite(self.lower):
            lo = self.lower
        else:
            lo = -1.0
            while self.cdf(np.array([lo]))[0] > np.min(u) and lo > -1e18:
                lo *= 4.0
        if np.isfinite(self.upper):
            hi = self.upper
        else:
            hi = 1.0
            while self.cdf(np.array([hi]))[0] < np.max(u) and hi < 1e18:
                hi *= 4.0
        return _invert_monotone(self.cdf, u, lo, hi)


def fit_mixture_marginal(x, bound=None, g_max=9, random_state=None):
    """Fit a parametric-mixture marginal (family from the bound pattern)."""
    lo, hi = (-np.inf, np.inf) if bound is None else (float(bound[0]), float(bound[1]))
    mix = fit_mixture_1d(x, bounds=None if bound is None else (lo, hi),
                         g_max=g_max, random_state=random_state)
    return MixtureMarginal(mix, lo, hi)


def fit_marginal(x, kind, bound=None, g_max=9, random_state=None):
    """Dispatch to one of the three marginal kinds by name."""
    if kind == "ecdf_kd":
        return fit_ecdf_marginal(x, bound=bound)
    if kind == "pareto_tail":
        return fit_pareto_tail_marginal(x, bound=bound)
    if kind == "param_mixture":
        return fit_mixture_marginal(x, bound=bound, g_max=g_max, random_state=random_state)
    raise InvalidInput(f"unknown marginal kind: {kind!r}")
