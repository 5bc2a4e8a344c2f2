"""Adaptive Metropolis sampling, reweighting, sequential inference, evidence.

The sampler is a random-walk Metropolis chain whose proposal covariance
adapts to ``2.38^2 / d`` times the running sample covariance during burn-in
and is frozen afterwards.  Proposals falling outside the prior bounds are
rejected outright (the chain stays put) and are excluded from the reported
acceptance rate.  Everything is deterministic given a seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (DegenerateWeights, InitFailure, InsufficientSamples,
                         InvalidInput)
from .samples import SampleSet
from .transforms import Bounds
from .utils import check_rng


@dataclass
class PosteriorSpec:
    """Target definition for the sampler.

    ``log_likelihood`` and ``log_prior`` map a parameter vector to a float
    (``-inf`` marks unsupported points).  ``sample_prior`` (optional) draws
    one vector given a Generator and is used to find a starting point when
    no explicit ``init`` is passed.  Evaluators must be safe for concurrent
    calls unless ``exclusive`` is set.
    """

    log_likelihood: callable
    log_prior: callable
    bounds: Bounds
    sample_prior: callable = None
    exclusive: bool = False

    def log_unnorm(self, theta):
        lp = self.log_prior(theta)
        if lp == -np.inf:
            return -np.inf
        ll = self.log_likelihood(theta)
        return lp + ll


@dataclass
class WeightedSampleSet:
    """Importance-weighted samples with their effective sample size."""

    samples: SampleSet
    ess: float


@dataclass
class MhResult:
    samples: SampleSet
    acceptance_rate: float
    n_out_of_bounds: int
    proposal_covariance: np.ndarray


def run_mh(spec, n_samples, burn_in, random_state=None, init=None, thin=1,
           init_scale=None):
    """Adaptive random-walk Metropolis.

    Returns an :class:`MhResult` whose sample set carries the unnormalized
    log posterior of every retained draw.  The reported acceptance rate
    counts only in-bounds proposals; out-of-bounds proposals are rejected
    without evaluating the target.
    """
    rng = check_rng(random_state)
    d = spec.bounds.dim

    if init is None:
        if spec.sample_prior is None:
            raise InitFailure("no init given and the spec has no prior sampler")
        for _ in range(1000):
            cand = np.asarray(spec.sample_prior(rng), dtype=float)
            if spec.log_unnorm(cand) > -np.inf:
                init = cand
                break
        else:
            raise InitFailure("no valid starting point found in 1000 prior draws")
    else:
        init = np.asarray(init, dtype=float)
        if spec.log_unnorm(init) == -np.inf:
            raise InitFailure("given starting point has zero posterior density")

    if init_scale is None:
        width = np.where(np.isfinite(spec.bounds.upper - spec.bounds.lower),
                         spec.bounds.upper - spec.bounds.lower,
                         2.0 * (np.abs(init) + 1.0))
        init_scale = 0.05 * width
    prop_chol = np.diag(np.asarray(init_scale, dtype=float))

    scale = 2.38**2 / d
    mean = init.copy()
    m2 = np.zeros((d, d))
    count = 1
    # the running covariance restarts part-way through burn-in so the frozen
    # proposal reflects the settled chain, not the initial transient
    restarts = {int(0.3 * burn_in), int(0.6 * burn_in)}

    x = init.copy()
    lx = spec.log_unnorm(x)
    total = burn_in + n_samples * thin
    kept = np.empty((n_samples, d))
    kept_lp = np.empty(n_samples)
    n_acc = 0
    n_inb = 0
    n_oob = 0
    k = 0
    for step in range(total):
        z = rng.standard_normal(d)
        prop = x + prop_chol @ z
        if np.all(prop > spec.bounds.lower) and np.all(prop < spec.bounds.upper):
            n_inb += 1
            lp = spec.log_unnorm(prop)
            if lp - lx > np.log(rng.uniform()):
                x, lx = prop, lp
                n_acc += 1
        else:
            n_oob += 1
        if step < burn_in:
            if step in restarts:
                mean = x.copy()
                m2 = np.zeros((d, d))
                count = 1
            count += 1
            delta = x - mean
            mean += delta / count
            m2 += np.outer(delta, x - mean)
            if count > max(20, 2 * d) and step % 25 == 24:
                cov = m2 / (count - 1) + 1e-12 * np.eye(d)
                try:
                    prop_chol = np.linalg.cholesky(scale * cov)
                except np.linalg.LinAlgError:
                    pass
        elif (step - burn_in) % thin == thin - 1:
            kept[k] = x
            kept_lp[k] = lx
            k += 1
    acc = n_acc / n_inb if n_inb else 0.0
    result = SampleSet(kept, log_unnorm_post=kept_lp)
    return MhResult(result, acc, n_oob, prop_chol @ prop_chol.T)


def importance_reweight(prior_samples, loglik2):
    """Weight stage-one samples by the second-stage likelihood.

    ``loglik2`` maps one parameter vector to a log likelihood; weights are
    normalized through log-sum-exp and the effective sample size
    ``1 / sum(w^2)`` is attached.
    """
    X = prior_samples.positions
    logw = np.array([loglik2(X[i]) for i in range(X.shape[0])], dtype=float)
    if np.all(logw == -np.inf):
        raise DegenerateWeights("all reweighting likelihoods vanished")
    m = logw.max()
    w = np.exp(logw - m)
    w /= w.sum()
    ess = float(1.0 / np.sum(w**2))
    out = SampleSet(X, log_unnorm_post=prior_samples.log_unnorm_post, weights=w,
                    dim_names=prior_samples.dim_names)
    return WeightedSampleSet(out, ess)


def sequential_posterior(approx_prior, loglik2, bounds, n_samples, burn_in,
                         random_state=None, init=None, thin=1,
                         prior_dims=None, extra_log_prior=None,
                         extra_sample_prior=None):
    """Second-stage inference with a fitted approximation as the prior.

    ``approx_prior`` is any fitted density model evaluated on the original
    parameter scale (wrap it in :class:`TransformedDensity` if it was fitted
    on transformed coordinates - the Jacobian correction is then applied
    automatically).  When the second stage has parameters the approximation
    does not cover (``prior_dims`` selects the covered columns),
    ``extra_log_prior`` supplies the prior for the remaining dimensions.
    """
    d = bounds.dim
    if prior_dims is None:
        prior_dims = np.arange(d)
    prior_dims = np.asarray(prior_dims, dtype=int)
    rest = np.setdiff1d(np.arange(d), prior_dims)
    if rest.size and extra_log_prior is None:
        raise InvalidInput("uncovered dimensions need extra_log_prior")

    def log_prior(theta):
        lp = float(approx_prior.score_samples(theta[prior_dims][None, :])[0])
        if rest.size:
            if lp == -np.inf:
                return -np.inf
            lp += extra_log_prior(theta[rest])
        return lp

    sampler = None
    if hasattr(approx_prior, "sample"):
        def sampler(rng):
            theta = np.empty(d)
            theta[prior_dims] = approx_prior.sample(1, random_state=rng)[0]
            if rest.size:
                theta[rest] = extra_sample_prior(rng)
            return theta
        try:
            approx_prior.sample(0)
        except NotImplementedError:
            sampler = None

    spec = PosteriorSpec(loglik2, log_prior, bounds, sample_prior=sampler)
    return run_mh(spec, n_samples, burn_in, random_state=random_state, init=init,
                  thin=thin)


@dataclass
class EvidenceResult:
    """Evidence estimate from regressing log posterior on log approximation."""

    log_evidence: float            # regression intercept
    slope: float                   # diagnostic; ~1 when the fit is faithful
    stderr: float                  # standard error of the intercept
    log_evidence_fixed_slope: float  # mean(log_unnorm - log approx)
    slope_warning: bool
    n_excluded: int


def estimate_log_evidence(model, samples, log_unnorm_post=None):
    """Marginal-likelihood estimate from a normalized approximation.

    Ordinary least squares of the unnormalized log posterior on the log of
    the fitted density: since the approximation integrates to one, the
    intercept estimates the log evidence when the slope is close to one.
    Points where the approximation vanishes (e.g. clipped GP predictions)
    are excluded and counted.
    """
    if isinstance(samples, SampleSet):
        X = samples.positions
        lp = samples.log_unnorm_post
    else:
        X = np.atleast_2d(np.asarray(samples, dtype=float))
        lp = np.asarray(log_unnorm_post, dtype=float).ravel()
    if lp is None:
        raise InvalidInput("evidence estimation needs unnormalized log posteriors")
    log_q = model.score_samples(X)
    keep = np.isfinite(log_q) & np.isfinite(lp)
    n_excl = int(np.count_nonzero(~keep))
    x = log_q[keep]
    y = lp[keep]
    if x.shape[0] < 10:
        raise InsufficientSamples("need at least 10 usable points for the regression")
    xbar, ybar = x.mean(), y.mean()
    sxx = np.sum((x - xbar) ** 2)
    if sxx <= 0:
        raise InsufficientSamples("log approximation is constant across samples")
    slope = float(np.sum((x - xbar) * (y - ybar)) / sxx)
    intercept = float(ybar - slope * xbar)
    resid = y - (intercept + slope * x)
    n = x.shape[0]
    s2 = float(np.sum(resid**2) / max(n - 2, 1))
    stderr = float(np.sqrt(s2 * (1.0 / n + xbar**2 / sxx)))
    fixed = float(np.mean(y - x))
    return EvidenceResult(intercept, slope, stderr, fixed, abs(slope - 1.0) > 0.1,
                          n_excl)
