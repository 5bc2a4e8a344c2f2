"""Built-in test problems with synthetic-data generation.

Three targets drive the experiments: a random two-component Gaussian
mixture with a known density, a modified predator-prey ODE whose predation
term is split into a kill and a stress component (the stress part also
suppresses prey natality), and a small cell-signaling cascade with a
saturating drug-response factor.  Each provides exact log-likelihood
evaluators and deterministic synthetic-data generators, so inference
results can be validated without external data.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exceptions import StiffnessFailure
from .utils import check_rng

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f
        return deco


# ---------------------------------------------------------------------------
# known-density target: random Gaussian mixture
# ---------------------------------------------------------------------------

class GaussianMixtureTarget:
    """Two-component mixture with weights 2/3 and 1/3 and known density."""

    def __init__(self, weights, means, covs):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.covs = np.asarray(covs, dtype=float)
        self.chols = np.array([np.linalg.cholesky(c) for c in self.covs])
        self.dim = self.means.shape[1]

    def logpdf(self, X):
        from .mixture import _logsumexp, mvn_logpdf
        X = np.atleast_2d(np.asarray(X, dtype=float))
        logp = np.column_stack(
            [np.log(self.weights[g]) + mvn_logpdf(X, self.means[g], self.chols[g])
             for g in range(len(self.weights))])
        return _logsumexp(logp, axis=1)

    def pdf(self, X):
        return np.exp(self.logpdf(X))

    def sample(self, n_samples, random_state=None):
        rng = check_rng(random_state)
        comps = rng.choice(len(self.weights), size=n_samples, p=self.weights)
        z = rng.standard_normal((n_samples, self.dim))
        out = np.empty((n_samples, self.dim))
        for g in range(len(self.weights)):
            mask = comps == g
            out[mask] = self.means[g] + z[mask] @ self.chols[g].T
        return out


def gm_target(dim, separated=False, random_state=None):
    """Random mixture target: weights (2/3, 1/3), means 0 (or 0 and 10·1).

    Covariances are ``A.T @ A + dim * I`` with standard-normal ``A``, which
    keeps conditioning comparable across dimensionalities.
    """
    rng = check_rng(random_state)
    covs = []
    for _ in range(2):
        A = rng.standard_normal((dim, dim))
        covs.append(A.T @ A + dim * np.eye(dim))
    mu1 = np.zeros(dim)
    mu2 = mu1 + 10.0 if separated else mu1.copy()
    return GaussianMixtureTarget([2.0 / 3.0, 1.0 / 3.0], [mu1, mu2], covs)


# ---------------------------------------------------------------------------
# modified predator-prey ODE
# ---------------------------------------------------------------------------

_DP_STATUS_OK = 0
_DP_STATUS_UNDERFLOW = 1
_DP_STATUS_NONFINITE = 2


@njit(cache=True)
def _lv_dp45(alpha, beta, delta, gamma, x0, y0, t_grid, rtol, atol):
    """Dormand-Prince 4(5) integration of the predator-prey system.

    Walks the time grid with embedded error control; the step is clamped to
    land exactly on each output time.  Returns the state trajectory and a
    status flag (0 ok, 1 step underflow, 2 non-finite state).
    """
    n = t_grid.shape[0]
    out = np.empty((n, 2))
    x = x0
    y = y0
    out[0, 0] = x
    out[0, 1] = y
    t = t_grid[0]
    h = 0.01
    for i in range(1, n):
        t_end = t_grid[i]
        while t < t_end:
            if h < 1e-13 * max(1.0, abs(t_end)):
                return out, _DP_STATUS_UNDERFLOW
            hs = h
            clipped = False
            if t + hs > t_end:
                hs = t_end - t
                clipped = True

            k1x = alpha * x - beta * x * y
            k1y = delta * x * y - gamma * y

            x2 = x + hs * 0.2 * k1x
            y2 = y + hs * 0.2 * k1y
            k2x = alpha * x2 - beta * x2 * y2
            k2y = delta * x2 * y2 - gamma * y2

            x3 = x + hs * (0.075 * k1x + 0.225 * k2x)
            y3 = y + hs * (0.075 * k1y + 0.225 * k2y)
            k3x = alpha * x3 - beta * x3 * y3
            k3y = delta * x3 * y3 - gamma * y3

            x4 = x + hs * (0.9777777777777777 * k1x - 3.7333333333333334 * k2x
                           + 3.5555555555555554 * k3x)
            y4 = y + hs * (0.9777777777777777 * k1y - 3.7333333333333334 * k2y
                           + 3.5555555555555554 * k3y)
            k4x = alpha * x4 - beta * x4 * y4
            k4y = delta * x4 * y4 - gamma * y4

            x5 = x + hs * (2.9525986892242035 * k1x - 11.595793324188385 * k2x
                           + 9.822892851699436 * k3x - 0.2908093278463649 * k4x)
            y5 = y + hs * (2.9525986892242035 * k1y - 11.595793324188385 * k2y
                           + 9.822892851699436 * k3y - 0.2908093278463649 * k4y)
            k5x = alpha * x5 - beta * x5 * y5
            k5y = delta * x5 * y5 - gamma * y5

            x6 = x + hs * (2.8462752525252526 * k1x - 10.757575757575758 * k2x
                           + 8.906422717743473 * k3x + 0.2784090909090909 * k4x
                           - 0.2735313036020583 * k5x)
            y6 = y + hs * (2.8462752525252526 * k1y - 10.757575757575758 * k2y
                           + 8.906422717743473 * k3y + 0.2784090909090909 * k4y
                           - 0.2735313036020583 * k5y)
            k6x = alpha * x6 - beta * x6 * y6
            k6y = delta * x6 * y6 - gamma * y6

            xn = x + hs * (0.09114583333333333 * k1x + 0.44923629829290207 * k3x
                           + 0.6510416666666666 * k4x - 0.322376179245283 * k5x
                           + 0.13095238095238096 * k6x)
            yn = y + hs * (0.09114583333333333 * k1y + 0.44923629829290207 * k3y
                           + 0.6510416666666666 * k4y - 0.322376179245283 * k5y
                           + 0.13095238095238096 * k6y)
            k7x = alpha * xn - beta * xn * yn
            k7y = delta * xn * yn - gamma * yn

            errx = hs * (0.0012326388888888888 * k1x - 0.0042527702905061394 * k3x
                         + 0.03697916666666667 * k4x - 0.05086379716981132 * k5x
                         + 0.0419047619047619 * k6x - 0.025 * k7x)
            erry = hs * (0.0012326388888888888 * k1y - 0.0042527702905061394 * k3y
                         + 0.03697916666666667 * k4y - 0.05086379716981132 * k5y
                         + 0.0419047619047619 * k6y - 0.025 * k7y)

            if not (np.isfinite(xn) and np.isfinite(yn)):
                return out, _DP_STATUS_NONFINITE
            sx = atol + rtol * max(abs(x), abs(xn))
            sy = atol + rtol * max(abs(y), abs(yn))
            err = np.sqrt(0.5 * ((errx / sx) ** 2 + (erry / sy) ** 2))
            if err <= 1.0:
                t = t + hs
                x = xn
                y = yn
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
                if not clipped:
                    h = hs * fac
                else:
                    h = max(h, hs * fac)
            else:
                h = hs * max(0.2, 0.9 * err ** -0.2)
        out[i, 0] = x
        out[i, 1] = y
    return out, _DP_STATUS_OK


@dataclass(frozen=True)
class LvParams:
    """Dynamics rates of the modified predator-prey model (per year)."""

    alpha: float
    beta_kill: float
    beta_stress: float
    delta: float
    gamma: float

    def as_array(self):
        return np.array([self.alpha, self.beta_kill, self.beta_stress,
                         self.delta, self.gamma])


def lv_simulate(params, x0, y0, t_grid, rtol=1e-8, atol=1e-10):
    """Integrate the system and return prey/predator densities and natality.

    Natality (offspring per adult female per season) is
    ``2 * exp(alpha - beta_stress * y(t))``.
    """
    p = params.as_array() if isinstance(params, LvParams) else np.asarray(params, float)
    t_grid = np.asarray(t_grid, dtype=float)
    traj, status = _lv_dp45(p[0], p[1] + p[2], p[3], p[4],
                            float(x0), float(y0), t_grid, rtol, atol)
    if status != _DP_STATUS_OK:
        raise StiffnessFailure("step size underflow or non-finite state")
    natality = 2.0 * np.exp(p[0] - p[2] * traj[:, 1])
    return traj[:, 0], traj[:, 1], natality


# observation noise: fixed for density observations and for natality
LV_SIGMA_DENSITY = 0.15
LV_SIGMA_NATALITY = 2.0


@dataclass
class LvConfig:
    """Versioned defaults for the synthetic predator-prey problem.

    The true rates give an oscillation period near ten years; priors are
    ours (log-normal per rate on log scale, a box on natural scale) and are
    deliberately narrow enough that only that oscillation is supported.
    """

    config_version: int = 1
    true_params: tuple = (0.6, 0.4, 0.2, 0.66, 0.66)
    init_a: tuple = (1.2, 0.6)    # dataset A (predator observations)
    init_b: tuple = (0.8, 1.1)    # dataset B (prey + natality observations)
    n_times: int = 20
    prior_center: tuple = (0.6, 0.4, 0.2, 0.66, 0.66, 1.0, 1.0)
    prior_log_sd: float = 0.5
    box_lower_factor: float = 0.45
    box_upper_factor: float = 2.2

    def time_grid(self):
        return np.arange(self.n_times, dtype=float)


def _gauss_loglik(obs, pred, sigma):
    r = (obs - pred) / sigma
    return float(-0.5 * np.sum(r**2) - obs.shape[0] * np.log(sigma * np.sqrt(2 * np.pi)))


def lv_loglik(params, x0, y0, dataset, which, rtol=1e-8, atol=1e-10):
    """Gaussian log-likelihood of one dataset.

    ``which`` is "lynx" for predator-density observations only, "hare" for
    prey density plus natality.  Integration failures are surfaced by the
    caller-facing evaluators as ``-inf``.
    """
    t = dataset["t"]
    x, y, nat = lv_simulate(params, x0, y0, t, rtol=rtol, atol=atol)
    if which == "lynx":
        return _gauss_loglik(dataset["y_obs"], y, LV_SIGMA_DENSITY)
    if which == "hare":
        return (_gauss_loglik(dataset["x_obs"], x, LV_SIGMA_DENSITY)
                + _gauss_loglik(dataset["natality_obs"], nat, LV_SIGMA_NATALITY))
    raise ValueError(f"unknown observation scheme {which!r}")


def make_lv_synthetic(config=None, random_state=None, noise_scale=1.0):
    """Simulate both observation schemes and add likelihood-matched noise.

    Returns ``(dataset_a, dataset_b, meta)``: dataset A observes the
    predator density, dataset B observes prey density and natality.
    """
    cfg = config or LvConfig()
    rng = check_rng(random_state)
    t = cfg.time_grid()
    p = np.asarray(cfg.true_params)

    xa, ya, _ = lv_simulate(p, *cfg.init_a, t)
    data_a = {"t": t, "y_obs": ya + noise_scale * LV_SIGMA_DENSITY
              * rng.standard_normal(t.shape[0])}
    xb, yb, natb = lv_simulate(p, *cfg.init_b, t)
    data_b = {"t": t,
              "x_obs": xb + noise_scale * LV_SIGMA_DENSITY * rng.standard_normal(t.shape[0]),
              "natality_obs": natb + noise_scale * LV_SIGMA_NATALITY
              * rng.standard_normal(t.shape[0])}
    meta = {"config_version": cfg.config_version,
            "true_params": list(cfg.true_params),
            "init_a": list(cfg.init_a), "init_b": list(cfg.init_b),
            "sigma_density": LV_SIGMA_DENSITY, "sigma_natality": LV_SIGMA_NATALITY,
            "noise_scale": noise_scale}
    return data_a, data_b, meta


def write_lv_dataset(path, dataset, meta):
    """CSV time series plus a JSON metadata sidecar."""
    cols = ["t"] + [k for k in ("y_obs", "x_obs", "natality_obs") if k in dataset]
    data = np.column_stack([dataset[c] for c in cols])
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)


def read_lv_dataset(path):
    raw = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(raw[name]) for name in raw.dtype.names}


class LotkaVolterraProblem:
    """Evaluator factory for the two-dataset inference experiments.

    Parameter layouts: a single-dataset stage has 7 parameters (5 dynamics
    rates + that dataset's two initial conditions); the joint problem has 9
    (5 rates + 2 + 2).  ``log_scale`` switches between inference on log
    parameters (unbounded, log-normal prior) and natural scale (uniform box
    prior).
    """

    def __init__(self, data_a, data_b, config=None, log_scale=True,
                 rtol=1e-8, atol=1e-10):
        self.data_a = data_a
        self.data_b = data_b
        self.cfg = config or LvConfig()
        self.log_scale = log_scale
        self.rtol = rtol
        self.atol = atol
        self.stiffness_failures = 0

    # -- parameter handling ---------------------------------------------------

    def _natural(self, theta):
        return np.exp(theta) if self.log_scale else np.asarray(theta, float)

    def stage_bounds(self, n_params=7):
        from .transforms import Bounds
        if self.log_scale:
            return Bounds.unbounded(n_params)
        center = np.asarray(self.cfg.prior_center[:n_params])
        if n_params == 9:
            center = np.asarray(list(self.cfg.prior_center[:5])
                                + [1.0, 1.0, 1.0, 1.0])
        return Bounds(center * self.cfg.box_lower_factor,
                      center * self.cfg.box_upper_factor)

    def log_prior(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = theta.shape[0]
        if self.log_scale:
            center = np.log(self._prior_center(k))
            z = (theta - center) / self.cfg.prior_log_sd
            return float(-0.5 * np.sum(z**2)
                         - k * np.log(self.cfg.prior_log_sd * np.sqrt(2 * np.pi)))
        b = self.stage_bounds(k)
        inside = np.all((theta >= b.lower) & (theta <= b.upper))
        return float(-np.sum(np.log(b.upper - b.lower))) if inside else -np.inf

    def _prior_center(self, k):
        if k == 9:
            return np.asarray(list(self.cfg.prior_center[:5]) + [1.0, 1.0, 1.0, 1.0])
        return np.asarray(self.cfg.prior_center[:k])

    def sample_prior(self, rng, n_params=7):
        if self.log_scale:
            center = np.log(self._prior_center(n_params))
            return center + self.cfg.prior_log_sd * rng.standard_normal(n_params)
        b = self.stage_bounds(n_params)
        return rng.uniform(b.lower, b.upper)

    # -- likelihoods ------------------------------------------------------------

    def _loglik(self, rates, x0, y0, dataset, which):
        if np.any(~np.isfinite(rates)) or np.any(rates <= 0) or x0 <= 0 or y0 <= 0:
            return -np.inf
        try:
            return lv_loglik(rates, x0, y0, dataset, which,
                             rtol=self.rtol, atol=self.atol)
        except StiffnessFailure:
            self.stiffness_failures += 1
            return -np.inf

    def loglik_stage_a(self, theta):
        """7 parameters: rates + dataset-A initial conditions."""
        nat = self._natural(theta)
        return self._loglik(nat[:5], nat[5], nat[6], self.data_a, "lynx")

    def loglik_stage_b(self, theta):
        """7 parameters: rates + dataset-B initial conditions."""
        nat = self._natural(theta)
        return self._loglik(nat[:5], nat[5], nat[6], self.data_b, "hare")

    def loglik_joint(self, theta):
        """9 parameters: rates + A initial conditions + B initial conditions."""
        nat = self._natural(theta)
        la = self._loglik(nat[:5], nat[5], nat[6], self.data_a, "lynx")
        if la == -np.inf:
            return la
        return la + self._loglik(nat[:5], nat[7], nat[8], self.data_b, "hare")


# ---------------------------------------------------------------------------
# signaling cascade
# ---------------------------------------------------------------------------

_SIG_SLOPE = 9.19024
SIG_NU = 3.0
SIG_SIGMA = 0.2

SIGNALING_PARAM_NAMES = ("b1", "b2", "b3", "a1", "a2", "a3", "a4", "k", "s", "h")


def _sigmoid_f(x):
    return 1.0 / (1.0 + np.exp(-_SIG_SLOPE * (x - 0.5)))


def _drug_g(w, k, s, h):
    return k + (1.0 - k) / (np.power(10.0, s * (w - h)) + 1.0)


def signaling_predict(params, m, n, w):
    """Propagate the cascade; returns the two observable means (y, z)."""
    b1, b2, b3, a1, a2, a3, a4, k, s, h = params
    x = _sigmoid_f(b1 + a1 * np.asarray(m, float) + a2 * np.asarray(n, float)) \
        * _drug_g(np.asarray(w, float), k, s, h)
    y = _sigmoid_f(b2 + a3 * x)
    z = _sigmoid_f(b3 + a4 * y)
    return y, z


def _t_logpdf(resid, sigma=SIG_SIGMA, nu=SIG_NU):
    """Scaled Student-t log density of residuals."""
    c = (gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0)
         - 0.5 * np.log(nu * np.pi) - np.log(sigma))
    return c - (nu + 1.0) / 2.0 * np.log1p((resid / sigma) ** 2 / nu)


def signaling_loglik(params, rows):
    """Sum of t-densities over data rows (m, n, w, p_obs, q_obs)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    y, z = signaling_predict(params, rows[:, 0], rows[:, 1], rows[:, 2])
    return float(np.sum(_t_logpdf(rows[:, 3] - y)) + np.sum(_t_logpdf(rows[:, 4] - z)))


SIGNALING_BOX = {
    "lower": np.array([-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
    "upper": np.array([2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 3.0, 1.0, 4.0, 1.0]),
}

# eight cell lines: amplification / mutation patterns
SIGNALING_CELL_LINES = ((1, 0), (0, 1), (1, 1), (0, 0), (1, 0), (0, 1), (1, 1), (0, 0))


def make_signaling_synthetic(params, random_state=None, w_values=(0.0, 1.0),
                             noise_scale=1.0, cell_lines=SIGNALING_CELL_LINES):
    """Rows (m, n, w, p_obs, q_obs) with t-distributed observation noise."""
    rng = check_rng(random_state)
    rows = []
    for w in w_values:
        for (m, n) in cell_lines:
            y, z = signaling_predict(params, m, n, w)
            p_obs = float(y) + noise_scale * SIG_SIGMA * rng.standard_t(SIG_NU)
            q_obs = float(z) + noise_scale * SIG_SIGMA * rng.standard_t(SIG_NU)
            rows.append([m, n, w, p_obs, q_obs])
    return np.asarray(rows, dtype=float)


class SignalingProblem:
    """Evaluator bundle for the signaling test case (uniform box prior)."""

    def __init__(self, rows, lower=None, upper=None):
        self.rows = np.atleast_2d(np.asarray(rows, dtype=float))
        self.lower = np.asarray(SIGNALING_BOX["lower"] if lower is None else lower,
                                dtype=float)
        self.upper = np.asarray(SIGNALING_BOX["upper"] if upper is None else upper,
                                dtype=float)

    def bounds(self):
        from .transforms import Bounds
        return Bounds(self.lower, self.upper)

    def log_prior(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.all(theta >= self.lower) and np.all(theta <= self.upper):
            return float(-np.sum(np.log(self.upper - self.lower)))
        return -np.inf

    def sample_prior(self, rng):
        return rng.uniform(self.lower, self.upper)

    def subset(self, w=None, observable=None):
        """Restricted-likelihood evaluator: by treatment or by observable."""
        rows = self.rows
        if w is not None:
            rows = rows[rows[:, 2] == w]

        if observable is None:
            return lambda theta: signaling_loglik(theta, rows)

        col = 3 if observable == "p" else 4

        def loglik(theta, rows=rows, col=col):
            y, z = signaling_predict(theta, rows[:, 0], rows[:, 1], rows[:, 2])
            mean = y if col == 3 else z
            return float(np.sum(_t_logpdf(rows[:, col] - mean)))
        return loglik

    def loglik(self, theta):
        return signaling_loglik(theta, self.rows)
