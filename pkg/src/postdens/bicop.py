"""Bivariate copula families with rotations, h-functions, and AIC fitting.

Implemented families: independence, Gaussian, Clayton, Gumbel, and Frank.
Clayton and Gumbel are also fitted in their 90/180/270 degree rotations so
both tail-dependence orientations and negative dependence are covered.  The
parameter is initialized by inverting the sample Kendall tau and refined by
one-dimensional maximum likelihood (golden-section search); the family (and
rotation) minimizing the AIC wins, with ties broken toward fewer parameters
and then the fixed family order above.

The h-functions are the conditional CDFs of the copula:
``hfunc1(u, v) = P(V <= v | U = u)`` and ``hfunc2(u, v) = P(U <= u | V = v)``;
their inverses drive vine sampling.
"""

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .exceptions import InsufficientSamples, InvalidInput, InvalidPIT
from .utils import golden_section_minimize

_EPS = 1e-12  # unit-interval clamp; arguments at 0/1 are clamped, not errors

FAMILIES = ("independence", "gaussian", "clayton", "gumbel", "frank")

_THETA_BOUNDS = {
    "gaussian": (-0.999, 0.999),
    "clayton": (1e-4, 28.0),
    "gumbel": (1.0, 17.0),
    "frank": (-35.0, 35.0),
}


def _clamp(u):
    return np.clip(np.asarray(u, dtype=float), _EPS, 1.0 - _EPS)


# ---------------------------------------------------------------------------
# base-family kernels (exchangeable; operate in the unrotated frame)
# ---------------------------------------------------------------------------

def _gauss_logpdf(u, v, rho):
    x, y = ndtri(u), ndtri(v)
    r2 = 1.0 - rho * rho
    return -0.5 * np.log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)


def _gauss_h(a, b, rho):
    return ndtr((ndtri(a) - rho * ndtri(b)) / np.sqrt(1.0 - rho * rho))


def _gauss_hinv(w, b, rho):
    return ndtr(ndtri(w) * np.sqrt(1.0 - rho * rho) + rho * ndtri(b))


def _clayton_logS(u, v, th):
    a = -th * np.log(u)
    b = -th * np.log(v)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _clayton_logpdf(u, v, th):
    return (np.log1p(th) - (th + 1.0) * (np.log(u) + np.log(v))
            - (2.0 + 1.0 / th) * _clayton_logS(u, v, th))


def _clayton_h(a, b, th):
    # d/db of (a^-th + b^-th - 1)^(-1/th)
    logh = -(th + 1.0) * np.log(b) - (1.0 + 1.0 / th) * _clayton_logS(a, b, th)
    return np.exp(logh)


def _clayton_hinv(w, b, th):
    logt = -th / (th + 1.0) * np.log(w) - th * np.log(b)
    logb = -th * np.log(b)
    inner = 1.0 - np.exp(logb - logt) + np.exp(-logt)
    inner = np.maximum(inner, 1e-300)
    logsum = logt + np.log(inner)
    return np.exp(-logsum / th)


def _gumbel_parts(u, v, th):
    lx = np.log(-np.log(u))
    ly = np.log(-np.log(v))
    logS = np.logaddexp(th * lx, th * ly)
    wtil = np.exp(logS / th)
    return lx, ly, logS, wtil


def _gumbel_logpdf(u, v, th):
    lx, ly, logS, wtil = _gumbel_parts(u, v, th)
    return (-wtil - np.log(u) - np.log(v) + (th - 1.0) * (lx + ly)
            + (2.0 / th - 2.0) * logS + np.log1p((th - 1.0) / wtil))


def _gumbel_h(a, b, th):
    lx, ly, logS, wtil = _gumbel_parts(a, b, th)
    logh = -wtil + (1.0 / th - 1.0) * logS + (th - 1.0) * ly - np.log(b)
    return np.exp(logh)


def _gumbel_hinv(w, b, th, iters=80):
    w = np.asarray(w, dtype=float)
    lo = np.full(w.shape, _EPS)
    hi = np.full(w.shape, 1.0 - _EPS)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = _gumbel_h(mid, b, th) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _frank_logpdf(u, v, th):
    em = np.expm1(-th)
    eu = np.expm1(-th * u)
    ev = np.expm1(-th * v)
    return (np.log(-th * em) - th * (u + v) - 2.0 * np.log(np.abs(em + eu * ev)))


def _frank_h(a, b, th):
    em = np.expm1(-th)
    ea = np.expm1(-th * a)
    eb = np.expm1(-th * b)
    return np.exp(-th * b) * ea / (em + ea * eb)


def _frank_hinv(w, b, th):
    em = np.expm1(-th)
    eb = np.expm1(-th * b)
    ea = w * em / (np.exp(-th * b) - w * eb)
    return -np.log1p(ea) / th


# ---------------------------------------------------------------------------
# Kendall tau relations
# ---------------------------------------------------------------------------

def _frank_tau(theta):
    if abs(theta) < 1e-8:
        return theta / 9.0
    debye = quad(lambda t: t / np.expm1(t), 0.0, theta, limit=200)[0] / theta
    return 1.0 - 4.0 / theta * (1.0 - debye)


def tau_to_theta(family, tau):
    """Closed-form (or numeric for Frank) Kendall-tau inversion."""
    if family == "gaussian":
        return np.sin(np.pi * tau / 2.0)
    if family == "clayton":
        tau = min(max(tau, 1e-6), 0.93)
        return 2.0 * tau / (1.0 - tau)
    if family == "gumbel":
        tau = min(max(tau, 0.0), 0.94)
        return 1.0 / (1.0 - tau)
    if family == "frank":
        if abs(tau) < 1e-8:
            return 1e-6
        hi = _THETA_BOUNDS["frank"][1]
        tau_c = min(abs(tau), _frank_tau(hi) - 1e-9)
        theta = brentq(lambda t: _frank_tau(t) - tau_c, 1e-8, hi, xtol=1e-8)
        return theta if tau > 0 else -theta
    raise InvalidInput(f"no tau inversion for family {family!r}")


def theta_to_tau(family, theta):
    if family == "gaussian":
        return 2.0 / np.pi * np.arcsin(theta)
    if family == "clayton":
        return theta / (theta + 2.0)
    if family == "gumbel":
        return 1.0 - 1.0 / theta
    if family == "frank":
        return _frank_tau(theta)
    raise InvalidInput(f"no tau relation for family {family!r}")


def kendall_tau(u, v):
    """Kendall's tau-a: (concordant - discordant) / (n (n-1) / 2).

    Pairs tied in either coordinate count as neither concordant nor
    discordant.  O(n log n) via an order-statistic (Fenwick) tree.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape[0] != v.shape[0]:
        raise InvalidInput("kendall_tau requires equal-length inputs")
    n = u.shape[0]
    if n < 2:
        raise InvalidInput("kendall_tau requires at least two observations")

    order = np.lexsort((v, u))
    us, vs = u[order], v[order]
    ranks = np.searchsorted(np.unique(vs), vs) + 1  # 1-based rank compression
    m = int(ranks.max())
    tree = [0] * (m + 1)

    def update(i):
        while i <= m:
            tree[i] += 1
            i += i & (-i)

    def query(i):
        s = 0
        while i > 0:
            s += tree[i]
            i -= i & (-i)
        return s

    conc = disc = 0
    seen = 0
    i = 0
    while i < n:
        j = i
        while j < n and us[j] == us[i]:
            j += 1
        for k in range(i, j):
            r = int(ranks[k])
            less = query(r - 1)
            less_eq = query(r)
            conc += less
            disc += seen - less_eq
        for k in range(i, j):
            update(int(ranks[k]))
        seen += j - i
        i = j
    return 2.0 * (conc - disc) / (n * (n - 1))


# ---------------------------------------------------------------------------
# rotated copula model
# ---------------------------------------------------------------------------

_BASE = {
    "gaussian": (_gauss_logpdf, _gauss_h, _gauss_hinv),
    "clayton": (_clayton_logpdf, _clayton_h, _clayton_hinv),
    "gumbel": (_gumbel_logpdf, _gumbel_h, _gumbel_hinv),
    "frank": (_frank_logpdf, _frank_h, _frank_hinv),
}


class BicopModel:
    """A fitted (family, rotation, theta) bivariate copula."""

    def __init__(self, family, theta=0.0, rotation=0, loglik=np.nan, aic=np.nan,
                 n_obs=0):
        if family not in FAMILIES:
            raise InvalidInput(f"unknown copula family {family!r}")
        if rotation not in (0, 90, 180, 270):
            raise InvalidInput("rotation must be one of 0, 90, 180, 270")
        if rotation and family not in ("clayton", "gumbel"):
            raise InvalidInput("rotations only apply to clayton and gumbel")
        self.family = family
        self.theta = float(theta)
        self.rotation = int(rotation)
        self.loglik = float(loglik)
        self.aic = float(aic)
        self.n_obs = int(n_obs)

    def __repr__(self):
        rot = f", rot={self.rotation}" if self.rotation else ""
        return f"BicopModel({self.family}, theta={self.theta:.4g}{rot})"

    # -- density -------------------------------------------------------------

    def logpdf(self, u, v):
        u, v = _clamp(u), _clamp(v)
        if self.family == "independence":
            return np.zeros(np.broadcast(u, v).shape)
        base = _BASE[self.family][0]
        r = self.rotation
        if r == 0:
            return base(u, v, self.theta)
        if r == 90:
            return base(1.0 - u, v, self.theta)
        if r == 180:
            return base(1.0 - u, 1.0 - v, self.theta)
        return base(u, 1.0 - v, self.theta)

    def pdf(self, u, v):
        return np.exp(self.logpdf(u, v))

    # -- conditionals ----------------------------------------------------------

    def hfunc2(self, u, v):
        """P(U <= u | V = v)."""
        u, v = _clamp(u), _clamp(v)
        if self.family == "independence":
            return u * np.ones(np.broadcast(u, v).shape)
        h = _BASE[self.family][1]
        r = self.rotation
        if r == 0:
            out = h(u, v, self.theta)
        elif r == 90:
            out = 1.0 - h(1.0 - u, v, self.theta)
        elif r == 180:
            out = 1.0 - h(1.0 - u, 1.0 - v, self.theta)
        else:
            out = h(u, 1.0 - v, self.theta)
        return np.clip(out, _EPS, 1.0 - _EPS)

    def hfunc1(self, u, v):
        """P(V <= v | U = u)."""
        u, v = _clamp(u), _clamp(v)
        if self.family == "independence":
            return v * np.ones(np.broadcast(u, v).shape)
        h = _BASE[self.family][1]
        r = self.rotation
        if r == 0:
            out = h(v, u, self.theta)
        elif r == 90:
            out = h(v, 1.0 - u, self.theta)
        elif r == 180:
            out = 1.0 - h(1.0 - v, 1.0 - u, self.theta)
        else:
            out = 1.0 - h(1.0 - v, u, self.theta)
        return np.clip(out, _EPS, 1.0 - _EPS)

    def hinv2(self, w, v):
        """u such that hfunc2(u, v) = w."""
        w, v = _clamp(w), _clamp(v)
        if self.family == "independence":
            return w * np.ones(np.broadcast(w, v).shape)
        hinv = _BASE[self.family][2]
        r = self.rotation
        if r == 0:
            out = hinv(w, v, self.theta)
        elif r == 90:
            out = 1.0 - hinv(1.0 - w, v, self.theta)
        elif r == 180:
            out = 1.0 - hinv(1.0 - w, 1.0 - v, self.theta)
        else:
            out = hinv(w, 1.0 - v, self.theta)
        return np.clip(out, _EPS, 1.0 - _EPS)

    def hinv1(self, u, w):
        """v such that hfunc1(u, v) = w."""
        u, w = _clamp(u), _clamp(w)
        if self.family == "independence":
            return w * np.ones(np.broadcast(u, w).shape)
        hinv = _BASE[self.family][2]
        r = self.rotation
        if r == 0:
            out = hinv(w, u, self.theta)
        elif r == 90:
            out = hinv(w, 1.0 - u, self.theta)
        elif r == 180:
            out = 1.0 - hinv(1.0 - w, 1.0 - u, self.theta)
        else:
            out = 1.0 - hinv(1.0 - w, u, self.theta)
        return np.clip(out, _EPS, 1.0 - _EPS)

    # -- serialization ---------------------------------------------------------

    def to_dict(self):
        return {"family": self.family, "theta": self.theta, "rotation": self.rotation,
                "loglik": self.loglik, "aic": self.aic, "n_obs": self.n_obs}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], d["theta"], d["rotation"], d["loglik"], d["aic"],
                   d["n_obs"])


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

_TAU_WINDOW = 0.3  # half-width of the ML search window around the tau estimate

_TAU_RANGES = {
    "gaussian": (-0.99, 0.99),
    "clayton": (1e-4, 0.93),
    "gumbel": (0.0, 0.94),
    "frank": (-0.95, 0.95),
}


def _candidate_rotations(family):
    return (0, 90, 180, 270) if family in ("clayton", "gumbel") else (0,)


def _base_frame(u, v, rotation):
    """Data mapped into the unrotated frame of the base family."""
    if rotation == 0:
        return u, v
    if rotation == 90:
        return 1.0 - u, v
    if rotation == 180:
        return 1.0 - u, 1.0 - v
    return u, 1.0 - v


def fit_bicop(u, v, families=FAMILIES):
    """Fit all candidate family/rotation pairs and return the AIC winner."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise InvalidInput("u and v must have the same length")
    if np.any(u <= 0) or np.any(u >= 1) or np.any(v <= 0) or np.any(v >= 1):
        raise InvalidPIT("copula data must lie strictly inside (0, 1)")
    n = u.shape[0]
    if n < 30:
        raise InsufficientSamples("copula fit needs at least 30 observations")

    tau_hat = kendall_tau(u, v)
    candidates = [BicopModel("independence", loglik=0.0, aic=0.0, n_obs=n)]

    for family in families:
        if family == "independence":
            continue
        for rot in _candidate_rotations(family):
            tau_base = tau_hat if rot in (0, 180) else -tau_hat
            t_lo, t_hi = _TAU_RANGES[family]
            w_lo = max(t_lo, tau_base - _TAU_WINDOW)
            w_hi = min(t_hi, tau_base + _TAU_WINDOW)
            if w_lo >= w_hi:
                continue
            th_lo = tau_to_theta(family, w_lo)
            th_hi = tau_to_theta(family, w_hi)
            if family == "frank" and th_lo * th_hi < 0:
                # keep zero out of the interval; split around it
                th_lo = th_lo if abs(th_lo) > 1e-6 else 1e-6 * np.sign(th_hi)
            lo, hi = sorted((th_lo, th_hi))
            b_lo, b_hi = _THETA_BOUNDS[family]
            lo, hi = max(lo, b_lo), min(hi, b_hi)
            if lo >= hi:
                continue
            ub, vb = _base_frame(u, v, rot)
            base_logpdf = _BASE[family][0]

            def negll(th):
                with np.errstate(all="ignore"):
                    lp = base_logpdf(ub, vb, th)
                if not np.all(np.isfinite(lp)):
                    return np.inf
                return -float(lp.sum())

            theta, nll = golden_section_minimize(negll, lo, hi, tol=1e-6)
            if not np.isfinite(nll):
                continue
            ll = -nll
            aic = 2.0 - 2.0 * ll
            candidates.append(BicopModel(family, theta, rot, ll, aic, n))

    # minimum AIC; ties resolved toward fewer parameters, then family order
    def sort_key(model):
        return (model.aic, 0 if model.family == "independence" else 1,
                FAMILIES.index(model.family), model.rotation)

    return min(candidates, key=sort_key)
