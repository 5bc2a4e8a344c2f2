"""Small numeric helpers shared by the fitting modules."""

import numpy as np

from .exceptions import InvalidInput

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0  # 1/phi
_INVPHI2 = (3.0 - np.sqrt(5.0)) / 2.0  # 1/phi^2


def as_matrix(x, name="X"):
    """Coerce to a finite 2-D float array (n, d)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def as_vector(x, name="x"):
    """Coerce to a 1-D float array."""
    arr = np.asarray(x, dtype=float).ravel()
    return arr


def golden_section_minimize(fun, lo, hi, tol=1e-6, max_iter=200):
    """Minimize a scalar function on [lo, hi] by golden-section search.

    Assumes ``fun`` is unimodal on the interval; returns ``(x_min, f_min)``.
    ``fun`` may return ``inf`` to mark infeasible points.
    """
    if not hi > lo:
        raise InvalidInput("golden section requires hi > lo")
    a, b = float(lo), float(hi)
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc, fd = fun(c), fun(d)
    n_evals = {c: fc, d: fd}
    it = 0
    while h > tol and it < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INVPHI * h
            fd = fun(d)
        it += 1
    candidates = [(fc, c), (fd, d)]
    for f, x in [(fun(a), a), (fun(b), b)]:
        candidates.append((f, x))
    f_best, x_best = min(candidates, key=lambda t: t[0])
    return x_best, f_best


def check_rng(random_state):
    """Turn ``None``, an int seed, or a Generator into a ``np.random.Generator``."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def weighted_cov(x, mean=None):
    """Plain sample covariance (denominator n), accepting (n, d) input."""
    x = np.asarray(x, dtype=float)
    if mean is None:
        mean = x.mean(axis=0)
    xc = x - mean
    return xc.T @ xc / x.shape[0]
