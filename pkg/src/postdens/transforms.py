"""Prior bounds and per-dimension bijections onto the unbounded domain.

Bounded variables are mapped to the whole real line before fitting an
unbounded density model: ``log(x - a)`` for a lower bound, ``-log(b - x)``
for an upper bound (kept increasing so all Jacobians share a sign
convention) and a scaled logit when both bounds are present.  Densities are
corrected with the log-Jacobian of the map.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInput, OutOfSupport

IDENTITY = "identity"
LOG_SHIFT = "log_shift"
NEG_LOG_SHIFT = "neg_log_shift"
SCALED_LOGIT = "scaled_logit"

# Points closer than this (relative) to a bound count as on the boundary.
_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class Bounds:
    """Per-dimension lower/upper bounds; entries may be -inf / +inf."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise InvalidInput("lower and upper must have the same length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InvalidInput("bounds must not contain NaN")
        if not np.all(lo < hi):
            raise InvalidInput("each lower bound must be strictly below the upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    @classmethod
    def unbounded(cls, dim):
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    def is_unbounded(self):
        return bool(np.all(np.isneginf(self.lower)) and np.all(np.isposinf(self.upper)))

    def contains(self, points):
        """Strict interior membership per point (n,) bool."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((x > self.lower) & (x < self.upper), axis=1)


@dataclass(frozen=True)
class Transform:
    """Per-dimension increasing bijection from the open support onto R."""

    kinds: tuple
    lower: np.ndarray
    upper: np.ndarray

    @property
    def dim(self):
        return len(self.kinds)

    def is_identity(self):
        return all(k == IDENTITY for k in self.kinds)

    def _groups(self):
        """Cached per-kind column indices for vectorized evaluation."""
        cached = getattr(self, "_group_cache", None)
        if cached is None:
            cached = {kind: np.array([j for j, k in enumerate(self.kinds) if k == kind],
                                     dtype=int)
                      for kind in (IDENTITY, LOG_SHIFT, NEG_LOG_SHIFT, SCALED_LOGIT)}
            object.__setattr__(self, "_group_cache", cached)
        return cached


def build_transform(bounds):
    """Choose the transform kind per dimension from the bound pattern."""
    kinds = []
    for lo, hi in zip(bounds.lower, bounds.upper):
        if np.isneginf(lo) and np.isposinf(hi):
            kinds.append(IDENTITY)
        elif np.isposinf(hi):
            kinds.append(LOG_SHIFT)
        elif np.isneginf(lo):
            kinds.append(NEG_LOG_SHIFT)
        else:
            kinds.append(SCALED_LOGIT)
    return Transform(tuple(kinds), bounds.lower.copy(), bounds.upper.copy())


def _check_interior(t, x, g):
    """Reject points on or beyond the boundary (within rounding tolerance)."""
    low_idx = np.concatenate([g[LOG_SHIFT], g[SCALED_LOGIT]])
    if low_idx.size:
        a = t.lower[low_idx]
        if np.any(x[:, low_idx] - a <= _BOUNDARY_RTOL * (1.0 + np.abs(a))):
            raise OutOfSupport("point at or below a lower bound")
    high_idx = np.concatenate([g[NEG_LOG_SHIFT], g[SCALED_LOGIT]])
    if high_idx.size:
        b = t.upper[high_idx]
        if np.any(b - x[:, high_idx] <= _BOUNDARY_RTOL * (1.0 + np.abs(b))):
            raise OutOfSupport("point at or above an upper bound")


def transform_forward(t, points):
    """Map points from the bounded support onto the unbounded domain."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] != t.dim:
        raise InvalidInput("point dimensionality does not match transform")
    g = t._groups()
    _check_interior(t, x, g)
    out = x.copy()
    idx = g[LOG_SHIFT]
    if idx.size:
        out[:, idx] = np.log(x[:, idx] - t.lower[idx])
    idx = g[NEG_LOG_SHIFT]
    if idx.size:
        out[:, idx] = -np.log(t.upper[idx] - x[:, idx])
    idx = g[SCALED_LOGIT]
    if idx.size:
        out[:, idx] = (np.log(x[:, idx] - t.lower[idx])
                       - np.log(t.upper[idx] - x[:, idx]))
    return out


def transform_inverse(t, points):
    """Map unbounded-domain points back onto the original support."""
    z = np.atleast_2d(np.asarray(points, dtype=float))
    if z.shape[1] != t.dim:
        raise InvalidInput("point dimensionality does not match transform")
    g = t._groups()
    out = z.copy()
    idx = g[LOG_SHIFT]
    if idx.size:
        out[:, idx] = t.lower[idx] + np.exp(z[:, idx])
    idx = g[NEG_LOG_SHIFT]
    if idx.size:
        out[:, idx] = t.upper[idx] - np.exp(-z[:, idx])
    idx = g[SCALED_LOGIT]
    if idx.size:
        col = z[:, idx]
        # sigmoid evaluated stably on both tails
        neg = np.exp(np.minimum(col, 0.0))
        s = np.where(col >= 0, 1.0 / (1.0 + np.exp(-np.maximum(col, 0.0))),
                     neg / (1.0 + neg))
        out[:, idx] = t.lower[idx] + (t.upper[idx] - t.lower[idx]) * s
    return out


def log_jacobian(t, points):
    """Sum over dimensions of log |dT_j/dx_j| at original-space points.

    Satisfies ``pdf_original(x) = pdf_transformed(T(x)) * exp(log_jacobian(x))``.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] != t.dim:
        raise InvalidInput("point dimensionality does not match transform")
    g = t._groups()
    _check_interior(t, x, g)
    total = np.zeros(x.shape[0])
    idx = g[LOG_SHIFT]
    if idx.size:
        total -= np.sum(np.log(x[:, idx] - t.lower[idx]), axis=1)
    idx = g[NEG_LOG_SHIFT]
    if idx.size:
        total -= np.sum(np.log(t.upper[idx] - x[:, idx]), axis=1)
    idx = g[SCALED_LOGIT]
    if idx.size:
        total += np.sum(np.log(t.upper[idx] - t.lower[idx])
                        - np.log(x[:, idx] - t.lower[idx])
                        - np.log(t.upper[idx] - x[:, idx]), axis=1)
    return total


def mirror_at_bounds(x, bound, side):
    """Reflect 1-D samples across a boundary and append the reflections.

    ``side`` is ``"lower"`` when ``bound`` is a lower bound (samples must lie
    at or above it) and ``"upper"`` otherwise.  Returns the original samples
    followed by ``2*bound - x``.
    """
    arr = np.asarray(x, dtype=float).ravel()
    if side not in ("lower", "upper"):
        raise InvalidInput("side must be 'lower' or 'upper'")
    if arr.size == 0:
        return arr.copy()
    if side == "lower":
        if np.any(arr < bound):
            raise OutOfSupport("sample below the lower bound")
    else:
        if np.any(arr > bound):
            raise OutOfSupport("sample above the upper bound")
    return np.concatenate([arr, 2.0 * bound - arr])
