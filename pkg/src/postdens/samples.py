"""Sample-set container and CSV interchange format.

A sample set holds N positions in D dimensions, optionally with the
unnormalized log-posterior value of each position and/or normalized
importance weights.  Weights are always stored renormalized to sum to one.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInput, InvalidSample, InvalidWeight

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class SampleSet:
    """Immutable container of Monte Carlo samples.

    Parameters
    ----------
    positions : ndarray of shape (n, d)
        Sample coordinates; must be finite.
    log_unnorm_post : ndarray of shape (n,), optional
        Unnormalized log-posterior value at each position (may contain -inf).
    weights : ndarray of shape (n,), optional
        Nonnegative weights; renormalized to sum to one on construction.
    dim_names : tuple of str, optional
        One name per dimension.
    """

    positions: np.ndarray
    log_unnorm_post: np.ndarray | None = None
    weights: np.ndarray | None = None
    dim_names: tuple | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise InvalidSample(f"positions must be an N x D matrix, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise InvalidSample("positions contain non-finite entries")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        n = pos.shape[0]

        if self.log_unnorm_post is not None:
            lp = np.asarray(self.log_unnorm_post, dtype=float).ravel()
            if lp.shape[0] != n:
                raise InvalidInput("log_unnorm_post length does not match positions")
            if np.any(np.isnan(lp)) or np.any(lp == np.inf):
                raise InvalidSample("log_unnorm_post must be finite or -inf")
            lp.setflags(write=False)
            object.__setattr__(self, "log_unnorm_post", lp)

        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape[0] != n:
                raise InvalidInput("weights length does not match positions")
            if not np.all(np.isfinite(w)):
                raise InvalidWeight("weights contain non-finite entries")
            if np.any(w < 0):
                raise InvalidWeight("weights must be nonnegative")
            total = w.sum()
            if total <= 0:
                raise InvalidWeight("weights sum to zero")
            w = w / total
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

        if self.dim_names is not None:
            names = tuple(str(s) for s in self.dim_names)
            if len(names) != pos.shape[1]:
                raise InvalidInput("dim_names length does not match dimensionality")
            object.__setattr__(self, "dim_names", names)

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    def select_dims(self, indices):
        """Restrict to a subset of dimensions (sample-level marginalization)."""
        idx = list(indices)
        names = tuple(self.dim_names[i] for i in idx) if self.dim_names else None
        return SampleSet(self.positions[:, idx], self.log_unnorm_post, self.weights, names)

    def to_csv(self, path):
        """Write the spec interchange CSV: header x1..xD[,log_post][,weight]."""
        d = self.dim
        names = list(self.dim_names) if self.dim_names else [f"x{j + 1}" for j in range(d)]
        cols = [self.positions]
        if self.log_unnorm_post is not None:
            names.append("log_post")
            cols.append(self.log_unnorm_post.reshape(-1, 1))
        if self.weights is not None:
            names.append("weight")
            cols.append(self.weights.reshape(-1, 1))
        data = np.hstack(cols)
        np.savetxt(path, data, delimiter=",", header=",".join(names), comments="",
                   fmt="%.17g")

    @classmethod
    def from_csv(cls, path):
        """Read the interchange CSV written by :meth:`to_csv`."""
        raw = np.genfromtxt(path, delimiter=",", names=True)
        if raw.dtype.names is None:
            raise InvalidInput(f"{path}: expected a CSV with a header row")
        names = list(raw.dtype.names)
        raw = np.atleast_1d(raw)
        lp = raw["log_post"] if "log_post" in names else None
        w = raw["weight"] if "weight" in names else None
        dim_cols = [c for c in names if c not in ("log_post", "weight")]
        pos = np.column_stack([raw[c] for c in dim_cols])
        return cls(pos, lp, w, tuple(dim_cols))


def validate_sample_set(positions, log_unnorm_post=None, weights=None, dim_names=None):
    """Validate raw arrays and build a :class:`SampleSet`.

    Raises :class:`InvalidSample` for non-finite positions and
    :class:`InvalidWeight` for negative or all-zero weights.
    """
    return SampleSet(positions, log_unnorm_post, weights, dim_names)
