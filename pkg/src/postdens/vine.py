"""Regular-vine copula density estimation.

The joint density factorizes into per-dimension marginals and a hierarchy
of bivariate pair copulas.  Tree structure is selected level by level as a
maximum spanning tree on absolute Kendall tau (Prim's algorithm with
lexicographic tie-breaks, so fits are deterministic), pair copulas are
fitted by AIC, and pseudo-observations for the next level are produced by
the h-functions.  Sampling inverts the factorization: variables are peeled
off the top of the vine to obtain a sampling order, and uniform draws are
pushed through the chain of inverse h-functions and marginal quantiles.
"""

from dataclasses import dataclass, field

import numpy as np

from .base import BaseDensity
from .bicop import FAMILIES, BicopModel, fit_bicop, kendall_tau
from .exceptions import InsufficientSamples, InvalidInput
from .marginals import fit_marginal
from .utils import as_matrix, check_rng

_PIT_EPS = 1e-12


@dataclass
class VineEdge:
    """One pair copula in the vine: conditioned pair, conditioning set, fit."""

    level: int
    var_a: int
    var_b: int
    cond: frozenset
    bicop: BicopModel
    node_ids: tuple  # indices of the two previous-level nodes this edge joins

    @property
    def total(self):
        return self.cond | {self.var_a, self.var_b}

    def to_dict(self):
        return {"level": self.level, "var_a": self.var_a, "var_b": self.var_b,
                "cond": sorted(self.cond), "node_ids": list(self.node_ids),
                "bicop": self.bicop.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["level"], d["var_a"], d["var_b"], frozenset(d["cond"]),
                   BicopModel.from_dict(d["bicop"]), tuple(d["node_ids"]))


def _max_spanning_tree(n_nodes, weight):
    """Prim's algorithm maximizing ``weight[(i, j)]``; -inf marks forbidden.

    Ties break toward the lexicographically smallest (i, j) pair so the
    structure is independent of iteration order.
    """
    in_tree = {0}
    edges = []
    while len(in_tree) < n_nodes:
        best = None
        for i in sorted(in_tree):
            for j in range(n_nodes):
                if j in in_tree:
                    continue
                w = weight.get((min(i, j), max(i, j)), -np.inf)
                if w == -np.inf:
                    continue
                key = (-w, min(i, j), max(i, j))
                if best is None or key < best[0]:
                    best = (key, i, j)
        if best is None:
            raise InvalidInput("vine structure graph is disconnected")
        _, i, j = best
        in_tree.add(j)
        edges.append((min(i, j), max(i, j)))
    return edges


class VineCopulaDensity(BaseDensity):
    """Regular-vine copula estimator.

    Parameters
    ----------
    marginal : {"ecdf_kd", "pareto_tail", "param_mixture"}, default "ecdf_kd"
        Marginal model used for every dimension.
    bounds : Bounds, optional
        Known support; finite entries are passed to the marginal fits.
    g_max : int, default 9
        Component cap for parametric-mixture marginals.
    families : tuple of str
        Candidate copula families (independence is always included).
    random_state : int or Generator, optional
        Seeds the mixture-marginal EM restarts.

    Attributes
    ----------
    marginals_ : list of fitted MarginalModel
    levels_ : list of list of VineEdge, one list per tree level
    """

    def __init__(self, marginal="ecdf_kd", bounds=None, g_max=9,
                 families=FAMILIES, random_state=None):
        self.marginal = marginal
        self.bounds = bounds
        self.g_max = g_max
        self.families = families
        self.random_state = random_state

    # -- fitting ---------------------------------------------------------------

    def fit(self, X, y=None):
        X = as_matrix(X)
        n, d = X.shape
        if d < 2:
            raise InvalidInput("vine copulas need at least two dimensions")
        if n < 30:
            raise InsufficientSamples("vine fit needs at least 30 samples")
        rng = check_rng(self.random_state)

        self.marginals_ = []
        U = np.empty_like(X)
        for j in range(d):
            bound = None
            if self.bounds is not None:
                lo, hi = self.bounds.lower[j], self.bounds.upper[j]
                if np.isfinite(lo) or np.isfinite(hi):
                    bound = (lo, hi)
            m = fit_marginal(X[:, j], self.marginal, bound=bound, g_max=self.g_max,
                             random_state=np.random.default_rng(rng.integers(2**63)))
            self.marginals_.append(m)
            U[:, j] = np.clip(m.cdf(X[:, j]), _PIT_EPS, 1.0 - _PIT_EPS)

        self.levels_ = []
        # level-1 nodes: the variables themselves
        node_vals = [{j: U[:, j]} for j in range(d)]
        node_totals = [frozenset([j]) for j in range(d)]
        node_conds = [frozenset() for _ in range(d)]
        node_ids_prev = [(j,) for j in range(d)]

        for level in range(1, d):
            n_nodes = len(node_vals)
            weight = {}
            pair_io = {}
            for i in range(n_nodes):
                for j in range(i + 1, n_nodes):
                    if level > 1 and not set(node_ids_prev[i]) & set(node_ids_prev[j]):
                        continue  # proximity condition
                    cond = node_totals[i] & node_totals[j]
                    rest_i = node_totals[i] - cond
                    rest_j = node_totals[j] - cond
                    if len(rest_i) != 1 or len(rest_j) != 1:
                        continue
                    x, y = next(iter(rest_i)), next(iter(rest_j))
                    ui, uj = node_vals[i][x], node_vals[j][y]
                    weight[(i, j)] = abs(kendall_tau(ui, uj))
                    pair_io[(i, j)] = (x, y, ui, uj, cond)
            mst = _max_spanning_tree(n_nodes, weight)

            new_edges = []
            new_vals, new_totals, new_conds, new_ids = [], [], [], []
            for (i, j) in mst:
                x, y, ui, uj, cond = pair_io[(i, j)]
                bic = fit_bicop(ui, uj, families=self.families)
                edge = VineEdge(level, x, y, cond, bic, (i, j))
                new_edges.append(edge)
                new_vals.append({x: bic.hfunc2(ui, uj), y: bic.hfunc1(ui, uj)})
                new_totals.append(node_totals[i] | node_totals[j])
                new_conds.append(cond)
                new_ids.append((i, j))
            if len(new_edges) != d - level:
                raise InvalidInput("vine level has an unexpected edge count")
            self.levels_.append(new_edges)
            node_vals, node_totals, node_conds = new_vals, new_totals, new_conds
            node_ids_prev = new_ids

        self._build_lookup()
        return self

    def _build_lookup(self):
        """Map (var, conditioning set) -> (edge, side) for the h-cascade."""
        self._provides = {}
        for edges in self.levels_:
            for e in edges:
                self._provides[(e.var_a, e.cond | {e.var_b})] = (e, "a")
                self._provides[(e.var_b, e.cond | {e.var_a})] = (e, "b")

    # -- conditional resolution -------------------------------------------------

    def _conditional(self, var, cond, cache):
        key = (var, cond)
        if key in cache:
            return cache[key]
        if key not in self._provides:
            raise InvalidInput(f"vine cannot express conditional {var}|{sorted(cond)}")
        e, side = self._provides[key]
        va = self._conditional(e.var_a, e.cond, cache)
        vb = self._conditional(e.var_b, e.cond, cache)
        out = e.bicop.hfunc2(va, vb) if side == "a" else e.bicop.hfunc1(va, vb)
        cache[key] = out
        return out

    # -- evaluation ---------------------------------------------------------------

    def score_samples(self, X):
        self._check_fitted("levels_")
        X = as_matrix(X)
        n, d = X.shape
        logf = np.zeros(n)
        cache = {}
        for j, m in enumerate(self.marginals_):
            fj = m.pdf(X[:, j])
            with np.errstate(divide="ignore"):
                logf += np.where(fj > 0, np.log(np.maximum(fj, 1e-300)), -np.inf)
            cache[(j, frozenset())] = np.clip(m.cdf(X[:, j]), _PIT_EPS, 1.0 - _PIT_EPS)
        for edges in self.levels_:
            for e in edges:
                va = self._conditional(e.var_a, e.cond, cache)
                vb = self._conditional(e.var_b, e.cond, cache)
                logf += e.bicop.logpdf(va, vb)
        return logf

    # -- sampling -------------------------------------------------------------------

    def _sampling_plan(self):
        """Peel conditioned variables off the top tree to get a sampling order.

        Returns ``(order, chains)``: the k-th variable of ``order`` is sampled
        by inverting its chain of edges (levels 1..k) bottom-up.
        """
        d = len(self.marginals_) if hasattr(self, "marginals_") else None
        working = {lvl + 1: list(edges) for lvl, edges in enumerate(self.levels_)}
        nvars = len(self.levels_[0]) + 1
        order = []
        chains = {}
        for top in range(nvars - 1, 0, -1):
            top_edges = working[top]
            if len(top_edges) != 1:
                raise InvalidInput("vine peeling found a malformed level")
            e_top = top_edges[0]
            v = max(e_top.var_a, e_top.var_b)
            chain = [e_top]
            current = e_top
            for lvl in range(top - 1, 0, -1):
                parent = None
                for f in working[lvl]:
                    if v in (f.var_a, f.var_b) and f.total <= current.total:
                        parent = f
                        break
                if parent is None:
                    raise InvalidInput("vine peeling lost the conditional chain")
                chain.append(parent)
                current = parent
            chains[v] = chain[::-1]  # level 1 first
            for f in chain:
                working[f.level].remove(f)
            order.append(v)
        last = ({e.var_a for e in self.levels_[0]} | {e.var_b for e in self.levels_[0]}) \
            - set(order)
        order.append(next(iter(last)))
        return order[::-1], chains

    def sample(self, n_samples=1, random_state=None):
        self._check_fitted("levels_")
        rng = check_rng(random_state)
        d = len(self.marginals_)
        if n_samples == 0:
            return np.empty((0, d))
        order, chains = self._sampling_plan()
        W = rng.uniform(size=(n_samples, d))
        cache = {}
        cache[(order[0], frozenset())] = np.clip(W[:, 0], _PIT_EPS, 1.0 - _PIT_EPS)
        for k in range(1, d):
            v = order[k]
            z = np.clip(W[:, k], _PIT_EPS, 1.0 - _PIT_EPS)
            for e in reversed(chains[v]):
                partner = e.var_b if e.var_a == v else e.var_a
                pv = self._conditional(partner, e.cond, cache)
                z = e.bicop.hinv2(z, pv) if e.var_a == v else e.bicop.hinv1(pv, z)
            cache[(v, frozenset())] = z
        U = np.column_stack([cache[(j, frozenset())] for j in range(d)])
        X = np.column_stack([self.marginals_[j].quantile(U[:, j]) for j in range(d)])
        return X

    # -- access helpers -----------------------------------------------------------

    @property
    def pair_copulas_(self):
        """Flat list of fitted pair copulas, level by level."""
        return [e.bicop for edges in self.levels_ for e in edges]
