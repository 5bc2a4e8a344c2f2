"""Model persistence: a versioned JSON envelope for every estimator kind.

Layout: ``{"schema_version", "method", "bounds", "transform", "payload"}``.
Numeric arrays are stored as decimal strings with 17 significant digits so
float64 values survive a save/load round trip bit-exactly.
"""

import json
import os

import numpy as np

from .base import TransformedDensity
from .bicop import BicopModel
from .exceptions import InvalidInput
from .gp import GaussianProcessDensity
from .kde import KernelDensityEstimator
from .marginals import EcdfKdMarginal, MixtureMarginal, ParetoTailMarginal
from .mixture import (GaussianMixtureDensity, TruncatedGaussianMixtureDensity,
                      UnivariateMixture, _chol)
from .transforms import Bounds, Transform
from .vine import VineCopulaDensity, VineEdge

SCHEMA_VERSION = 1

METHODS = ("kde", "gmm", "tgmm", "vine-ecdf", "vine-pareto", "vine-mixture",
           "gp-se", "gp-matern32")

_VINE_MARGINAL = {"vine-ecdf": "ecdf_kd", "vine-pareto": "pareto_tail",
                  "vine-mixture": "param_mixture"}


def _enc(arr):
    arr = np.asarray(arr, dtype=float)
    return {"shape": list(arr.shape), "data": ["%.17g" % v for v in arr.ravel()]}


def _dec(obj):
    return np.array([float(s) for s in obj["data"]], dtype=float).reshape(obj["shape"])


def _enc_bounds(b):
    return None if b is None else {"lower": _enc(b.lower), "upper": _enc(b.upper)}


def _dec_bounds(obj):
    return None if obj is None else Bounds(_dec(obj["lower"]), _dec(obj["upper"]))


# ---------------------------------------------------------------------------
# marginal payloads
# ---------------------------------------------------------------------------

def _enc_marginal(m):
    if isinstance(m, EcdfKdMarginal):
        return {"kind": m.kind, "samples": _enc(m.samples), "sigma": m.sigma,
                "lower": m.lower, "upper": m.upper}
    if isinstance(m, ParetoTailMarginal):
        return {"kind": m.kind, "body": _enc_marginal(m.body), "q": m.q,
                "lower_tail": m.lower_tail, "upper_tail": m.upper_tail}
    if isinstance(m, MixtureMarginal):
        mix = m.mixture
        return {"kind": m.kind, "mix_kind": mix.kind, "props": _enc(mix.props),
                "params": _enc(mix.params), "shift": mix.shift, "scale": mix.scale,
                "reflect": mix.reflect, "bic": mix.bic,
                "lower": m.lower, "upper": m.upper}
    raise InvalidInput(f"cannot serialize marginal {type(m).__name__}")


def _dec_marginal(obj):
    kind = obj["kind"]
    if kind == "ecdf_kd":
        return EcdfKdMarginal(_dec(obj["samples"]), obj["sigma"], obj["lower"],
                              obj["upper"])
    if kind == "pareto_tail":
        return ParetoTailMarginal(_dec_marginal(obj["body"]), obj["q"],
                                  obj["lower_tail"], obj["upper_tail"])
    if kind == "param_mixture":
        mix = UnivariateMixture(obj["mix_kind"], _dec(obj["props"]),
                                _dec(obj["params"]), obj["shift"], obj["scale"],
                                obj["reflect"], obj["bic"])
        return MixtureMarginal(mix, obj["lower"], obj["upper"])
    raise InvalidInput(f"unknown marginal kind {kind!r}")


# ---------------------------------------------------------------------------
# per-estimator payloads
# ---------------------------------------------------------------------------

def _payload(model):
    if isinstance(model, KernelDensityEstimator):
        return "kde", {"train": _enc(model.train_), "covariance": _enc(model.covariance_)}
    if isinstance(model, TruncatedGaussianMixtureDensity):
        return "tgmm", {"weights": _enc(model.weights_), "means": _enc(model.means_),
                        "covariances": _enc(model.covariances_),
                        "box_masses": _enc(model.box_masses_), "bic": model.bic_}
    if isinstance(model, GaussianMixtureDensity):
        return "gmm", {"weights": _enc(model.weights_), "means": _enc(model.means_),
                       "covariances": _enc(model.covariances_), "bic": model.bic_}
    if isinstance(model, VineCopulaDensity):
        method = {v: k for k, v in _VINE_MARGINAL.items()}[model.marginal]
        return method, {
            "marginals": [_enc_marginal(m) for m in model.marginals_],
            "levels": [[e.to_dict() for e in lvl] for lvl in model.levels_]}
    if isinstance(model, GaussianProcessDensity):
        return f"gp-{model.kernel}", {
            "train": _enc(model.train_), "alpha": _enc(model.alpha_),
            "length_scale": model.length_scale_, "jitter": model.jitter_,
            "normalization": model.normalization_}
    raise InvalidInput(f"cannot serialize model {type(model).__name__}")


def _restore(method, payload, bounds):
    if method == "kde":
        m = KernelDensityEstimator(bandwidth=_dec(payload["covariance"]))
        m.fit(_dec(payload["train"]))
        return m
    if method == "gmm":
        m = GaussianMixtureDensity()
        m.weights_ = _dec(payload["weights"])
        m.means_ = _dec(payload["means"])
        m.covariances_ = _dec(payload["covariances"])
        m.cholesky_ = np.array([_chol(c) for c in m.covariances_])
        m.n_components_ = m.weights_.shape[0]
        m.bic_ = payload["bic"]
        m.loglik_path_ = []
        return m
    if method == "tgmm":
        if bounds is None:
            raise InvalidInput("truncated mixture requires bounds in the envelope")
        m = TruncatedGaussianMixtureDensity(bounds)
        m._adopt(_dec(payload["weights"]), _dec(payload["means"]),
                 _dec(payload["covariances"]), _dec(payload["box_masses"]),
                 payload["bic"], [])
        return m
    if method in _VINE_MARGINAL:
        m = VineCopulaDensity(marginal=_VINE_MARGINAL[method], bounds=bounds)
        m.marginals_ = [_dec_marginal(o) for o in payload["marginals"]]
        m.levels_ = [[VineEdge.from_dict(o) for o in lvl] for lvl in payload["levels"]]
        m._build_lookup()
        return m
    if method in ("gp-se", "gp-matern32"):
        m = GaussianProcessDensity(kernel=method.split("-", 1)[1])
        m.train_ = _dec(payload["train"])
        m.alpha_ = _dec(payload["alpha"])
        m.length_scale_ = payload["length_scale"]
        m.jitter_ = payload["jitter"]
        m.normalization_ = payload["normalization"]
        m.clip_count_ = 0
        return m
    raise InvalidInput(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def model_to_dict(model):
    transform = None
    bounds = None
    inner = model
    if isinstance(model, TransformedDensity):
        bounds = model.bounds
        t = model.transform_
        transform = {"kinds": list(t.kinds), "lower": _enc(t.lower),
                     "upper": _enc(t.upper)}
        inner = model.estimator_
    elif isinstance(model, TruncatedGaussianMixtureDensity):
        bounds = model.bounds
    elif isinstance(model, VineCopulaDensity) and model.bounds is not None:
        bounds = model.bounds
    method, payload = _payload(inner)
    return {"schema_version": SCHEMA_VERSION, "method": method,
            "bounds": _enc_bounds(bounds), "transform": transform,
            "payload": payload}


def model_from_dict(doc):
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InvalidInput(f"unsupported schema version {doc.get('schema_version')!r}")
    bounds = _dec_bounds(doc.get("bounds"))
    inner = _restore(doc["method"], doc["payload"], bounds)
    if doc.get("transform") is not None:
        t = doc["transform"]
        wrapper = TransformedDensity(inner, bounds)
        wrapper.transform_ = Transform(tuple(t["kinds"]), _dec(t["lower"]),
                                       _dec(t["upper"]))
        wrapper.estimator_ = inner
        return wrapper
    return inner


def save_model(model, path):
    """Atomically write the JSON envelope."""
    doc = model_to_dict(model)
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_dict(doc)
