"""Functional approximations of posterior distributions from Monte Carlo samples.

Fit a normalized density model (kernel density estimate, Gaussian mixture,
truncated Gaussian mixture, vine copula, or Gaussian-process regression) to
posterior samples, then evaluate it, draw from it, use it as the prior of a
second inference, or read off the marginal likelihood.
"""

from .base import BaseDensity, TransformedDensity
from .bicop import BicopModel, fit_bicop, kendall_tau
from .exceptions import *  # noqa: F401,F403 - the exception vocabulary is public
from .gp import GaussianProcessDensity, gp_normalization, kernel_eval
from .inference import (EvidenceResult, MhResult, PosteriorSpec,
                        WeightedSampleSet, estimate_log_evidence,
                        importance_reweight, run_mh, sequential_posterior)
from .kde import KernelDensityEstimator, sheather_jones_bandwidth
from .marginals import (fit_ecdf_marginal, fit_gpd_shape, fit_marginal,
                        fit_mixture_marginal, fit_pareto_tail_marginal)
from .metrics import (check_normalization, cross_validate_known_target,
                      cross_validate_posterior, ks_statistic, rmse, spearman)
from .mixture import (GaussianMixtureDensity, TruncatedGaussianMixtureDensity,
                      fit_mixture_1d, mvn_box_probability)
from .models import (GaussianMixtureTarget, LotkaVolterraProblem, LvConfig,
                     LvParams, SignalingProblem, gm_target, lv_loglik,
                     lv_simulate, make_lv_synthetic, make_signaling_synthetic,
                     signaling_loglik, signaling_predict)
from .samples import SampleSet, validate_sample_set
from .serialize import load_model, model_from_dict, model_to_dict, save_model
from .transforms import (Bounds, Transform, build_transform, log_jacobian,
                         mirror_at_bounds, transform_forward, transform_inverse)
from .vine import VineCopulaDensity

__version__ = "0.1.0"
