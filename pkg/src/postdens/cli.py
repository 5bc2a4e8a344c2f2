"""Command-line interface.

Subcommands: ``fit`` (all approximation methods), ``pdf``, ``sample``,
``cv`` (repeated random-subsampling validation), ``seqinf`` (sequential
inference with a fitted model as prior), ``reweight``, ``evidence``, and
``experiment`` (the named synthetic suites).  The default seed comes from
the ``MVD_SEED`` environment variable; a ``key=value`` config file can
preload any option and explicit flags win.  Exit codes: 0 success, 1
runtime failure (message on stderr), 2 usage error.
"""

import json
import os
import sys

import click
import numpy as np

from .base import TransformedDensity
from .exceptions import PostdensError
from .gp import GaussianProcessDensity
from .inference import (PosteriorSpec, estimate_log_evidence,
                        importance_reweight, run_mh, sequential_posterior)
from .kde import KernelDensityEstimator
from .metrics import cross_validate_known_target, cross_validate_posterior
from .mixture import GaussianMixtureDensity, TruncatedGaussianMixtureDensity
from .models import (LotkaVolterraProblem, SignalingProblem, gm_target,
                     read_lv_dataset)
from .samples import SampleSet
from .serialize import METHODS, load_model, save_model
from .transforms import Bounds
from .vine import VineCopulaDensity


def _parse_config(path):
    """Minimal key=value config reader ('#' starts a comment)."""
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.UsageError(f"config line without '=': {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = val.strip("\"'")
    return values


class _Group(click.Group):
    def invoke(self, ctx):
        cfg = ctx.params.get("config")
        if cfg:
            values = _parse_config(cfg)
            ctx.default_map = {cmd.name: dict(values) for cmd in self.commands.values()}
        try:
            return super().invoke(ctx)
        except PostdensError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_Group)
@click.option("--config", type=click.Path(exists=True), default=None,
              help="key=value file providing option defaults (flags win)")
@click.option("--threads", type=int, default=None,
              help="cap internal parallelism (default: available cores)")
def main(config, threads):
    """Density approximations of posterior samples and sequential inference."""
    if threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def _seed_option(fn):
    return click.option("--seed", type=int, default=0, envvar="MVD_SEED",
                        show_default=True, help="RNG seed (env: MVD_SEED)")(fn)


def _parse_bounds(lower, upper, dim):
    if lower is None and upper is None:
        return None
    lo = np.full(dim, -np.inf) if lower is None else \
        np.array([float(s) for s in lower.split(",")])
    hi = np.full(dim, np.inf) if upper is None else \
        np.array([float(s) for s in upper.split(",")])
    return Bounds(lo, hi)


def _build_estimator(method, bounds, transform, g_max, seed):
    rng = np.random.default_rng(seed)
    if method == "kde":
        est = KernelDensityEstimator()
    elif method == "gmm":
        est = GaussianMixtureDensity(max_components=g_max, random_state=rng)
    elif method == "tgmm":
        if bounds is None:
            raise click.UsageError("tgmm requires --lower/--upper bounds")
        return TruncatedGaussianMixtureDensity(bounds, max_components=g_max,
                                               random_state=rng)
    elif method.startswith("vine-"):
        marg = {"vine-ecdf": "ecdf_kd", "vine-pareto": "pareto_tail",
                "vine-mixture": "param_mixture"}[method]
        return VineCopulaDensity(marginal=marg, bounds=bounds, g_max=g_max,
                                 random_state=rng)
    elif method.startswith("gp-"):
        est = GaussianProcessDensity(kernel=method.split("-", 1)[1], random_state=rng)
    else:
        raise click.UsageError(f"unknown method {method!r}")
    if bounds is not None and transform == "auto":
        return TransformedDensity(est, bounds)
    return est


@main.command()
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--input", "input_", type=click.Path(exists=True), required=True,
              help="sample CSV (x1..xD[,log_post][,weight])")
@click.option("--output", type=click.Path(), required=True, help="model JSON")
@click.option("--lower", default=None, help="comma-separated lower bounds")
@click.option("--upper", default=None, help="comma-separated upper bounds")
@click.option("--transform", type=click.Choice(["auto", "none"]), default="auto",
              show_default=True,
              help="wrap unbounded methods in a bound-removing transform")
@click.option("--g-max", type=int, default=9, show_default=True)
@_seed_option
def fit(method, input_, output, lower, upper, transform, g_max, seed):
    """Fit an approximation to a sample CSV and write the model JSON."""
    samples = SampleSet.from_csv(input_)
    bounds = _parse_bounds(lower, upper, samples.dim)
    est = _build_estimator(method, bounds, transform, g_max, seed)
    if method.startswith("gp-"):
        if samples.log_unnorm_post is None:
            raise click.UsageError("GP regression needs a log_post column")
        est.fit(samples.positions, samples.log_unnorm_post)
    else:
        est.fit(samples.positions)
    save_model(est, output)
    click.echo(f"saved {method} model to {output}")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--points", type=click.Path(exists=True), required=True)
@click.option("--output", type=click.Path(), required=True)
def pdf(model_path, points, output):
    """Append a density column to a CSV of points."""
    model = load_model(model_path)
    pts = SampleSet.from_csv(points)
    dens = model.pdf(pts.positions)
    names = list(pts.dim_names) + ["density"]
    data = np.column_stack([pts.positions, dens])
    tmp = output + ".tmp"
    np.savetxt(tmp, data, delimiter=",", header=",".join(names), comments="",
               fmt="%.17g")
    os.replace(tmp, output)


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("-n", "--n-samples", type=int, required=True)
@click.option("--output", type=click.Path(), required=True)
@_seed_option
def sample(model_path, n_samples, output, seed):
    """Draw new samples from a fitted model."""
    model = load_model(model_path)
    draws = model.sample(n_samples, random_state=np.random.default_rng(seed))
    SampleSet(draws).to_csv(output)


@main.command()
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--input", "input_", type=click.Path(exists=True), default=None,
              help="posterior sample CSV with log_post (posterior mode)")
@click.option("--target", type=click.Choice(["gm-unimodal", "gm-separated"]),
              default=None, help="known-density mode instead of --input")
@click.option("--dim", type=int, default=2, show_default=True,
              help="dimensionality for known-density mode")
@click.option("--train-size", type=int, required=True)
@click.option("--test-size", type=int, default=500, show_default=True)
@click.option("--repeats", type=int, default=100, show_default=True)
@click.option("--g-max", type=int, default=9, show_default=True)
@click.option("--output", type=click.Path(), required=True, help="metric CSV")
@_seed_option
def cv(method, input_, target, dim, train_size, test_size, repeats, g_max, seed):
    """Repeated random-subsampling reconstruction validation."""
    est = _build_estimator(method, None, "none", g_max, seed)
    rng = np.random.default_rng(seed)
    if (input_ is None) == (target is None):
        raise click.UsageError("pass exactly one of --input or --target")
    if target is not None:
        tgt = gm_target(dim, separated=target == "gm-separated",
                        random_state=np.random.default_rng(rng.integers(2**63)))
        res = cross_validate_known_target(tgt, est, train_size, n_repeats=repeats,
                                          test_size=test_size, random_state=rng)
    else:
        samples = SampleSet.from_csv(input_)
        res = cross_validate_posterior(samples, est, train_size, n_repeats=repeats,
                                       test_size=test_size, random_state=rng)
    output = click.get_current_context().params["output"]
    tmp = output + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("method,train_size,repeat,spearman,rmse\n")
        for i, sp, rm in res.rows():
            fh.write(f"{method},{train_size},{i},{sp:.6f},{rm:.6g}\n")
    os.replace(tmp, output)
    click.echo(f"median spearman {res.median_spearman:.4f} "
               f"median rmse {res.median_rmse:.6g}")


def _stage_problem(model_name, data_path, stage, natural_scale=False):
    if model_name == "lv":
        # the CLI drives one stage at a time: the given dataset fills both
        # slots and the stage selector picks the matching evaluator
        data = read_lv_dataset(data_path)
        prob = LotkaVolterraProblem(data, data, log_scale=not natural_scale)
        if stage in ("a", "lynx"):
            return prob.loglik_stage_a, prob.stage_bounds(7), prob, 7
        if stage in ("b", "hare"):
            return prob.loglik_stage_b, prob.stage_bounds(7), prob, 7
        raise click.UsageError("lv stages: a|lynx or b|hare")
    if model_name == "signaling":
        rows = np.genfromtxt(data_path, delimiter=",", skip_header=1)
        prob = SignalingProblem(rows)
        if stage == "pre":
            return prob.subset(w=0.0), prob.bounds(), prob, 10
        if stage == "on":
            return prob.subset(w=1.0), prob.bounds(), prob, 10
        if stage in ("p", "q"):
            return prob.subset(observable=stage), prob.bounds(), prob, 10
        return prob.loglik, prob.bounds(), prob, 10
    raise click.UsageError("model must be lv or signaling")


@main.command()
@click.option("--prior-model", type=click.Path(exists=True), required=True,
              help="fitted model JSON used as the prior")
@click.option("--model", "model_name", type=click.Choice(["lv", "signaling"]),
              required=True)
@click.option("--stage", required=True,
              help="lv: a|b; signaling: pre|on|p|q|all")
@click.option("--data", type=click.Path(exists=True), required=True,
              help="dataset file for the stage likelihood")
@click.option("--prior-dims", default=None,
              help="columns covered by the prior model, e.g. 0:5 (rest use the "
                   "built-in prior)")
@click.option("-n", "--n-samples", type=int, default=5000, show_default=True)
@click.option("--burn-in", type=int, default=10000, show_default=True)
@click.option("--thin", type=int, default=5, show_default=True)
@click.option("--output", type=click.Path(), required=True)
@click.option("--natural-scale", is_flag=True, default=False,
              help="lv only: infer on natural scale with the box prior")
@_seed_option
def seqinf(prior_model, model_name, stage, data, prior_dims, n_samples, burn_in,
           thin, output, natural_scale, seed):
    """Second-stage inference with a fitted approximation as prior."""
    prior = load_model(prior_model)
    loglik, bounds, prob, dim = _stage_problem(model_name, data, stage, natural_scale)
    rng = np.random.default_rng(seed)
    kwargs = {}
    if prior_dims is not None:
        lo, hi = (int(s) for s in prior_dims.split(":"))
        covered = np.arange(lo, hi)
        rest = np.setdiff1d(np.arange(dim), covered)
        if model_name == "lv":
            def extra_lp(t2, prob=prob, rest=rest):
                return _lv_rest_prior(prob, rest, t2)
        else:
            lw, up = prob.lower[rest], prob.upper[rest]

            def extra_lp(t2, lw=lw, up=up):
                inside = np.all((t2 >= lw) & (t2 <= up))
                return float(-np.sum(np.log(up - lw))) if inside else -np.inf
        kwargs = {"prior_dims": covered, "extra_log_prior": extra_lp,
                  "extra_sample_prior": lambda r: _rest_draw(prob, rest, r,
                                                             model_name)}
    init = _stage_center(prob, bounds, model_name, dim)
    res = sequential_posterior(prior, loglik, bounds, n_samples, burn_in,
                               random_state=rng, thin=thin, init=init, **kwargs)
    res.samples.to_csv(output)
    click.echo(f"acceptance rate {res.acceptance_rate:.3f}")


def _lv_rest_prior(prob, rest, t2):
    sd = prob.cfg.prior_log_sd
    center = np.log(prob._prior_center(7))[rest] if prob.log_scale else None
    if prob.log_scale:
        z = (t2 - center) / sd
        return float(-0.5 * np.sum(z**2) - len(rest) * np.log(sd * np.sqrt(2 * np.pi)))
    b = prob.stage_bounds(7)
    inside = np.all((t2 >= b.lower[rest]) & (t2 <= b.upper[rest]))
    return float(-np.sum(np.log(b.upper[rest] - b.lower[rest]))) if inside else -np.inf


def _rest_draw(prob, rest, rng, model_name):
    if model_name == "lv":
        return prob.sample_prior(rng, 7)[rest]
    return rng.uniform(prob.lower[rest], prob.upper[rest])


def _stage_center(prob, bounds, model_name, dim):
    if model_name == "lv" and prob.log_scale:
        return np.log(prob._prior_center(dim))
    lo = np.where(np.isfinite(bounds.lower), bounds.lower, -1.0)
    hi = np.where(np.isfinite(bounds.upper), bounds.upper, 1.0)
    return 0.5 * (lo + hi)


@main.command()
@click.option("--input", "input_", type=click.Path(exists=True), required=True,
              help="stage-one sample CSV")
@click.option("--model", "model_name", type=click.Choice(["lv", "signaling"]),
              required=True)
@click.option("--stage", required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--output", type=click.Path(), required=True)
def reweight(input_, model_name, stage, data, output):
    """Importance-reweight stage-one samples by a second-stage likelihood."""
    samples = SampleSet.from_csv(input_)
    loglik, bounds, prob, dim = _stage_problem(model_name, data, stage)
    res = importance_reweight(samples, loglik)
    res.samples.to_csv(output)
    click.echo(f"effective sample size {res.ess:.2f} of {samples.n}")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--input", "input_", type=click.Path(exists=True), required=True,
              help="sample CSV with a log_post column")
def evidence(model_path, input_):
    """Log marginal likelihood from the approximation (regression intercept)."""
    model = load_model(model_path)
    samples = SampleSet.from_csv(input_)
    if samples.log_unnorm_post is None:
        raise click.UsageError("evidence estimation needs a log_post column")
    res = estimate_log_evidence(model, samples)
    click.echo(json.dumps({
        "log_evidence": res.log_evidence, "slope": res.slope,
        "stderr": res.stderr, "log_evidence_fixed_slope": res.log_evidence_fixed_slope,
        "slope_warning": res.slope_warning, "n_excluded": res.n_excluded}))


@main.command()
@click.argument("name", type=click.Choice(["gm-recovery", "lv-sequential",
                                           "lv-bounded", "signaling-split",
                                           "complexity-bench"]))
@click.option("--outdir", type=click.Path(), default="experiments",
              show_default=True)
@_seed_option
def experiment(name, outdir, seed):
    """Run a named synthetic experiment suite and write its metric tables."""
    from .experiments import run_suite
    summary = run_suite(name, seed=seed, outdir=outdir)

    def jsonable(v):
        if isinstance(v, np.ndarray):
            return [float(x) for x in v]
        if isinstance(v, dict):
            return {k: jsonable(x) for k, x in v.items()}
        if isinstance(v, (np.floating, np.integer)):
            return float(v)
        return v
    click.echo(json.dumps({k: jsonable(v) for k, v in summary.items()}, indent=1))


if __name__ == "__main__":
    main()
