"""Command-line interface: fits, model selection, and replicated experiments.

Exit codes
----------
0   success
2   usage, data-format, or config-file error
3   capability mismatch (estimator/model/domain/noise/criterion combinations)
4   optimizer or numerical failure
5   experiment finished with failed replicates (partial results written)

Configuration files hold ``key = value`` lines with ``#`` comments; explicit
flags override file values.  Recognized keys: optim.grad_tol, optim.max_iter,
nce.M, nce.noise, nce.seed, sm.domain, sm.method, baseline.enabled.
Diagnostics go to stderr; stdout carries only the result (when --out is not
given) so pipelines stay clean.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .baselines import aic, fit_ggm_mle, fit_gmm_em_1d
from .data import Domain, read_csv
from .exceptions import (
    CapabilityError,
    DataFormatError,
    DomainError,
    NnicError,
    NoiseDensityZero,
    OptimizationFailure,
)
from .models import (
    GGM,
    BivariateVonMises,
    GaussianMixture1D,
    GraphSpec,
    LogGGM,
    NNGaussian1D,
    TruncatedGGM,
)
from .nce import fit_nce, ncic1, ncic2, nce_loocv
from .noise import NOISE_KINDS, make_noise
from .simlab.experiments import (
    DEFAULT_BVM_THETA,
    ExperimentConfig,
    run_experiment,
)
from .simlab.reports import result_to_dict, write_csv, write_json
from .simlab.rng import replicate_rng
from .simlab.samplers import (
    chain3_precision,
    sample_bivariate_von_mises,
    sample_contaminated_gaussian,
    sample_gmm_1d,
    sample_mvn_from_precision,
    sample_truncated_mvn,
)
from .sm import fit_sm_closed_form, fit_sm_generic, sm_loocv, smic

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPABILITY = 3
EXIT_NUMERIC = 4
EXIT_INCOMPLETE = 5

MODEL_IDS = ("nn-gaussian-1d", "ggm", "tggm", "log-ggm", "bvm", "nn-gmm")
CRITERIA = ("ncic1", "ncic2", "smic", "nce-cv", "sm-cv", "aic")
SCHEMA_VERSION = 1

_CONFIG_KEYS = {
    "optim.grad_tol",
    "optim.max_iter",
    "nce.M",
    "nce.noise",
    "nce.seed",
    "sm.domain",
    "sm.method",
    "baseline.enabled",
}


class CliUsageError(Exception):
    """Bad flags, unreadable data, or a malformed config file (exit 2)."""


class CliCapabilityError(Exception):
    """A requested combination the toolbox cannot serve (exit 3)."""


# ----------------------------------------------------------------------
# Configuration files
# ----------------------------------------------------------------------


def read_config_file(path):
    """Parse ``key = value`` lines; '#' starts a comment; unknown keys fail."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise CliUsageError(f"config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliUsageError(f"config file {path}, line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise CliUsageError(
                f"config file {path}, line {lineno}: unknown key {key!r}"
            )
        values[key] = value
    return values


def _cast(config, key, cast, what):
    try:
        return cast(config[key])
    except ValueError as exc:
        raise CliUsageError(f"config key {key}: expected {what}") from exc


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(lowered)


class Settings:
    """Flag/config/default resolution for one invocation."""

    def __init__(self, args):
        config = read_config_file(args.config) if getattr(args, "config", None) else {}
        self.grad_tol = (
            args.grad_tol
            if getattr(args, "grad_tol", None) is not None
            else _cast(config, "optim.grad_tol", float, "a float")
            if "optim.grad_tol" in config
            else 1e-7
        )
        self.max_iter = (
            args.max_iter
            if getattr(args, "max_iter", None) is not None
            else _cast(config, "optim.max_iter", int, "an integer")
            if "optim.max_iter" in config
            else 2000
        )
        self.n_noise = (
            args.M
            if getattr(args, "M", None) is not None
            else _cast(config, "nce.M", int, "an integer")
            if "nce.M" in config
            else None
        )
        self.noise_kind = (
            args.noise
            if getattr(args, "noise", None) is not None
            else config.get("nce.noise")
        )
        if self.noise_kind is not None and self.noise_kind not in NOISE_KINDS:
            raise CliUsageError(
                f"unknown noise kind {self.noise_kind!r} (options: {', '.join(NOISE_KINDS)})"
            )
        self.seed = (
            args.seed
            if getattr(args, "seed", None) is not None
            else _cast(config, "nce.seed", int, "an integer")
            if "nce.seed" in config
            else None
        )
        self.sm_domain = config.get("sm.domain")
        if self.sm_domain is not None and self.sm_domain not in ("reals", "nonneg"):
            raise CliUsageError("config key sm.domain: expected reals or nonneg")
        self.sm_method = config.get("sm.method", "closed")
        if self.sm_method not in ("closed", "cg"):
            raise CliUsageError("config key sm.method: expected closed or cg")
        self.baseline_enabled = (
            _cast(config, "baseline.enabled", _parse_bool, "true or false")
            if "baseline.enabled" in config
            else True
        )


# ----------------------------------------------------------------------
# Data ingestion
# ----------------------------------------------------------------------

_SYNTHETIC_NAMES = ("contaminated", "ggm", "tggm", "gmm", "bvm")


def _parse_synthetic_spec(spec):
    body = spec[len("synthetic:") :]
    parts = [p for p in body.split(",") if p]
    if not parts:
        raise CliUsageError("empty synthetic data spec")
    name, options = parts[0], {}
    if name not in _SYNTHETIC_NAMES:
        raise CliUsageError(
            f"unknown synthetic family {name!r} (options: {', '.join(_SYNTHETIC_NAMES)})"
        )
    for token in parts[1:]:
        if "=" not in token:
            raise CliUsageError(f"synthetic spec option {token!r}: expected key=value")
        key, value = token.split("=", 1)
        try:
            options[key] = float(value)
        except ValueError as exc:
            raise CliUsageError(f"synthetic spec option {token!r}: not a number") from exc
    return name, options


def load_data(data_spec, seed):
    """A sample matrix from a CSV path or a ``synthetic:<family>,...`` string."""
    if not data_spec.startswith("synthetic:"):
        try:
            return read_csv(data_spec)
        except OSError as exc:
            raise CliUsageError(f"data file {data_spec}: {exc}") from exc
    if seed is None:
        raise CliCapabilityError("synthetic data requires --seed (all randomness is seeded)")
    name, options = _parse_synthetic_spec(data_spec)
    n = int(options.get("N", options.get("n", 0)))
    if n < 1:
        raise CliUsageError(f"synthetic spec {name!r}: provide N=<count>")
    rng = replicate_rng(seed, 0, 0)
    if name == "contaminated":
        return sample_contaminated_gaussian(n, float(options.get("eps", 0.0)), rng)
    if name == "ggm":
        return sample_mvn_from_precision(
            chain3_precision(float(options.get("sigma12", 0.5))), n, rng
        )
    if name == "tggm":
        return sample_truncated_mvn(
            chain3_precision(float(options.get("sigma12", 0.5))), n, rng
        )
    if name == "gmm":
        return sample_gmm_1d((0.5, 0.5), (0.0, 3.0), (1.0, 1.0), n, rng)
    return sample_bivariate_von_mises(DEFAULT_BVM_THETA, n, rng)


# ----------------------------------------------------------------------
# Model construction
# ----------------------------------------------------------------------


def _parse_graph(text, d):
    if text is None or text == "full":
        return GraphSpec.full(d)
    if text == "empty":
        return GraphSpec.empty(d)
    try:
        return GraphSpec.from_string(text, d)
    except ValueError as exc:
        raise CliUsageError(f"graph {text!r}: {exc}") from exc


def build_model(args, data):
    name = args.model
    d = data.shape[1]
    if name == "nn-gaussian-1d":
        if d != 1:
            raise CliCapabilityError(f"model {name} expects 1 column, data has {d}")
        return NNGaussian1D()
    if name in ("ggm", "tggm", "log-ggm"):
        graph = _parse_graph(getattr(args, "graph", None), d)
        family = {"ggm": GGM, "tggm": TruncatedGGM, "log-ggm": LogGGM}[name]
        return family(graph)
    if name == "bvm":
        if d != 2:
            raise CliCapabilityError(f"model {name} expects 2 columns, data has {d}")
        return BivariateVonMises(dependent=True)
    if name == "nn-gmm":
        if d != 1:
            raise CliCapabilityError(f"model {name} expects 1 column, data has {d}")
        k = getattr(args, "K", None)
        if k is None:
            raise CliUsageError("model nn-gmm requires --K <components>")
        return GaussianMixture1D(int(k))
    raise CliUsageError(f"unknown model {name!r} (options: {', '.join(MODEL_IDS)})")


def _check_sm_domain(model, settings):
    if settings.sm_domain is None:
        return
    wants_plain = settings.sm_domain == "reals"
    model_plain = model.domain is Domain.REALS
    if wants_plain != model_plain:
        raise CliCapabilityError(
            f"sm.domain={settings.sm_domain} conflicts with model "
            f"{model.name} on domain {model.domain.name.lower()}"
        )


def _make_noise_for(model, data, settings):
    if settings.noise_kind is None:
        raise CliCapabilityError(
            "NCE needs a noise distribution: pass --noise "
            f"({', '.join(NOISE_KINDS)}) or set nce.noise in the config file"
        )
    return make_noise(settings.noise_kind, data)


def _sample_noise(noise, n_noise, settings):
    seed = settings.seed if settings.seed is not None else 0
    return noise.sample(n_noise, replicate_rng(seed, 0, 1))


# ----------------------------------------------------------------------
# Output
# ----------------------------------------------------------------------


def _emit_payload(payload, args, csv_lines=None):
    fmt = getattr(args, "format", None) or "json"
    out = getattr(args, "out", None)
    if fmt == "csv" and csv_lines is None:
        raise CliUsageError(f"{args.subcommand}: no CSV form for this output")
    if out is None:
        if fmt == "json":
            json.dump(payload, sys.stdout, sort_keys=True, indent=2)
            sys.stdout.write("\n")
        else:
            sys.stdout.write("\n".join(csv_lines) + "\n")
        return
    if fmt == "json":
        with open(out, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, sort_keys=True, indent=2)
            handle.write("\n")
    else:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write("\n".join(csv_lines) + "\n")


def _verbose(args, message):
    if getattr(args, "verbose", False):
        print(message, file=sys.stderr)


# ----------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------


def _fit_method(model):
    """Damped Newton for mixtures (overfitted orders are CG-hostile ridges)."""
    return "newton" if isinstance(model, GaussianMixture1D) else "cg"


def _fit_one(model, data, estimator, settings):
    """Fit and return (payload fragment, fitted object) for one model."""
    if estimator == "nce":
        noise = _make_noise_for(model, data, settings)
        n_noise = settings.n_noise if settings.n_noise is not None else data.shape[0]
        noise_samples = _sample_noise(noise, n_noise, settings)
        fit = fit_nce(
            model,
            data,
            noise,
            noise_samples,
            grad_tol=settings.grad_tol,
            max_iter=settings.max_iter,
            method=_fit_method(model),
        )
        fragment = {
            "theta_hat": [float(v) for v in fit.theta_hat],
            "c_hat": [float(v) for v in fit.c_hat],
            "objective_value": fit.objective_value,
            "n_data": fit.n_data,
            "n_noise": fit.n_noise,
            "noise": fit.noise.describe(),
            "converged": fit.opt.converged,
            "iterations": fit.opt.iterations,
            "grad_norm": fit.opt.grad_norm,
            "termination_reason": fit.opt.termination_reason,
        }
        return fragment, fit, noise_samples, noise
    _check_sm_domain(model, settings)
    if settings.sm_method == "closed":
        fit = fit_sm_closed_form(model, data)
    else:
        fit = fit_sm_generic(
            model, data, grad_tol=min(settings.grad_tol, 1e-9), max_iter=settings.max_iter
        )
    fragment = {
        "theta_hat": [float(v) for v in fit.theta_hat],
        "objective_value": fit.objective_value,
        "n_data": fit.n_data,
        "method": fit.method,
    }
    return fragment, fit, None, None


def cmd_fit(args):
    settings = Settings(args)
    data = load_data(args.data, settings.seed)
    model = build_model(args, data)
    model.validate_domain(data)
    fragment, fit, noise_samples, _ = _fit_one(model, data, args.estimator, settings)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": "fit",
        "model": model.name,
        "estimator": args.estimator,
    }
    payload.update(fragment)
    criterion = getattr(args, "criterion", None)
    if criterion is not None:
        payload["criterion"] = criterion
        payload["criterion_value"] = _criterion_value(
            criterion, args.estimator, model, data, fit, noise_samples, settings
        )
    csv_lines = ["param,value"] + [
        f"theta_{i + 1},{v!r}" for i, v in enumerate(fragment["theta_hat"])
    ]
    if "c_hat" in fragment:
        csv_lines += [f"c_{i + 1},{v!r}" for i, v in enumerate(fragment["c_hat"])]
    csv_lines.append(f"objective_value,{fragment['objective_value']!r}")
    _emit_payload(payload, args, csv_lines)
    return EXIT_OK


def _criterion_value(criterion, estimator, model, data, fit, noise_samples, settings):
    if criterion == "aic":
        raise CliCapabilityError("aic is a select-time baseline; use the select subcommand")
    if criterion in ("ncic1", "ncic2", "nce-cv"):
        if estimator != "nce":
            raise CliCapabilityError(f"criterion {criterion} requires --estimator nce")
        if criterion == "ncic1":
            return ncic1(fit, data, noise_samples)
        if criterion == "ncic2":
            return ncic2(fit, data, noise_samples)
        if data.shape[0] != noise_samples.shape[0]:
            raise CliCapabilityError("nce-cv requires M = N (index-aligned folds)")
        return nce_loocv(
            model,
            data,
            fit.noise,
            noise_samples,
            grad_tol=settings.grad_tol,
            max_iter=settings.max_iter,
            full_fit=fit,
        )
    if estimator != "sm":
        raise CliCapabilityError(f"criterion {criterion} requires --estimator sm")
    if criterion == "smic":
        return smic(fit, data)
    return sm_loocv(model, data, grad_tol=settings.grad_tol, max_iter=settings.max_iter)


# ----------------------------------------------------------------------
# select
# ----------------------------------------------------------------------


def _candidate_models(args, data):
    d = data.shape[1]
    labels, models = [], []
    if args.model in ("ggm", "tggm", "log-ggm"):
        family = {"ggm": GGM, "tggm": TruncatedGGM, "log-ggm": LogGGM}[args.model]
        if list(args.candidates) == ["all"]:
            graphs = GraphSpec.enumerate_all(d)
        else:
            graphs = [_parse_graph(text, d) for text in args.candidates]
        for graph in graphs:
            labels.append(graph.to_string() or "empty")
            models.append(family(graph))
    elif args.model == "nn-gmm":
        for text in args.candidates:
            try:
                k = int(text)
            except ValueError as exc:
                raise CliUsageError(f"candidate {text!r}: expected a component count") from exc
            labels.append(str(k))
            models.append(GaussianMixture1D(k))
    else:
        raise CliCapabilityError(
            f"select needs a candidate family (ggm, tggm, log-ggm, nn-gmm); got {args.model}"
        )
    if len(models) < 2:
        raise CliUsageError("select requires at least 2 candidates")
    return labels, models


def cmd_select(args):
    settings = Settings(args)
    criterion = args.criterion
    if criterion == "aic" and not settings.baseline_enabled:
        raise CliCapabilityError("criterion aic requested but baseline.enabled=false")
    data = load_data(args.data, settings.seed)
    labels, models = _candidate_models(args, data)
    for model in models:
        model.validate_domain(data)

    noise = noise_samples = None
    if criterion in ("ncic1", "ncic2", "nce-cv"):
        noise = _make_noise_for(models[0], data, settings)
        n_noise = settings.n_noise if settings.n_noise is not None else data.shape[0]
        if criterion == "nce-cv" and n_noise != data.shape[0]:
            raise CliCapabilityError("nce-cv requires M = N (index-aligned folds)")
        noise_samples = _sample_noise(noise, n_noise, settings)

    values, errors = [], {}
    for label, model in zip(labels, models):
        try:
            values.append(_select_value(criterion, model, data, noise, noise_samples, settings))
        except NnicError as exc:
            errors[label] = f"{type(exc).__name__}: {exc}"
            values.append(float("inf"))
            _verbose(args, f"candidate {label}: {errors[label]}")
    if not np.isfinite(values).any():
        raise OptimizationFailure("every candidate failed; see per-candidate errors")
    best = int(np.argmin(values))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": "select",
        "model": args.model,
        "criterion": criterion,
        "candidates": labels,
        "values": [v if np.isfinite(v) else None for v in values],
        "errors": errors,
        "selected": labels[best],
    }
    csv_lines = ["candidate,value,selected"] + [
        f"{label},{'' if not np.isfinite(v) else repr(float(v))},{int(i == best)}"
        for i, (label, v) in enumerate(zip(labels, values))
    ]
    _emit_payload(payload, args, csv_lines)
    return EXIT_OK


def _select_value(criterion, model, data, noise, noise_samples, settings):
    if criterion in ("ncic1", "ncic2", "nce-cv"):
        fit = fit_nce(
            model,
            data,
            noise,
            noise_samples,
            grad_tol=settings.grad_tol,
            max_iter=settings.max_iter,
            method=_fit_method(model),
        )
        if criterion == "ncic1":
            return ncic1(fit, data, noise_samples)
        if criterion == "ncic2":
            return ncic2(fit, data, noise_samples)
        return nce_loocv(
            model,
            data,
            noise,
            noise_samples,
            grad_tol=settings.grad_tol,
            max_iter=settings.max_iter,
            full_fit=fit,
        )
    if criterion == "smic":
        _check_sm_domain(model, settings)
        return smic(fit_sm_closed_form(model, data), data)
    if criterion == "sm-cv":
        _check_sm_domain(model, settings)
        return sm_loocv(model, data, grad_tol=settings.grad_tol, max_iter=settings.max_iter)
    if criterion == "aic":
        if isinstance(model, GGM):
            return aic(fit_ggm_mle(model.graph, data))
        if isinstance(model, GaussianMixture1D):
            seed = settings.seed if settings.seed is not None else 0
            em_seed = int(replicate_rng(seed, 0, 2).integers(0, 2**31 - 1))
            return aic(fit_gmm_em_1d(data, model.n_components, seed=em_seed))
        raise CliCapabilityError(f"aic baseline covers ggm and nn-gmm, not {model.name}")
    raise CliUsageError(f"unknown criterion {criterion!r}")


# ----------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------


def _parse_float_list(text, flag):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok)
    except ValueError as exc:
        raise CliUsageError(f"{flag}: expected comma-separated numbers") from exc


def _parse_int_list(text, flag):
    try:
        return tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError as exc:
        raise CliUsageError(f"{flag}: expected comma-separated integers") from exc


def _experiment_config(args, settings):
    seed = settings.seed if settings.seed is not None else 0
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    common = {
        "replicates": args.reps,
        "master_seed": seed,
        "workers": workers,
        "grad_tol": settings.grad_tol,
        "max_iter": settings.max_iter,
    }
    if args.subcommand == "bias":
        n = args.N if args.N is not None else 1000
        return ExperimentConfig(
            experiment=f"bias-{args.estimator}",
            n_data=n,
            n_noise=settings.n_noise if settings.n_noise is not None else n,
            eps_grid=_parse_float_list(args.eps, "--eps"),
            **common,
        )
    if args.subcommand == "edges":
        n = args.N if args.N is not None else 1000
        return ExperimentConfig(
            experiment=f"edges-{args.family}",
            n_data=n,
            n_noise=settings.n_noise if settings.n_noise is not None else n,
            sigma12=args.sigma12,
            **common,
        )
    if args.subcommand == "mixture":
        n = args.N if args.N is not None else 1000
        return ExperimentConfig(
            experiment="mixture-k",
            n_data=n,
            n_noise=settings.n_noise if settings.n_noise is not None else 10000,
            k_grid=_parse_int_list(args.K, "--K"),
            **common,
        )
    n = args.N if args.N is not None else 365
    return ExperimentConfig(
        experiment="bvm-dependence",
        n_data=n,
        n_noise=settings.n_noise if settings.n_noise is not None else 1000,
        **common,
    )


def cmd_experiment(args):
    settings = Settings(args)
    cfg = _experiment_config(args, settings)
    _verbose(
        args,
        f"running {cfg.experiment}: {cfg.replicates} replicates, "
        f"N={cfg.n_data}, M={cfg.n_noise}, seed={cfg.master_seed}, workers={cfg.workers}",
    )
    result = run_experiment(cfg)
    if args.out is not None:
        base = args.out
        for suffix in (".json", ".csv"):
            if base.endswith(suffix):
                base = base[: -len(suffix)]
        write_json(result, base + ".json")
        write_csv(result, base + ".csv")
        _verbose(args, f"wrote {base}.json and {base}.csv")
    else:
        json.dump(result_to_dict(result), sys.stdout, sort_keys=True, indent=2)
        sys.stdout.write("\n")
    _verbose(args, f"finished in {result.runtime_seconds:.1f}s")
    if result.incomplete:
        print(
            f"warning: {len(result.failures)} of {cfg.replicates} replicates failed; "
            "results are partial",
            file=sys.stderr,
        )
        return EXIT_INCOMPLETE
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def _add_common(parser, *, experiment=False):
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--seed", type=int, default=None, help="master seed (64-bit)")
    parser.add_argument("--out", default=None, help="output path")
    parser.add_argument("--M", type=int, default=None, help="noise sample count")
    parser.add_argument("--grad-tol", dest="grad_tol", type=float, default=None)
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    parser.add_argument("--verbose", action="store_true")
    if experiment:
        parser.add_argument("--reps", type=int, required=True, help="replicate count")
        parser.add_argument("--workers", type=int, default=None)
        parser.add_argument("--N", type=int, default=None, help="data sample count")
    else:
        parser.add_argument("--format", choices=("json", "csv"), default=None)
        parser.add_argument("--noise", default=None, help=f"one of {', '.join(NOISE_KINDS)}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nnic",
        description="Fitting and model selection for non-normalized models.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_fit = sub.add_parser("fit", help="fit one model by NCE or score matching")
    p_fit.add_argument("--model", required=True, choices=MODEL_IDS)
    p_fit.add_argument("--estimator", required=True, choices=("nce", "sm"))
    p_fit.add_argument("--data", required=True, help="CSV path or synthetic:<family>,...")
    p_fit.add_argument("--graph", default=None, help='edge list "1-2,2-3", full, or empty')
    p_fit.add_argument("--K", type=int, default=None, help="mixture components")
    p_fit.add_argument("--criterion", choices=CRITERIA, default=None)
    _add_common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sel = sub.add_parser("select", help="rank candidate models by one criterion")
    p_sel.add_argument("--model", required=True, choices=MODEL_IDS)
    p_sel.add_argument("--criterion", required=True, choices=CRITERIA)
    p_sel.add_argument("--data", required=True, help="CSV path or synthetic:<family>,...")
    p_sel.add_argument(
        "--candidates",
        nargs="+",
        required=True,
        help='graph strings (or "all") for graphical models; K values for nn-gmm',
    )
    _add_common(p_sel)
    p_sel.set_defaults(func=cmd_select)

    p_bias = sub.add_parser("bias", help="replicated bias-estimation study")
    p_bias.add_argument("--estimator", required=True, choices=("nce", "sm"))
    p_bias.add_argument("--eps", default="0,0.05,0.1,0.2", help="comma-separated grid")
    _add_common(p_bias, experiment=True)
    p_bias.set_defaults(func=cmd_experiment)

    p_edges = sub.add_parser("edges", help="replicated graph-selection study")
    p_edges.add_argument("--family", choices=("ggm", "tggm"), default="ggm")
    p_edges.add_argument("--sigma12", type=float, default=0.5)
    _add_common(p_edges, experiment=True)
    p_edges.set_defaults(func=cmd_experiment)

    p_mix = sub.add_parser("mixture", help="replicated mixture-order study")
    p_mix.add_argument("--K", default="1,2,3,4", help="comma-separated component grid")
    _add_common(p_mix, experiment=True)
    p_mix.set_defaults(func=cmd_experiment)

    p_bvm = sub.add_parser("bvm", help="replicated torus-dependence study")
    _add_common(p_bvm, experiment=True)
    p_bvm.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliUsageError, DataFormatError, ValueError) as exc:
        print(f"nnic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CliCapabilityError, CapabilityError, DomainError, NoiseDensityZero) as exc:
        print(f"nnic: error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except OptimizationFailure as exc:
        print(f"nnic: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NnicError as exc:
        print(f"nnic: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
