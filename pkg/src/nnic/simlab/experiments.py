"""Replicated simulation studies.

Each experiment draws replicate datasets, fits candidate models, evaluates
criteria, and aggregates selection frequencies (with Wald intervals) or bias
curves.  Replicates are independent both statistically (dedicated RNG
streams) and computationally (a process pool may run them in any order;
aggregation is by replicate index, so results do not depend on the worker
count).  A replicate that raises is recorded as a failure and excluded; the
result is then marked incomplete rather than the whole run being lost.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..baselines import aic, fit_ggm_mle, fit_gmm_em_1d
from ..exceptions import NnicError, OptimizationFailure, SingularMatrix
from ..linalg import trace_product_inv
from ..models import (
    GGM,
    BivariateVonMises,
    GaussianMixture1D,
    GraphSpec,
    LogGGM,
    NNGaussian1D,
    TruncatedGGM,
)
from ..nce import (
    b_hat,
    estimate_I_hat,
    estimate_J_hat,
    fit_nce,
    ncic1,
    ncic2,
    nce_loocv,
)
from ..noise import ExponentialProductNoise, GaussianNoise, UniformTorusNoise
from ..sm import fit_sm_closed_form, sm_I_hat, sm_J_hat, sm_loocv, smic
from .population import d_nce_population, d_sm_population, wald_ci
from .rng import replicate_rng
from .samplers import (
    chain3_precision,
    contaminated_gaussian_pdf,
    sample_bivariate_von_mises,
    sample_contaminated_gaussian,
    sample_gmm_1d,
    sample_mvn_from_precision,
    sample_truncated_mvn,
)

__all__ = [
    "ExperimentConfig",
    "BiasCurve",
    "SelectionTable",
    "EXPERIMENTS",
    "run_experiment",
]

#: Fitted sine-model parameters (k1, k2, m1, m2, lam) used by the torus study.
DEFAULT_BVM_THETA = (0.813, 0.440, 1.120, 4.644, -0.965)

TRUE_CHAIN_GRAPH = "1-2,2-3"


@dataclass(frozen=True)
class ExperimentConfig:
    """Design of one replicated study; unused fields are ignored per experiment."""

    experiment: str
    n_data: int
    n_noise: int
    replicates: int
    master_seed: int
    workers: int = 1
    eps_grid: tuple = (0.0, 0.05, 0.1, 0.2)
    sigma12: float = 0.5
    k_grid: tuple = (1, 2, 3, 4)
    bvm_theta: tuple = DEFAULT_BVM_THETA
    gmm_weights: tuple = (0.5, 0.5)
    gmm_means: tuple = (0.0, 3.0)
    gmm_sds: tuple = (1.0, 1.0)
    grad_tol: float = 1e-7
    max_iter: int = 2000

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r} (options: {', '.join(EXPERIMENTS)})"
            )
        if min(self.n_data, self.replicates) < 1:
            raise ValueError("n_data and replicates must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass
class BiasCurve:
    """Per-eps true bias and bias-estimate moments for one estimator."""

    estimator: str
    eps: tuple
    true_bias: tuple
    mean_bhat1: tuple
    sd_bhat1: tuple
    mean_bhat2: Optional[tuple]
    sd_bhat2: Optional[tuple]
    replicates_used: int
    failures: tuple
    config: ExperimentConfig
    runtime_seconds: float

    @property
    def incomplete(self):
        return len(self.failures) > 0


@dataclass
class SelectionTable:
    """Selection frequencies per criterion over a label set (edges, K, ...)."""

    experiment: str
    labels: tuple
    criteria: tuple
    frequency: dict
    ci: dict
    counts: dict
    extras: dict = field(default_factory=dict)
    replicates_used: int = 0
    failures: tuple = ()
    config: Optional[ExperimentConfig] = None
    runtime_seconds: float = 0.0

    @property
    def incomplete(self):
        return len(self.failures) > 0


# ----------------------------------------------------------------------
# Replicate bodies
# ----------------------------------------------------------------------


def _graph_edges(graph_string):
    return set(graph_string.split(",")) if graph_string else set()


def _argmin_label(labels, values):
    values = np.asarray(values, dtype=float)
    if not np.any(np.isfinite(values)):
        return None
    return labels[int(np.argmin(values))]


def _bias_replicate(cfg, rep, estimator):
    model = NNGaussian1D()
    noise = GaussianNoise.standard(1)
    log_root_2pi = 0.5 * math.log(2.0 * math.pi)
    rows = []
    for eps in cfg.eps_grid:
        # Re-derive both streams per eps so the grid shares its randomness.
        rng_data = replicate_rng(cfg.master_seed, rep, 0)
        x = sample_contaminated_gaussian(cfg.n_data, eps, rng_data)
        q_pdf = contaminated_gaussian_pdf(eps)
        if estimator == "nce":
            rng_noise = replicate_rng(cfg.master_seed, rep, 1)
            y = noise.sample(cfg.n_noise, rng_noise)
            fit = fit_nce(
                model, x, noise, y, grad_tol=cfg.grad_tol, max_iter=cfg.max_iter
            )
            bhat1 = -trace_product_inv(
                estimate_I_hat(fit, x, y), estimate_J_hat(fit, x, y)
            )
            mean_b = (np.sum(b_hat(x, fit)) + np.sum(b_hat(y, fit))) / (
                fit.n_data + fit.n_noise
            )
            bhat2 = mean_b - fit.m
            t1, t2 = float(fit.theta_hat[0]), float(fit.theta_hat[1])
            c0 = float(fit.c_hat[0])
            d_pop = d_nce_population(
                q_pdf,
                lambda v: t1 * v * v + t2 * v + c0,
                lambda v: -0.5 * v * v - log_root_2pi,
                cfg.n_data,
                cfg.n_noise,
            )
            rows.append((eps, cfg.n_data * (fit.objective_value - d_pop), bhat1, bhat2))
        else:
            fit = fit_sm_closed_form(model, x)
            bhat1 = -trace_product_inv(
                sm_I_hat(model, fit.theta_hat, x), sm_J_hat(model, fit.theta_hat, x)
            )
            t1, t2 = float(fit.theta_hat[0]), float(fit.theta_hat[1])
            d_pop = d_sm_population(
                q_pdf, lambda v: 4.0 * t1 + (2.0 * t1 * v + t2) ** 2
            )
            # Control variate: the same gap evaluated at the fixed minimizer
            # of the population loss, t_ref = -1/(2 E_q[x^2]) with
            # E_q[x^2] = 1 + 9 eps, has mean zero (the empirical loss at a
            # fixed parameter is unbiased for its population value) and
            # carries nearly all of the fourth-moment sampling noise of the
            # empirical loss, so subtracting it shrinks the variance of the
            # true-bias estimate without moving its expectation.
            t_ref = -0.5 / (1.0 + 9.0 * eps)
            gap_hat = fit.objective_value - float(
                np.mean(4.0 * t_ref + np.square(2.0 * t_ref * x))
            )
            gap_pop = d_pop - d_sm_population(
                q_pdf, lambda v: 4.0 * t_ref + (2.0 * t_ref * v) ** 2
            )
            rows.append((eps, cfg.n_data * (gap_hat - gap_pop), bhat1, None))
    return rows


def _edges_replicate(cfg, rep, family):
    rng_data = replicate_rng(cfg.master_seed, rep, 0)
    rng_noise = replicate_rng(cfg.master_seed, rep, 1)
    k_true = chain3_precision(cfg.sigma12)
    if family == "ggm":
        x = sample_mvn_from_precision(k_true, cfg.n_data, rng_data)
        noise = GaussianNoise.moment_matched(x)
        make_model = GGM
        criteria = ("ncic1", "ncic2", "smic", "aic")
    else:
        x = sample_truncated_mvn(k_true, cfg.n_data, rng_data)
        noise = ExponentialProductNoise.moment_matched(x)
        make_model = TruncatedGGM
        criteria = ("ncic1", "ncic2", "smic")
    y = noise.sample(cfg.n_noise, rng_noise)

    graphs = GraphSpec.enumerate_all(3)
    labels = tuple(g.to_string() for g in graphs)
    values = {crit: [] for crit in criteria}
    for graph in graphs:
        model = make_model(graph)
        try:
            fit = fit_nce(model, x, noise, y, grad_tol=cfg.grad_tol, max_iter=cfg.max_iter)
            values["ncic1"].append(ncic1(fit, x, y))
            values["ncic2"].append(ncic2(fit, x, y))
        except (OptimizationFailure, SingularMatrix):
            values["ncic1"].append(np.inf)
            values["ncic2"].append(np.inf)
        try:
            sm_fit = fit_sm_closed_form(model, x)
            values["smic"].append(smic(sm_fit, x))
        except SingularMatrix:
            values["smic"].append(np.inf)
        if "aic" in values:
            try:
                values["aic"].append(aic(fit_ggm_mle(graph, x)))
            except (OptimizationFailure, SingularMatrix):
                values["aic"].append(np.inf)
    return {crit: _argmin_label(labels, vals) for crit, vals in values.items()}


def _cv_compare_replicate(cfg, rep):
    rng_data = replicate_rng(cfg.master_seed, rep, 0)
    rng_noise = replicate_rng(cfg.master_seed, rep, 1)
    x = sample_mvn_from_precision(chain3_precision(cfg.sigma12), cfg.n_data, rng_data)
    noise = GaussianNoise.moment_matched(x)
    y = noise.sample(cfg.n_noise, rng_noise)

    graphs = GraphSpec.enumerate_all(3)
    labels = tuple(g.to_string() for g in graphs)
    values = {crit: [] for crit in ("ncic2", "nce-cv", "smic", "sm-cv")}
    # Timed quantity: the criterion computation itself.  Both members of each
    # pair consume the same fitted model (the leave-one-out loop warm-starts
    # from it), so the shared fit is excluded from both sides.
    seconds = dict.fromkeys(values, 0.0)
    for graph in graphs:
        model = GGM(graph)
        try:
            fit = fit_nce(model, x, noise, y, grad_tol=cfg.grad_tol, max_iter=cfg.max_iter)
        except OptimizationFailure:
            fit = None
        if fit is None:
            values["ncic2"].append(np.inf)
            values["nce-cv"].append(np.inf)
        else:
            tick = time.perf_counter()
            values["ncic2"].append(ncic2(fit, x, y))
            seconds["ncic2"] += time.perf_counter() - tick
            tick = time.perf_counter()
            try:
                values["nce-cv"].append(
                    nce_loocv(
                        model,
                        x,
                        noise,
                        y,
                        grad_tol=cfg.grad_tol,
                        max_iter=cfg.max_iter,
                        full_fit=fit,
                    )
                )
            except OptimizationFailure:
                values["nce-cv"].append(np.inf)
            seconds["nce-cv"] += time.perf_counter() - tick
        try:
            sm_fit = fit_sm_closed_form(model, x)
        except SingularMatrix:
            sm_fit = None
        if sm_fit is None:
            values["smic"].append(np.inf)
            values["sm-cv"].append(np.inf)
            continue
        tick = time.perf_counter()
        values["smic"].append(smic(sm_fit, x))
        seconds["smic"] += time.perf_counter() - tick
        tick = time.perf_counter()
        try:
            values["sm-cv"].append(sm_loocv(model, x, full_fit=sm_fit))
        except SingularMatrix:
            values["sm-cv"].append(np.inf)
        seconds["sm-cv"] += time.perf_counter() - tick
    selected = {crit: _argmin_label(labels, vals) for crit, vals in values.items()}
    return {"selected": selected, "seconds": seconds}


def _mixture_replicate(cfg, rep):
    rng_data = replicate_rng(cfg.master_seed, rep, 0)
    rng_noise = replicate_rng(cfg.master_seed, rep, 1)
    x = sample_gmm_1d(cfg.gmm_weights, cfg.gmm_means, cfg.gmm_sds, cfg.n_data, rng_data)
    noise = GaussianNoise.moment_matched(x)
    y = noise.sample(cfg.n_noise, rng_noise)
    em_seed = int(replicate_rng(cfg.master_seed, rep, 2).integers(0, 2**31 - 1))

    labels = tuple(str(k) for k in cfg.k_grid)
    values = {"ncic2": [], "aic": []}
    for k in cfg.k_grid:
        model = GaussianMixture1D(k)
        em = fit_gmm_em_1d(x, k, seed=em_seed)
        values["aic"].append(aic(em))
        # The EM fit doubles as the contrastive start; overfitted orders put
        # the objective on a nearly singular ridge, where the damped-Newton
        # path converges in tens of steps instead of CG's hundreds.
        theta0, c0 = model.params_from_mixture(em.weights, em.means, em.variances)
        try:
            fit = fit_nce(
                model,
                x,
                noise,
                y,
                x0=np.concatenate([theta0, c0]),
                grad_tol=cfg.grad_tol,
                max_iter=cfg.max_iter,
                method="newton",
            )
            values["ncic2"].append(ncic2(fit, x, y))
        except OptimizationFailure:
            values["ncic2"].append(np.inf)
    return {crit: _argmin_label(labels, vals) for crit, vals in values.items()}


def _bvm_replicate(cfg, rep):
    rng_data = replicate_rng(cfg.master_seed, rep, 0)
    rng_noise = replicate_rng(cfg.master_seed, rep, 1)
    x = sample_bivariate_von_mises(cfg.bvm_theta, cfg.n_data, rng_data)
    noise = UniformTorusNoise(2)
    y = noise.sample(cfg.n_noise, rng_noise)
    out = {}
    for label, dependent in (("dependent", True), ("independent", False)):
        model = BivariateVonMises(dependent=dependent)
        fit = fit_nce(model, x, noise, y, grad_tol=cfg.grad_tol, max_iter=cfg.max_iter)
        out[label] = ncic2(fit, x, y)
    return out


def _loggm_vs_tggm_replicate(cfg, rep):
    rng_data = replicate_rng(cfg.master_seed, rep, 0)
    rng_noise = replicate_rng(cfg.master_seed, rep, 1)
    x = sample_truncated_mvn(chain3_precision(cfg.sigma12), cfg.n_data, rng_data)
    noise = ExponentialProductNoise.moment_matched(x)
    y = noise.sample(cfg.n_noise, rng_noise)
    graph = GraphSpec.path(3)
    out = {}
    for label, model in (("tggm", TruncatedGGM(graph)), ("log-ggm", LogGGM(graph))):
        fit = fit_nce(model, x, noise, y, grad_tol=cfg.grad_tol, max_iter=cfg.max_iter)
        out[label] = ncic2(fit, x, y)
    return out


# ----------------------------------------------------------------------
# Aggregation
# ----------------------------------------------------------------------


def _aggregate_bias(cfg, rows_per_rep, failures, runtime, estimator):
    eps = tuple(cfg.eps_grid)
    used = len(rows_per_rep)
    by_eps = {e: [] for e in eps}
    for rows in rows_per_rep:
        for e, true_b, b1, b2 in rows:
            by_eps[e].append((true_b, b1, b2))
    true_bias, mean_b1, sd_b1, mean_b2, sd_b2 = [], [], [], [], []
    for e in eps:
        arr = np.array([(t, b1) for t, b1, _ in by_eps[e]], dtype=float)
        true_bias.append(float(arr[:, 0].mean()))
        mean_b1.append(float(arr[:, 1].mean()))
        sd_b1.append(float(arr[:, 1].std(ddof=1)) if used > 1 else 0.0)
        if estimator == "nce":
            b2 = np.array([b2 for _, _, b2 in by_eps[e]], dtype=float)
            mean_b2.append(float(b2.mean()))
            sd_b2.append(float(b2.std(ddof=1)) if used > 1 else 0.0)
    return BiasCurve(
        estimator=estimator,
        eps=eps,
        true_bias=tuple(true_bias),
        mean_bhat1=tuple(mean_b1),
        sd_bhat1=tuple(sd_b1),
        mean_bhat2=tuple(mean_b2) if estimator == "nce" else None,
        sd_bhat2=tuple(sd_b2) if estimator == "nce" else None,
        replicates_used=used,
        failures=tuple(failures),
        config=cfg,
        runtime_seconds=runtime,
    )


def _frequency_block(picks, labels, membership):
    """Frequencies and Wald intervals of ``membership(pick, label)`` over picks."""
    n = len(picks)
    freq, ci = [], []
    for label in labels:
        p = sum(1 for pick in picks if membership(pick, label)) / n if n else float("nan")
        freq.append(p)
        ci.append(wald_ci(p, n) if n else (float("nan"), float("nan")))
    return tuple(freq), tuple(ci), n


def _pair_agreement(selections, first, second):
    both = [
        (sel[first], sel[second])
        for sel in selections
        if sel.get(first) is not None and sel.get(second) is not None
    ]
    if not both:
        return float("nan")
    return sum(1 for a, b in both if a == b) / len(both)


def _aggregate_edge_like(cfg, selections, failures, runtime, criteria, seconds=None):
    edge_labels = ("1-2", "1-3", "2-3")
    frequency, ci, counts, true_freq = {}, {}, {}, {}
    for crit in criteria:
        picks = [sel[crit] for sel in selections if sel[crit] is not None]
        freq, intervals, n = _frequency_block(
            picks, edge_labels, lambda pick, lab: lab in _graph_edges(pick)
        )
        frequency[crit] = freq
        ci[crit] = intervals
        counts[crit] = n
        true_freq[crit] = (
            sum(1 for pick in picks if pick == TRUE_CHAIN_GRAPH) / n if n else float("nan")
        )
    extras = {"true_graph_freq": true_freq}
    pairs = [("smic", "aic"), ("ncic1", "ncic2"), ("ncic2", "nce-cv"), ("smic", "sm-cv")]
    agreement = {
        f"{a}~{b}": _pair_agreement(selections, a, b)
        for a, b in pairs
        if a in criteria and b in criteria
    }
    if agreement:
        extras["agreement"] = agreement
    if seconds is not None:
        extras["seconds"] = seconds
    return SelectionTable(
        experiment=cfg.experiment,
        labels=edge_labels,
        criteria=tuple(criteria),
        frequency=frequency,
        ci=ci,
        counts=counts,
        extras=extras,
        replicates_used=len(selections),
        failures=tuple(failures),
        config=cfg,
        runtime_seconds=runtime,
    )


def _aggregate_edges_ggm(cfg, oks, failures, runtime):
    return _aggregate_edge_like(
        cfg, oks, failures, runtime, ("ncic1", "ncic2", "smic", "aic")
    )


def _aggregate_edges_tggm(cfg, oks, failures, runtime):
    return _aggregate_edge_like(cfg, oks, failures, runtime, ("ncic1", "ncic2", "smic"))


def _aggregate_cv_compare(cfg, oks, failures, runtime):
    seconds = {crit: 0.0 for crit in ("ncic2", "nce-cv", "smic", "sm-cv")}
    for rep in oks:
        for crit, value in rep["seconds"].items():
            seconds[crit] += value
    selections = [rep["selected"] for rep in oks]
    return _aggregate_edge_like(
        cfg, selections, failures, runtime, ("ncic2", "nce-cv", "smic", "sm-cv"), seconds
    )


def _aggregate_mixture(cfg, oks, failures, runtime):
    labels = tuple(str(k) for k in cfg.k_grid)
    frequency, ci, counts = {}, {}, {}
    for crit in ("ncic2", "aic"):
        picks = [sel[crit] for sel in oks if sel[crit] is not None]
        freq, intervals, n = _frequency_block(picks, labels, lambda pick, lab: pick == lab)
        frequency[crit], ci[crit], counts[crit] = freq, intervals, n
    return SelectionTable(
        experiment=cfg.experiment,
        labels=labels,
        criteria=("ncic2", "aic"),
        frequency=frequency,
        ci=ci,
        counts=counts,
        extras={"agreement": {"ncic2~aic": _pair_agreement(oks, "ncic2", "aic")}},
        replicates_used=len(oks),
        failures=tuple(failures),
        config=cfg,
        runtime_seconds=runtime,
    )


def _aggregate_two_model(cfg, oks, failures, runtime, labels):
    """Head-to-head comparison: label with the smaller criterion value wins."""
    first, second = labels
    picks = [first if rep[first] < rep[second] else second for rep in oks]
    freq, intervals, n = _frequency_block(picks, labels, lambda pick, lab: pick == lab)
    return SelectionTable(
        experiment=cfg.experiment,
        labels=labels,
        criteria=("ncic2",),
        frequency={"ncic2": freq},
        ci={"ncic2": intervals},
        counts={"ncic2": n},
        extras={},
        replicates_used=len(oks),
        failures=tuple(failures),
        config=cfg,
        runtime_seconds=runtime,
    )


# ----------------------------------------------------------------------
# Driver
# ----------------------------------------------------------------------

EXPERIMENTS = {
    "bias-nce": lambda cfg, rep: _bias_replicate(cfg, rep, "nce"),
    "bias-sm": lambda cfg, rep: _bias_replicate(cfg, rep, "sm"),
    "edges-ggm": lambda cfg, rep: _edges_replicate(cfg, rep, "ggm"),
    "edges-tggm": lambda cfg, rep: _edges_replicate(cfg, rep, "tggm"),
    "cv-compare": _cv_compare_replicate,
    "mixture-k": _mixture_replicate,
    "bvm-dependence": _bvm_replicate,
    "loggm-vs-tggm": _loggm_vs_tggm_replicate,
}

_AGGREGATORS = {
    "bias-nce": lambda cfg, oks, fails, rt: _aggregate_bias(cfg, oks, fails, rt, "nce"),
    "bias-sm": lambda cfg, oks, fails, rt: _aggregate_bias(cfg, oks, fails, rt, "sm"),
    "edges-ggm": _aggregate_edges_ggm,
    "edges-tggm": _aggregate_edges_tggm,
    "cv-compare": _aggregate_cv_compare,
    "mixture-k": _aggregate_mixture,
    "bvm-dependence": lambda cfg, oks, fails, rt: _aggregate_two_model(
        cfg, oks, fails, rt, ("dependent", "independent")
    ),
    "loggm-vs-tggm": lambda cfg, oks, fails, rt: _aggregate_two_model(
        cfg, oks, fails, rt, ("tggm", "log-ggm")
    ),
}


def _run_one(payload):
    cfg, rep = payload
    replicate = EXPERIMENTS[cfg.experiment]
    try:
        return ("ok", replicate(cfg, rep))
    except Exception as exc:  # noqa: BLE001 - replicate panics become failures
        return ("error", f"replicate {rep}: {type(exc).__name__}: {exc}")


def run_experiment(cfg):
    """Run all replicates of ``cfg`` and aggregate; see the module docstring."""
    start = time.perf_counter()
    payloads = [(cfg, rep) for rep in range(cfg.replicates)]
    if cfg.workers > 1:
        chunk = max(1, cfg.replicates // (4 * cfg.workers))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            raw = list(pool.map(_run_one, payloads, chunksize=chunk))
    else:
        raw = [_run_one(p) for p in payloads]
    oks = [value for tag, value in raw if tag == "ok"]
    failures = [value for tag, value in raw if tag == "error"]
    if not oks:
        raise NnicError(f"all replicates failed; first failure: {failures[0]}")
    runtime = time.perf_counter() - start
    return _AGGREGATORS[cfg.experiment](cfg, oks, failures, runtime)
