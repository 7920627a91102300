"""Normalized-model baselines the criteria are compared against.

Maximum likelihood for zero-mean Gaussian graphical models (closed form for
the full and empty graphs, iterative for general patterns) and EM for
one-dimensional Gaussian mixtures, both scored by AIC.  These live on the
normalized side of the fence: they need the normalizing constant, which is
exactly what the contrastive and score matching routes avoid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .data import TWO_PI
from .exceptions import DegenerateComponent, LineSearchFailure, OptimizationFailure
from .linalg import inv_spd, is_pd, logdet_spd
from .models.graphical import GraphSpec
from .optim import OptProblem, minimize_cg

__all__ = ["GgmMleFit", "fit_ggm_mle", "Gmm1DFit", "fit_gmm_em_1d", "aic", "gaussian_loglik"]


@dataclass(frozen=True)
class GgmMleFit:
    graph: GraphSpec
    precision: np.ndarray
    loglik: float
    k_params: int
    method: str


@dataclass(frozen=True)
class Gmm1DFit:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik: float
    k_params: int
    n_iter: int
    loglik_trace: tuple

    @property
    def method(self):
        return "em"


def gaussian_loglik(precision, second_moment, n):
    """Log likelihood of N zero-mean Gaussian points with sample second moment S."""
    d = precision.shape[0]
    logdet = logdet_spd(precision, "precision")
    return -0.5 * n * (d * np.log(TWO_PI) - logdet + float(np.sum(precision * second_moment)))


def fit_ggm_mle(graph, data, *, grad_tol=1e-7, max_iter=2000):
    """Pattern-constrained MLE of a zero-mean Gaussian precision matrix.

    Full and empty graphs have closed forms (inverse second moment and
    reciprocal diagonal); other patterns are maximized iteratively.  At the
    optimum the inverse precision matches the sample second moment on the
    diagonal and on every edge.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    n, d = data.shape
    if graph.d != d:
        raise ValueError(f"graph is on {graph.d} nodes but data has {d} columns")
    s_mat = data.T @ data / n

    if len(graph.edges) == d * (d - 1) // 2:
        precision = inv_spd(s_mat, "sample second moment")
        method = "closed-form"
    elif not graph.edges:
        precision = np.diag(1.0 / np.diag(s_mat))
        method = "closed-form"
    else:
        model_idx = GraphSpec(d, graph.edges)
        ei = np.array([i - 1 for i, _ in model_idx.edges], dtype=int)
        ej = np.array([j - 1 for _, j in model_idx.edges], dtype=int)

        def embed(theta):
            k = np.zeros((d, d))
            k[np.arange(d), np.arange(d)] = theta[:d]
            k[ei, ej] = theta[d:]
            k[ej, ei] = theta[d:]
            return k

        def objective(theta):
            k = embed(theta)
            if not np.all(np.isfinite(theta)) or not is_pd(k):
                return np.inf
            return 0.5 * (-logdet_spd(k) + float(np.sum(k * s_mat)))

        def gradient(theta):
            k = embed(theta)
            k_inv = inv_spd(k)
            grad = np.empty(theta.size)
            grad[:d] = 0.5 * (np.diag(s_mat) - np.diag(k_inv))
            grad[d:] = s_mat[ei, ej] - k_inv[ei, ej]
            return grad

        theta0 = np.concatenate([np.ones(d), np.zeros(len(graph.edges))])
        problem = OptProblem(objective=objective, gradient=gradient, dim=theta0.size)
        result = minimize_cg(problem, theta0, grad_tol=grad_tol, max_iter=max_iter)
        if not result.converged:
            message = (
                f"graphical MLE stopped ({result.termination_reason}) with gradient "
                f"norm {result.grad_norm:.3e} > {grad_tol:.1e}"
            )
            if result.termination_reason == "line-search-failure":
                raise LineSearchFailure(message, result)
            raise OptimizationFailure(message, result)
        precision = embed(result.x_star)
        method = "cg"

    return GgmMleFit(
        graph=graph,
        precision=precision,
        loglik=float(gaussian_loglik(precision, s_mat, n)),
        k_params=graph.n_params,
        method=method,
    )


def aic(fit):
    """``-2 loglik + 2 k`` for any fit exposing ``loglik`` and ``k_params``."""
    return float(-2.0 * fit.loglik + 2.0 * fit.k_params)


def _gmm_loglik_terms(x, weights, means, variances):
    # (n, K) log of weighted normal densities.
    log_norm = -0.5 * (np.log(TWO_PI * variances) + (x[:, None] - means) ** 2 / variances)
    return np.log(weights) + log_norm


def fit_gmm_em_1d(
    data,
    n_components,
    *,
    seed=0,
    tol=1e-8,
    max_iter=500,
    n_restarts=10,
    var_floor=1e-6,
):
    """EM fit of a K-component 1-D Gaussian mixture, best of several restarts.

    Restart initializations draw K centers from the data with the seeded
    generator, so a given (data, seed) pair always returns the same fit.
    Component variances are clamped from below at ``var_floor`` so clusters
    of identical points stay representable; a component that loses all
    responsibility mass aborts that restart, and if every restart
    degenerates this way :class:`DegenerateComponent` is raised.
    ``k_params`` is ``3K - 1`` (weights sum to one).
    """
    x = np.asarray(data, dtype=float).ravel()
    n = x.size
    if n < n_components:
        raise ValueError("need at least as many points as components")
    k = int(n_components)

    if k == 1:
        mean = float(np.mean(x))
        var = max(float(np.var(x)), var_floor)
        loglik = float(np.sum(_gmm_loglik_terms(x, np.ones(1), np.array([mean]), np.array([var]))))
        return Gmm1DFit(
            weights=np.ones(1),
            means=np.array([mean]),
            variances=np.array([var]),
            loglik=loglik,
            k_params=2,
            n_iter=0,
            loglik_trace=(loglik,),
        )

    rng = np.random.default_rng(seed)
    best: Optional[Gmm1DFit] = None
    for _ in range(n_restarts):
        means = rng.choice(x, size=k, replace=False).astype(float)
        variances = np.full(k, max(float(np.var(x)), var_floor))
        weights = np.full(k, 1.0 / k)
        trace = []
        degenerate = False
        loglik = -np.inf
        for iteration in range(1, max_iter + 1):
            log_terms = _gmm_loglik_terms(x, weights, means, variances)
            log_mix = logsumexp(log_terms, axis=1)
            loglik = float(np.sum(log_mix))
            trace.append(loglik)
            resp = np.exp(log_terms - log_mix[:, None])
            counts = resp.sum(axis=0)
            if np.any(counts <= 0.0):
                degenerate = True
                break
            weights = counts / n
            means = resp.T @ x / counts
            variances = (resp * (x[:, None] - means) ** 2).sum(axis=0) / counts
            variances = np.maximum(variances, var_floor)
            if len(trace) >= 2 and abs(trace[-1] - trace[-2]) <= tol * max(1.0, abs(trace[-2])):
                break
        if degenerate:
            continue
        candidate = Gmm1DFit(
            weights=weights,
            means=means,
            variances=variances,
            loglik=loglik,
            k_params=3 * k - 1,
            n_iter=len(trace),
            loglik_trace=tuple(trace),
        )
        if best is None or candidate.loglik > best.loglik:
            best = candidate
    if best is None:
        raise DegenerateComponent(
            f"every EM restart collapsed a component below variance {var_floor:g}"
        )
    order = np.argsort(best.means)
    return Gmm1DFit(
        weights=best.weights[order],
        means=best.means[order],
        variances=best.variances[order],
        loglik=best.loglik,
        k_params=best.k_params,
        n_iter=best.n_iter,
        loglik_trace=best.loglik_trace,
    )
