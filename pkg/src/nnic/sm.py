"""Score matching estimation and its information criterion.

For models with twice x-differentiable log densities the per-point loss on
the reals is

    rho(x) = sum_i [ 2 d2_i log p(x) + (d_i log p(x))^2 ],

and on the (non-)negative orthant the boundary-corrected variant

    rho+(x) = sum_i [ 2 x_i d_i + x_i^2 d2_i + x_i^2 (d_i)^2 ]

replaces it.  Neither involves the normalizing constant.  For the families
here both losses are exact quadratics ``0.5 theta' Gamma(x) theta +
g(x)' theta + const(x)``, so the minimizer of the empirical mean solves one
linear system; an iterative route exists as a cross-check and for curved
extensions.  The information criterion adds a sandwich penalty to the fitted
mean loss, and the leave-one-out analoguere-solves each fold by downdating
the accumulated quadratic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Domain
from .exceptions import (
    CapabilityError,
    EmptyFold,
    LineSearchFailure,
    NotPositiveDefinite,
    OptimizationFailure,
    SingularMatrix,
)
from .linalg import solve_spd, trace_product_inv
from .optim import OptProblem, minimize_cg

__all__ = [
    "rho_sm",
    "rho_sm_plus",
    "sm_loss",
    "SmFit",
    "fit_sm_closed_form",
    "fit_sm_generic",
    "sm_I_hat",
    "sm_J_hat",
    "smic",
    "sm_loocv",
]


def rho_sm(x, theta, model):
    """Unbounded-domain loss per point, shape (n,)."""
    dx = model.dx_log_unnorm(x, theta)
    dxx = model.dxx_log_unnorm(x, theta)
    return np.sum(2.0 * dxx + dx**2, axis=1)


def rho_sm_plus(x, theta, model):
    """Non-negative-orthant loss per point, shape (n,)."""
    x = model.validate_domain(x)
    dx = model.dx_log_unnorm(x, theta)
    dxx = model.dxx_log_unnorm(x, theta)
    return np.sum(2.0 * x * dx + x**2 * dxx + x**2 * dx**2, axis=1)


def sm_loss(x, theta, model):
    """Domain-appropriate per-point loss (plain on reals, corrected on orthants)."""
    if not model.x_differentiable:
        raise CapabilityError(f"{model.name} does not support score matching")
    if model.domain is Domain.REALS:
        return rho_sm(x, theta, model)
    if model.domain in (Domain.NONNEG, Domain.POSITIVE):
        return rho_sm_plus(x, theta, model)
    raise CapabilityError(f"score matching is not defined on domain '{model.domain.value}'")


@dataclass(frozen=True)
class SmFit:
    """A score matching fit; ``objective_value`` is the fitted mean loss."""

    model: object
    theta_hat: np.ndarray
    objective_value: float
    n_data: int
    method: str

    @property
    def domain(self):
        """Loss variant the fit used: "reals" or "nonneg"."""
        return "reals" if self.model.domain is Domain.REALS else "nonneg"


def _mean_terms(model, data):
    if not model.exponential_family:
        raise CapabilityError(f"{model.name} has no closed-form score matching terms")
    x = model.validate_domain(data)
    gamma, g, const = model.exp_family_terms(x)
    return x, gamma.mean(axis=0), g.mean(axis=0), float(const.mean())


def _quadratic_value(gamma_bar, g_bar, const_bar, theta):
    return float(0.5 * theta @ gamma_bar @ theta + g_bar @ theta + const_bar)


def _solve_normal_equations(gamma_bar, g_bar, name):
    """Solve ``gamma_bar theta = -g_bar`` and certify the residual.

    A rank-deficient quadratic term can slip past the factorization when
    rounding makes it barely positive definite (all-identical data does
    this), so the solution is only accepted when the residual is small
    relative to the right-hand side.
    """
    try:
        theta = solve_spd(gamma_bar, -g_bar, name=name)
    except NotPositiveDefinite as exc:
        raise SingularMatrix(str(exc)) from None
    residual = np.max(np.abs(gamma_bar @ theta + g_bar))
    scale = max(np.max(np.abs(g_bar)), np.finfo(float).tiny)
    if residual > 1e-8 * scale:
        raise SingularMatrix(
            f"{name} is numerically singular: normal-equation residual "
            f"{residual:.3e} exceeds 1e-8 of the right-hand side"
        )
    return theta


def fit_sm_closed_form(model, data):
    """Solve the normal equations ``mean(Gamma) theta = -mean(g)`` directly.

    Raises
    ------
    SingularMatrix
        When the averaged quadratic term is singular (e.g. a degenerate or
        too-small sample).
    """
    x, gamma_bar, g_bar, const_bar = _mean_terms(model, data)
    theta_hat = _solve_normal_equations(gamma_bar, g_bar, "mean quadratic term")
    return SmFit(
        model=model,
        theta_hat=theta_hat,
        objective_value=_quadratic_value(gamma_bar, g_bar, const_bar, theta_hat),
        n_data=x.shape[0],
        method="closed-form-linear",
    )


def _fd_gradient(fun, theta, step=1e-6):
    grad = np.empty_like(theta)
    for i in range(theta.size):
        offset = np.zeros_like(theta)
        offset[i] = step
        grad[i] = (fun(theta + offset) - fun(theta - offset)) / (2.0 * step)
    return grad


def fit_sm_generic(model, data, *, x0=None, grad_tol=1e-7, max_iter=2000):
    """Minimize the empirical mean loss iteratively.

    Uses the exact quadratic when the family provides it (the usual case;
    this route then differs from :func:`fit_sm_closed_form` only in the
    solver) and direct loss evaluations with a finite-difference gradient
    otherwise.
    """
    if not model.x_differentiable:
        raise CapabilityError(f"{model.name} does not support score matching")
    x = model.validate_domain(data)
    if model.exponential_family:
        _, gamma_bar, g_bar, const_bar = _mean_terms(model, x)

        def objective(theta):
            return _quadratic_value(gamma_bar, g_bar, const_bar, theta)

        def gradient(theta):
            return gamma_bar @ theta + g_bar

    else:

        def objective(theta):
            return float(np.mean(sm_loss(x, theta, model)))

        def gradient(theta):
            return _fd_gradient(objective, theta)

    theta0 = np.zeros(model.theta_dim) if x0 is None else np.asarray(x0, dtype=float)
    problem = OptProblem(objective=objective, gradient=gradient, dim=model.theta_dim)
    result = minimize_cg(problem, theta0, grad_tol=grad_tol, max_iter=max_iter)
    if not result.converged:
        message = (
            f"score matching fit for {model.name} stopped ({result.termination_reason}) "
            f"with gradient norm {result.grad_norm:.3e} > {grad_tol:.1e}"
        )
        if result.termination_reason == "line-search-failure":
            raise LineSearchFailure(message, result)
        raise OptimizationFailure(message, result)
    return SmFit(
        model=model,
        theta_hat=result.x_star,
        objective_value=result.f_star,
        n_data=x.shape[0],
        method="cg",
    )


def sm_J_hat(model, theta, data):
    """Mean loss Hessian in theta (the quadratic's ``mean(Gamma)``)."""
    if model.exponential_family:
        _, gamma_bar, _, _ = _mean_terms(model, data)
        return gamma_bar
    x = model.validate_domain(data)
    k = model.theta_dim
    theta = np.asarray(theta, dtype=float)
    step = 1e-4
    hess = np.empty((k, k))
    for i in range(k):
        offset = np.zeros(k)
        offset[i] = step
        grad_hi = _fd_gradient(lambda t: float(np.mean(sm_loss(x, t, model))), theta + offset)
        grad_lo = _fd_gradient(lambda t: float(np.mean(sm_loss(x, t, model))), theta - offset)
        hess[i] = (grad_hi - grad_lo) / (2.0 * step)
    return 0.5 * (hess + hess.T)


def sm_I_hat(model, theta, data):
    """Mean outer product of per-point loss gradients (uncentered)."""
    theta = np.asarray(theta, dtype=float)
    if model.exponential_family:
        x = model.validate_domain(data)
        gamma, g, _ = model.exp_family_terms(x)
        scores = np.einsum("nij,j->ni", gamma, theta) + g
        return scores.T @ scores / x.shape[0]
    x = model.validate_domain(data)
    step = 1e-6
    cols = []
    for i in range(model.theta_dim):
        offset = np.zeros(model.theta_dim)
        offset[i] = step
        hi = sm_loss(x, theta + offset, model)
        lo = sm_loss(x, theta - offset, model)
        cols.append((hi - lo) / (2.0 * step))
    scores = np.column_stack(cols)
    return scores.T @ scores / x.shape[0]


def smic(fit, data):
    """Information criterion ``N * d_hat + trace(I_hat J_hat^{-1})``."""
    model = fit.model
    x = model.validate_domain(data)
    if x.shape[0] != fit.n_data:
        raise ValueError("data sample count does not match the fit")
    i_mat = sm_I_hat(model, fit.theta_hat, x)
    j_mat = sm_J_hat(model, fit.theta_hat, x)
    return float(fit.n_data * fit.objective_value + trace_product_inv(i_mat, j_mat))


def sm_loocv(model, data, *, grad_tol=1e-7, max_iter=2000, full_fit=None):
    """Leave-one-out total of held-out losses.

    For quadratic families each fold re-solves the downdated normal
    equations (drop one point's Gamma and g from the accumulated sums); for
    other families each fold is a warm-started iterative refit and
    ``full_fit`` (when given) supplies the warm start without refitting.

    Raises
    ------
    EmptyFold
        When fewer than two points are available.
    SingularMatrix
        When some fold's quadratic term is singular.
    """
    x = model.validate_domain(data)
    n = x.shape[0]
    if n < 2:
        raise EmptyFold("leave-one-out needs at least two data points")
    total = 0.0
    if model.exponential_family:
        gamma, g, _ = model.exp_family_terms(x)
        gamma_sum = gamma.sum(axis=0)
        g_sum = g.sum(axis=0)
        for t in range(n):
            theta_fold = _solve_normal_equations(
                gamma_sum - gamma[t], g_sum - g[t], f"fold {t} quadratic term"
            )
            total += float(sm_loss(x[t : t + 1], theta_fold, model)[0])
        return total
    full = full_fit
    if full is None:
        full = fit_sm_generic(model, x, grad_tol=grad_tol, max_iter=max_iter)
    for t in range(n):
        fold = fit_sm_generic(
            model,
            np.delete(x, t, axis=0),
            x0=full.theta_hat,
            grad_tol=grad_tol,
            max_iter=max_iter,
        )
        total += float(sm_loss(x[t : t + 1], fold.theta_hat, model)[0])
    return total
