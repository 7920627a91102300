"""Deterministic nonlinear conjugate gradient minimization.

Polak-Ribiere-plus directions (beta clipped at zero) with a strong Wolfe line
search (bracket + bisection zoom, c1 = 1e-4, c2 = 0.1) and a periodic restart
to steepest descent.  Steps whose objective change falls below float
resolution are accepted through a slope-band test instead of the raw value
comparisons, so searches do not stall right next to an optimum; when the
curvature condition is unattainable because the one-dimensional minimizer
sits on a feasibility boundary, the best sufficient-decrease point is
accepted instead.  The
implementation uses no randomness and no platform-dependent reductions, so a
given problem and start point always produce the same iterates bit for bit.

Objectives may return ``+inf`` to encode infeasible regions (the line search
backs off); ``NaN`` anywhere, or a non-finite value at the start point, is an
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import NonFiniteObjective

__all__ = [
    "OptProblem",
    "OptResult",
    "minimize_cg",
    "minimize_damped_newton",
    "check_gradient",
]

#: Sufficient-decrease (Armijo) constant.
C1 = 1e-4
#: Curvature constant; 0.1 is the conventional pairing for conjugate gradient.
C2 = 0.1

_ALPHA_MAX = 1e10
_MAX_BRACKET = 40
_MAX_ZOOM = 64
#: Relative objective change below which two values are treated as
#: float-indistinguishable and the slope-band (approximate Wolfe) acceptance
#: applies; without it, line searches near an optimum stall on comparisons
#: whose true differences are unrepresentable.
_EPS_F = 1e-12


def _approx_wolfe(f0, slope0, phi_alpha, slope_alpha):
    """Slope-band acceptance for steps whose objective change is below float
    resolution: requires ``(2 C1 - 1) slope0 >= slope_alpha >= C2 slope0``."""
    if abs(phi_alpha - f0) > _EPS_F * max(1.0, abs(f0)):
        return False
    return (2.0 * C1 - 1.0) * slope0 >= slope_alpha >= C2 * slope0


@dataclass(frozen=True)
class OptProblem:
    """A smooth unconstrained minimization problem.

    ``objective`` maps an ``(dim,)`` point to a float (``+inf`` allowed as an
    infeasibility barrier); ``gradient`` maps the same point to an ``(dim,)``
    array.  The gradient is only evaluated at points where the objective is
    finite.
    """

    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    dim: int


@dataclass(frozen=True)
class OptResult:
    """Terminal state of a :func:`minimize_cg` run.

    ``termination_reason`` is one of ``"grad-tol"``, ``"max-iter"``,
    ``"line-search-failure"``; ``converged`` is true exactly when the
    infinity norm of the gradient at ``x_star`` is at or below the requested
    tolerance.
    """

    x_star: np.ndarray
    f_star: float
    grad_norm: float
    iterations: int
    converged: bool
    termination_reason: str


def _eval_objective(problem, x):
    value = float(problem.objective(x))
    if np.isnan(value):
        raise NonFiniteObjective("objective returned NaN")
    return value


def _eval_gradient(problem, x):
    grad = np.asarray(problem.gradient(x), dtype=float).ravel()
    if grad.shape != (x.size,):
        raise ValueError(f"gradient has shape {grad.shape}, expected ({x.size},)")
    if np.any(np.isnan(grad)) or np.any(np.isinf(grad)):
        raise NonFiniteObjective("gradient returned non-finite entries")
    return grad


def check_gradient(problem, x, step=1e-5):
    """Largest relative mismatch between analytic and central-difference gradient.

    For each coordinate the analytic entry is compared against a symmetric
    difference quotient of the objective; the return value is the maximum of
    ``|analytic - numeric| / max(|numeric|, 1e-12)`` over coordinates.  An
    exactly linear objective yields roundoff-level output; a gradient off by
    1% yields about 0.01.
    """
    x = np.asarray(x, dtype=float).ravel()
    analytic = _eval_gradient(problem, x)
    numeric = np.empty_like(analytic)
    for i in range(x.size):
        offset = np.zeros_like(x)
        offset[i] = step
        hi = _eval_objective(problem, x + offset)
        lo = _eval_objective(problem, x - offset)
        numeric[i] = (hi - lo) / (2.0 * step)
    denom = np.maximum(np.abs(numeric), 1e-12)
    return float(np.max(np.abs(analytic - numeric) / denom))


def minimize_cg(
    problem: OptProblem,
    x0,
    *,
    grad_tol: float = 1e-7,
    max_iter: int = 2000,
    restart_every: Optional[int] = None,
    callback: Optional[Callable[[np.ndarray, float], None]] = None,
) -> OptResult:
    """Minimize ``problem`` starting from ``x0``.

    Parameters
    ----------
    grad_tol : float
        Convergence is declared when ``max(abs(gradient)) <= grad_tol``.
    max_iter : int
        Maximum number of accepted steps.
    restart_every : int, optional
        Reset to steepest descent every this many steps; defaults to
        ``max(dim, 50)``.  Restarting exactly every ``dim`` steps discards
        conjugacy too eagerly on small, ill-conditioned problems.
    callback : callable, optional
        Called as ``callback(x, f)`` after each accepted step.

    Returns
    -------
    OptResult
        Always returned (line-search stalls are reported via
        ``termination_reason``, not raised); only NaN objectives/gradients or
        a non-finite start raise :class:`NonFiniteObjective`.
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    if x.size != problem.dim:
        raise ValueError(f"start point has size {x.size}, expected {problem.dim}")
    if restart_every is None:
        restart_every = max(problem.dim, 50)
    if restart_every < 1:
        raise ValueError("restart_every must be positive")

    f = _eval_objective(problem, x)
    if np.isinf(f):
        raise NonFiniteObjective("objective is not finite at the start point")
    g = _eval_gradient(problem, x)
    direction = -g
    since_restart = 0
    iterations = 0
    reason = "max-iter"

    while iterations < max_iter:
        if float(np.max(np.abs(g), initial=0.0)) <= grad_tol:
            reason = "grad-tol"
            break
        if float(direction @ g) >= 0.0:
            # Conjugacy produced a non-descent direction; restart.
            direction = -g
            since_restart = 0
        step = _wolfe_search(problem, x, f, g, direction)
        if step is None and since_restart != 0:
            direction = -g
            since_restart = 0
            step = _wolfe_search(problem, x, f, g, direction)
        if step is None:
            reason = "line-search-failure"
            break
        alpha, f_new, g_new = step
        x = x + alpha * direction
        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        since_restart += 1
        if since_restart >= restart_every:
            beta = 0.0
            since_restart = 0
        direction = -g_new + beta * direction
        f, g = f_new, g_new
        iterations += 1
        if callback is not None:
            callback(x.copy(), f)

    grad_norm = float(np.max(np.abs(g), initial=0.0))
    converged = grad_norm <= grad_tol
    if converged:
        reason = "grad-tol"
    return OptResult(
        x_star=x,
        f_star=f,
        grad_norm=grad_norm,
        iterations=iterations,
        converged=converged,
        termination_reason=reason,
    )


def _gradient_hessian(problem, x):
    """Central-difference Hessian from the analytic gradient, symmetrized."""
    dim = x.size
    steps = 1e-6 * (1.0 + np.abs(x))
    hess = np.empty((dim, dim))
    for k in range(dim):
        x_plus = x.copy()
        x_plus[k] += steps[k]
        x_minus = x.copy()
        x_minus[k] -= steps[k]
        hess[:, k] = (_eval_gradient(problem, x_plus) - _eval_gradient(problem, x_minus)) / (
            2.0 * steps[k]
        )
    return 0.5 * (hess + hess.T)


def minimize_damped_newton(
    problem: OptProblem,
    x0,
    *,
    grad_tol: float = 1e-7,
    max_iter: int = 200,
    damping0: float = 1e-4,
) -> OptResult:
    """Levenberg-damped Newton with a finite-difference Hessian.

    Built for low-dimensional objectives whose curvature is nearly singular
    along an overparametrized ridge, where conjugate gradient needs hundreds
    of crawling iterations.  Each step rebuilds the Hessian from ``2 * dim``
    gradient evaluations and solves ``(H + lambda I) step = g``, growing
    ``lambda`` until the step decreases the objective (or, at float
    resolution, the gradient norm) and shrinking it after every success.

    Interface and determinism guarantees match :func:`minimize_cg`; the same
    ``+inf`` infeasibility convention applies, handled by growing the
    damping until the step stays feasible.
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    if x.size != problem.dim:
        raise ValueError(f"start point has size {x.size}, expected {problem.dim}")
    f = _eval_objective(problem, x)
    if np.isinf(f):
        raise NonFiniteObjective("objective is not finite at the start point")
    g = _eval_gradient(problem, x)
    identity = np.eye(x.size)
    lam = float(damping0)
    iterations = 0
    reason = "max-iter"
    while iterations < max_iter:
        gnorm = float(np.max(np.abs(g), initial=0.0))
        if gnorm <= grad_tol:
            reason = "grad-tol"
            break
        hess = _gradient_hessian(problem, x)
        scale = max(float(np.trace(hess)) / x.size, 1e-12)
        for _ in range(24):
            try:
                step = np.linalg.solve(hess + (lam * scale) * identity, g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_try = x - step
            f_try = _eval_objective(problem, x_try)
            if f_try < f:
                x, f = x_try, f_try
                g = _eval_gradient(problem, x)
                lam = max(lam / 3.0, 1e-12)
                break
            if np.isfinite(f_try) and abs(f_try - f) <= _EPS_F * max(1.0, abs(f)):
                # Objective change below float resolution: accept on a
                # strict gradient-norm decrease instead.
                g_try = _eval_gradient(problem, x_try)
                if float(np.max(np.abs(g_try))) < 0.9 * gnorm:
                    x, f, g = x_try, f_try, g_try
                    lam = max(lam / 3.0, 1e-12)
                    break
            lam *= 10.0
        else:
            reason = "line-search-failure"
            break
        iterations += 1
    grad_norm = float(np.max(np.abs(g), initial=0.0))
    converged = grad_norm <= grad_tol
    if converged:
        reason = "grad-tol"
    return OptResult(
        x_star=x,
        f_star=f,
        grad_norm=grad_norm,
        iterations=iterations,
        converged=converged,
        termination_reason=reason,
    )


def _wolfe_search(problem, x, f0, g0, direction):
    """Strong Wolfe step along ``direction`` or ``None`` when the search fails.

    Returns ``(alpha, f(x + alpha d), grad(x + alpha d))`` satisfying both the
    sufficient-decrease and the strong curvature condition.
    """
    slope0 = float(g0 @ direction)
    if slope0 >= 0.0:
        return None

    def phi(alpha):
        return _eval_objective(problem, x + alpha * direction)

    def phi_with_grad(alpha):
        grad = _eval_gradient(problem, x + alpha * direction)
        return grad, float(grad @ direction)

    alpha_prev, phi_prev = 0.0, f0
    alpha = 1.0
    for attempt in range(_MAX_BRACKET):
        phi_alpha = phi(alpha)
        armijo_fail = phi_alpha > f0 + C1 * alpha * slope0
        if np.isinf(phi_alpha) or armijo_fail or (attempt > 0 and phi_alpha >= phi_prev):
            return _zoom(phi, phi_with_grad, f0, slope0, alpha_prev, phi_prev, alpha)
        grad_alpha, slope_alpha = phi_with_grad(alpha)
        if abs(slope_alpha) <= -C2 * slope0 or _approx_wolfe(f0, slope0, phi_alpha, slope_alpha):
            return alpha, phi_alpha, grad_alpha
        if slope_alpha >= 0.0:
            return _zoom(phi, phi_with_grad, f0, slope0, alpha, phi_alpha, alpha_prev)
        alpha_prev, phi_prev = alpha, phi_alpha
        alpha = 2.0 * alpha
        if alpha > _ALPHA_MAX:
            return None
    return None


def _zoom(phi, phi_with_grad, f0, slope0, alpha_lo, phi_lo, alpha_hi):
    """Bisection zoom on a bracket expected to contain a strong Wolfe point.

    ``alpha_lo`` always carries the lowest objective value seen that satisfies
    sufficient decrease; ``alpha_hi`` bounds the other end (its objective may
    be worse or infinite).  When the curvature condition is unattainable --
    the one-dimensional minimizer sits on a feasibility boundary, so the
    slope never flattens -- the best sufficient-decrease point is returned
    instead of failing, and the caller picks a fresh direction from there.
    """
    for _ in range(_MAX_ZOOM):
        if abs(alpha_hi - alpha_lo) <= 1e-14 * max(1.0, abs(alpha_lo), abs(alpha_hi)):
            return _zoom_fallback(phi_with_grad, f0, alpha_lo, phi_lo)
        alpha = 0.5 * (alpha_lo + alpha_hi)
        phi_alpha = phi(alpha)
        if np.isinf(phi_alpha):
            alpha_hi = alpha
            continue
        near_flat = abs(phi_alpha - f0) <= _EPS_F * max(1.0, abs(f0))
        if phi_alpha > f0 + C1 * alpha * slope0 or phi_alpha >= phi_lo:
            if near_flat:
                grad_alpha, slope_alpha = phi_with_grad(alpha)
                if _approx_wolfe(f0, slope0, phi_alpha, slope_alpha):
                    return alpha, phi_alpha, grad_alpha
            alpha_hi = alpha
        else:
            grad_alpha, slope_alpha = phi_with_grad(alpha)
            if abs(slope_alpha) <= -C2 * slope0 or _approx_wolfe(
                f0, slope0, phi_alpha, slope_alpha
            ):
                return alpha, phi_alpha, grad_alpha
            if slope_alpha * (alpha_hi - alpha_lo) >= 0.0:
                alpha_hi = alpha_lo
            alpha_lo, phi_lo = alpha, phi_alpha
    return _zoom_fallback(phi_with_grad, f0, alpha_lo, phi_lo)


def _zoom_fallback(phi_with_grad, f0, alpha_lo, phi_lo):
    """Accept the best sufficient-decrease point when no Wolfe point exists.

    Returns ``None`` when the zoom made no strict progress, which keeps
    genuine stalls reported as failures.
    """
    if alpha_lo <= 0.0 or not phi_lo < f0:
        return None
    grad_alpha, _ = phi_with_grad(alpha_lo)
    return alpha_lo, phi_lo, grad_alpha
