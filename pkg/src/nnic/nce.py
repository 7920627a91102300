"""Noise contrastive estimation and its information criteria.

An unnormalized model ``p(x | theta) = exp(log_unnorm(x, theta) + c)`` is fit
by logistic discrimination of N data points against M draws from a known
noise density n(y).  Writing the full parameter ``xi = (theta, c_1..c_K)``
(one log normalizing constant per mixture component) and

    eta(z) = log(N / M) + log p(z | xi) - log n(z),

the per-point losses are ``rho_d(x) = softplus(-eta(x))`` for data and
``rho_n(y) = softplus(eta(y))`` for noise, and the fitted objective is

    d_hat(xi) = (1/N) [ sum_t rho_d(x_t) + sum_t rho_n(y_t) ].

Two information criteria estimate the out-of-sample value of ``N * d_hat``:
the sandwich form ``N * d_hat + trace(I_hat J_hat^{-1})`` and the
classification-probability form ``N * d_hat + m - mean_b`` where
``mean_b`` averages ``b_hat(z) = p n (N+M)^2 / ((N p + M n)^2)`` over all
N + M points and m counts the parameters.  A leave-one-out analogue refits
with one data and one noise point held out per fold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .exceptions import EmptyFold, LineSearchFailure, NnicError, OptimizationFailure
from .linalg import spd_solver, trace_product_inv
from .noise import NoiseDistribution, require_positive_density
from .optim import OptProblem, OptResult, minimize_cg, minimize_damped_newton

__all__ = [
    "NceFit",
    "split_xi",
    "log_p_xi",
    "grad_xi",
    "hess_xi",
    "rho_d",
    "rho_n",
    "nce_objective",
    "nce_gradient",
    "fit_nce",
    "estimate_I_hat",
    "estimate_J_hat",
    "b_hat",
    "ncic1",
    "ncic2",
    "nce_loocv",
]


def _softplus(t):
    return np.logaddexp(0.0, t)


@dataclass(frozen=True)
class NceFit:
    """A converged contrastive fit.

    ``theta_hat`` and ``c_hat`` are in natural (reported) coordinates;
    ``objective_value`` is ``d_hat`` at the optimum; ``opt`` carries the
    optimizer diagnostics.
    """

    model: object
    theta_hat: np.ndarray
    c_hat: np.ndarray
    objective_value: float
    n_data: int
    n_noise: int
    noise: NoiseDistribution
    opt: OptResult

    @property
    def xi_hat(self):
        return np.concatenate([self.theta_hat, self.c_hat])

    @property
    def m(self):
        """Parameter count entering the criteria (theta plus one c per component)."""
        return self.theta_hat.size + self.c_hat.size


def split_xi(model, xi):
    """Split a stacked ``xi`` into (theta, c) with shape validation."""
    xi = np.asarray(xi, dtype=float).ravel()
    expected = model.theta_dim + model.n_components
    if xi.size != expected:
        raise ValueError(f"xi must have length {expected}, got {xi.size}")
    return xi[: model.theta_dim], xi[model.theta_dim :]


def log_p_xi(model, x, xi):
    """``log p(x | xi)`` including the normalizing constant(s), shape (n,)."""
    theta, c = split_xi(model, xi)
    comp = model.comp_log_unnorm(x, theta) + c[None, :]
    if model.n_components == 1:
        return comp[:, 0]
    return logsumexp(comp, axis=1)


def _component_weights(model, x, theta, c):
    comp = model.comp_log_unnorm(x, theta) + c[None, :]
    return np.exp(comp - logsumexp(comp, axis=1, keepdims=True))


def grad_xi(model, x, xi):
    """Gradient of ``log p(x | xi)`` in xi, shape (n, m)."""
    theta, c = split_xi(model, xi)
    n_comp = model.n_components
    if n_comp == 1:
        grads = model.grad_theta(x, theta)
        return np.hstack([grads, np.ones((grads.shape[0], 1))])
    weights = _component_weights(model, x, theta, c)
    grads = model.comp_grad_theta(x, theta)
    theta_part = (weights[:, :, None] * grads).reshape(weights.shape[0], model.theta_dim)
    return np.hstack([theta_part, weights])


def hess_xi(model, x, xi):
    """Hessian of ``log p(x | xi)`` in xi, shape (n, m, m)."""
    theta, c = split_xi(model, xi)
    n_comp = model.n_components
    m = model.theta_dim + n_comp
    if n_comp == 1:
        x = model.validate_domain(x)
        hess = np.zeros((x.shape[0], m, m))
        if not model.theta_linear:
            hess[:, : model.theta_dim, : model.theta_dim] = model.hess_theta(x, theta)
        return hess
    if not model.theta_linear:
        raise NotImplementedError("mixtures of curved components are not supported")
    weights = _component_weights(model, x, theta, c)
    grads = model.comp_grad_theta(x, theta)
    n = weights.shape[0]
    p = model.component_dim
    # Per-component xi-gradients v_k = (0, .., dtheta_k, .., 0 | e_k).
    v = np.zeros((n, n_comp, m))
    for k in range(n_comp):
        v[:, k, k * p : (k + 1) * p] = grads[:, k, :]
        v[:, k, model.theta_dim + k] = 1.0
    vbar = np.einsum("nk,nki->ni", weights, v)
    hess = np.einsum("nk,nki,nkj->nij", weights, v, v)
    hess -= np.einsum("ni,nj->nij", vbar, vbar)
    return hess


def _log_ratio(model, noise, x, xi, n_data, n_noise, log_n=None):
    if log_n is None:
        log_n = noise.log_density(x)
    require_positive_density(log_n)
    return np.log(n_data / n_noise) + log_p_xi(model, x, xi) - log_n


def rho_d(x, xi, n_data, n_noise, model, noise):
    """Per-point data loss ``-log sigma(eta)``, shape (n,). Always >= 0."""
    x = model.validate_domain(x)
    return _softplus(-_log_ratio(model, noise, x, xi, n_data, n_noise))


def rho_n(y, xi, n_data, n_noise, model, noise):
    """Per-point noise loss ``-log(1 - sigma(eta))``, shape (n,). Always >= 0."""
    y = model.validate_domain(y)
    return _softplus(_log_ratio(model, noise, y, xi, n_data, n_noise))


def nce_objective(data, noise_samples, xi, model, noise):
    """``d_hat(xi)``: both stratum sums divided by the data count N."""
    x = model.validate_domain(data)
    y = model.validate_domain(noise_samples)
    n_data, n_noise = x.shape[0], y.shape[0]
    total = np.sum(rho_d(x, xi, n_data, n_noise, model, noise))
    total += np.sum(rho_n(y, xi, n_data, n_noise, model, noise))
    return float(total / n_data)


def nce_gradient(data, noise_samples, xi, model, noise):
    """Gradient of :func:`nce_objective` in xi, shape (m,)."""
    x = model.validate_domain(data)
    y = model.validate_domain(noise_samples)
    n_data, n_noise = x.shape[0], y.shape[0]
    sig_x = expit(_log_ratio(model, noise, x, xi, n_data, n_noise))
    sig_y = expit(_log_ratio(model, noise, y, xi, n_data, n_noise))
    grad = -(1.0 - sig_x) @ grad_xi(model, x, xi)
    grad += sig_y @ grad_xi(model, y, xi)
    return grad / n_data


class _ContrastiveEngine:
    """Preconditioned contrastive objective over fixed data/noise arrays.

    Builds everything that does not depend on the parameter value once --
    sufficient-statistic features, their standardization, and the noise
    log-densities -- so repeated fits over row subsets (leave-one-out folds)
    skip the per-fit setup entirely.
    """

    def __init__(self, model, x_mat, y_mat, log_n_x, log_n_y):
        self.model = model
        self.x_mat = x_mat
        self.y_mat = y_mat
        self.log_n_x = log_n_x
        self.log_n_y = log_n_y
        self.tdim = model.theta_dim
        self.n_comp = model.n_components
        self.p = model.component_dim
        self.dim = self.tdim + self.n_comp
        self.linear = model.theta_linear
        if self.linear:
            zeros = np.zeros(self.tdim)
            feat_x = model.comp_grad_theta(x_mat, zeros)  # (N, K, p), theta-free
            feat_y = model.comp_grad_theta(y_mat, zeros)
            self.base_x = model.comp_log_unnorm(x_mat, zeros)  # (N, K)
            self.base_y = model.comp_log_unnorm(y_mat, zeros)
            # Standardized features precondition the search: raw moments such
            # as x^4 give the objective wildly uneven curvature, and the
            # optimizer would crawl.  The affine change of coordinates is
            # undone exactly on unpacking, so fitted parameters and criteria
            # are unaffected.
            pooled = np.concatenate([feat_x, feat_y], axis=0)
            feat_mean = pooled.mean(axis=0)  # (K, p)
            feat_scale = pooled.std(axis=0)
            informative = feat_scale > 1e-10 * (1.0 + np.abs(feat_mean))
            self.feat_scale = np.where(informative, feat_scale, 1.0)
            self.feat_mean = np.where(informative, feat_mean, 0.0)
            self.feat_x = (feat_x - self.feat_mean) / self.feat_scale
            self.feat_y = (feat_y - self.feat_mean) / self.feat_scale

    def pack(self, theta, c):
        """Map natural parameters to the optimizer's coordinates."""
        theta = np.asarray(theta, dtype=float).ravel()
        c = np.asarray(c, dtype=float).ravel()
        if self.linear:
            blocks = theta.reshape(self.n_comp, self.p)
            return np.concatenate(
                [
                    (blocks * self.feat_scale).ravel(),
                    c + np.einsum("kp,kp->k", blocks, self.feat_mean),
                ]
            )
        return np.concatenate([self.model.to_internal(theta), c])

    def unpack(self, z):
        """Map optimizer coordinates back to natural ``(theta, c)``."""
        if self.linear:
            blocks = z[: self.tdim].reshape(self.n_comp, self.p) / self.feat_scale
            c = z[self.tdim :] - np.einsum("kp,kp->k", blocks, self.feat_mean)
            return blocks.ravel(), c
        return self.model.from_internal(z[: self.tdim]), z[self.tdim :]

    def pointwise_grads(self, z, log_nu=0.0):
        """Per-row contributions to the unnormalized objective gradient.

        Returns ``(g_x, g_y)`` with shapes (N, dim) and (M, dim); the
        gradient of the objective restricted to any row subset, evaluated at
        this same ``z`` and the same ``log_nu``, is the sum of the selected
        rows divided by the subset's data count.  Used to place leave-one-out
        warm starts with a single Newton step.
        """
        model, tdim, n_comp, linear = self.model, self.tdim, self.n_comp, self.linear
        theta, c = self.unpack(z)
        if linear:
            blocks = z[:tdim].reshape(n_comp, self.p)
            comp_x = np.einsum("nkp,kp->nk", self.feat_x, blocks) + self.base_x + z[tdim:][None, :]
            comp_y = np.einsum("nkp,kp->nk", self.feat_y, blocks) + self.base_y + z[tdim:][None, :]
            gx, gy = self.feat_x, self.feat_y
        else:
            comp_x = model.comp_log_unnorm(self.x_mat, theta) + c[None, :]
            comp_y = model.comp_log_unnorm(self.y_mat, theta) + c[None, :]
            gx = model.comp_grad_theta(self.x_mat, theta)
            gy = model.comp_grad_theta(self.y_mat, theta)
        if n_comp == 1:
            h_x, h_y = comp_x[:, 0], comp_y[:, 0]
            resp_x = np.ones_like(comp_x)
            resp_y = np.ones_like(comp_y)
        else:
            h_x = logsumexp(comp_x, axis=1)
            h_y = logsumexp(comp_y, axis=1)
            resp_x = np.exp(comp_x - h_x[:, None])
            resp_y = np.exp(comp_y - h_y[:, None])
        wt_x = -(1.0 - expit(log_nu + h_x - self.log_n_x))
        wt_y = expit(log_nu + h_y - self.log_n_y)
        wr_x = wt_x[:, None] * resp_x
        wr_y = wt_y[:, None] * resp_y
        g_x = np.concatenate([np.einsum("nk,nkp->nkp", wr_x, gx).reshape(-1, tdim), wr_x], axis=1)
        g_y = np.concatenate([np.einsum("nk,nkp->nkp", wr_y, gy).reshape(-1, tdim), wr_y], axis=1)
        if not linear:
            scale = model.internal_scale(z[:tdim])
            g_x[:, :tdim] *= scale[None, :]
            g_y[:, :tdim] *= scale[None, :]
        return g_x, g_y

    def make_problem(self, x_rows=None, y_rows=None):
        """Objective/gradient over row subsets; ``None`` keeps every row."""
        model, tdim, n_comp, linear = self.model, self.tdim, self.n_comp, self.linear
        p = self.p
        if linear:
            feat_x = self.feat_x if x_rows is None else self.feat_x[x_rows]
            feat_y = self.feat_y if y_rows is None else self.feat_y[y_rows]
            base_x = self.base_x if x_rows is None else self.base_x[x_rows]
            base_y = self.base_y if y_rows is None else self.base_y[y_rows]
        else:
            x_mat = self.x_mat if x_rows is None else self.x_mat[x_rows]
            y_mat = self.y_mat if y_rows is None else self.y_mat[y_rows]
        log_n_x = self.log_n_x if x_rows is None else self.log_n_x[x_rows]
        log_n_y = self.log_n_y if y_rows is None else self.log_n_y[y_rows]
        n_data = log_n_x.shape[0]
        m_noise = log_n_y.shape[0]
        log_nu = np.log(n_data / m_noise)
        unpack = self.unpack

        # The line search evaluates f and g at the same points back to back;
        # a one-slot cache shares the forward pass between them.
        cache = {"key": None}

        def forward(z):
            key = z.tobytes()
            if cache["key"] == key:
                return cache["state"]
            theta, c = unpack(z)
            if not model.theta_ok(theta):
                state = None
            else:
                if linear:
                    blocks = z[:tdim].reshape(n_comp, p)
                    comp_x = np.einsum("nkp,kp->nk", feat_x, blocks) + base_x + z[tdim:][None, :]
                    comp_y = np.einsum("nkp,kp->nk", feat_y, blocks) + base_y + z[tdim:][None, :]
                else:
                    comp_x = model.comp_log_unnorm(x_mat, theta) + c[None, :]
                    comp_y = model.comp_log_unnorm(y_mat, theta) + c[None, :]
                if n_comp == 1:
                    h_x, h_y = comp_x[:, 0], comp_y[:, 0]
                else:
                    h_x = logsumexp(comp_x, axis=1)
                    h_y = logsumexp(comp_y, axis=1)
                eta_x = log_nu + h_x - log_n_x
                eta_y = log_nu + h_y - log_n_y
                value = (np.sum(_softplus(-eta_x)) + np.sum(_softplus(eta_y))) / n_data
                state = (theta, c, comp_x, comp_y, eta_x, eta_y, float(value))
            cache["key"] = key
            cache["state"] = state
            return state

        def objective(z):
            state = forward(z)
            return np.inf if state is None else state[6]

        def gradient(z):
            state = forward(z)
            if state is None:
                raise AssertionError("gradient requested at an infeasible point")
            theta, c, comp_x, comp_y, eta_x, eta_y, _ = state
            wt_x = -(1.0 - expit(eta_x))  # multiplies d(log p)/d(xi) at data
            wt_y = expit(eta_y)
            if n_comp > 1:
                resp_x = np.exp(comp_x - logsumexp(comp_x, axis=1, keepdims=True))
                resp_y = np.exp(comp_y - logsumexp(comp_y, axis=1, keepdims=True))
            else:
                resp_x = np.ones_like(comp_x)
                resp_y = np.ones_like(comp_y)
            if linear:
                gx, gy = feat_x, feat_y
            else:
                gx = model.comp_grad_theta(x_mat, theta)
                gy = model.comp_grad_theta(y_mat, theta)
            grad_theta = np.einsum("n,nk,nkp->kp", wt_x, resp_x, gx)
            grad_theta += np.einsum("n,nk,nkp->kp", wt_y, resp_y, gy)
            grad_c = wt_x @ resp_x + wt_y @ resp_y
            grad = np.concatenate([grad_theta.ravel(), grad_c]) / n_data
            if linear:
                # Features already carry the standardization, so this is the
                # gradient in the preconditioned coordinates.
                return grad
            grad[:tdim] *= model.internal_scale(z[:tdim])
            return grad

        return OptProblem(objective=objective, gradient=gradient, dim=self.dim)


def _numeric_hessian(gradient, z):
    """Central-difference Hessian of a gradient callable, symmetrized."""
    dim = z.size
    steps = 1e-6 * (1.0 + np.abs(z))
    hess = np.empty((dim, dim))
    for k in range(dim):
        z_plus = z.copy()
        z_plus[k] += steps[k]
        z_minus = z.copy()
        z_minus[k] -= steps[k]
        hess[:, k] = (gradient(z_plus) - gradient(z_minus)) / (2.0 * steps[k])
    return 0.5 * (hess + hess.T)


def _require_converged(result, model, grad_tol):
    if result.converged:
        return
    message = (
        f"contrastive fit for {model.name} stopped ({result.termination_reason}) "
        f"with gradient norm {result.grad_norm:.3e} > {grad_tol:.1e}"
    )
    if result.termination_reason == "line-search-failure":
        raise LineSearchFailure(message, result)
    raise OptimizationFailure(message, result)


def fit_nce(
    model,
    data,
    noise,
    noise_samples=None,
    *,
    n_noise=None,
    rng=None,
    x0=None,
    grad_tol=1e-7,
    max_iter=2000,
    restart_every=None,
    method="cg",
):
    """Fit ``xi = (theta, c)`` by minimizing the contrastive objective.

    Parameters
    ----------
    model : ModelFamily
    data : array_like, shape (N, d)
    noise : NoiseDistribution
        Must dominate the model on its domain.
    noise_samples : array_like, shape (M, d), optional
        Pass pre-drawn noise for reproducibility across candidates; otherwise
        supply ``n_noise`` and ``rng`` and the fit draws its own.
    x0 : array_like, shape (m,), optional
        Natural-coordinate start; defaults to the family's deterministic
        start (theta0 = 0 / identity pattern / data-moment map, c0 = 0 or the
        family's supplied constant).
    method : {"cg", "newton"}
        ``"cg"`` is the nonlinear-conjugate-gradient default; ``"newton"``
        is damped Newton, worthwhile for low-dimensional objectives whose
        valley is nearly singular (overfitted mixtures).

    Raises
    ------
    LineSearchFailure, OptimizationFailure
        When the optimizer terminates without meeting ``grad_tol``.
    """
    x_mat = model.validate_domain(data)
    if noise_samples is None:
        if n_noise is None or rng is None:
            raise ValueError("provide noise_samples, or n_noise and rng to draw them")
        noise_samples = noise.sample(int(n_noise), rng)
    y_mat = model.validate_domain(noise_samples)
    n_data, m_noise = x_mat.shape[0], y_mat.shape[0]

    log_n_x = require_positive_density(noise.log_density(x_mat))
    log_n_y = require_positive_density(noise.log_density(y_mat))

    if x0 is None:
        theta0, c0 = model.default_nce_start(x_mat)
    else:
        theta0, c0 = split_xi(model, x0)

    engine = _ContrastiveEngine(model, x_mat, y_mat, log_n_x, log_n_y)
    problem = engine.make_problem()
    if method == "cg":
        result = minimize_cg(
            problem, engine.pack(theta0, c0), grad_tol=grad_tol, max_iter=max_iter,
            restart_every=restart_every,
        )
    elif method == "newton":
        result = minimize_damped_newton(
            problem, engine.pack(theta0, c0), grad_tol=grad_tol, max_iter=max_iter
        )
    else:
        raise ValueError(f"unknown fit method {method!r}; expected 'cg' or 'newton'")
    _require_converged(result, model, grad_tol)

    theta_hat, c_hat = engine.unpack(result.x_star)
    theta_hat, c_hat = model.canonical_params(theta_hat, c_hat)
    return NceFit(
        model=model,
        theta_hat=np.asarray(theta_hat, dtype=float),
        c_hat=np.asarray(c_hat, dtype=float).copy(),
        objective_value=result.f_star,
        n_data=n_data,
        n_noise=m_noise,
        noise=noise,
        opt=result,
    )


def _fit_arrays(fit, data, noise_samples):
    x = fit.model.validate_domain(data)
    y = fit.model.validate_domain(noise_samples)
    if x.shape[0] != fit.n_data or y.shape[0] != fit.n_noise:
        raise ValueError("data/noise sample counts do not match the fit")
    return x, y


def estimate_J_hat(fit, data, noise_samples):
    """Curvature matrix: both strata's rho-Hessians summed, divided by N + M."""
    x, y = _fit_arrays(fit, data, noise_samples)
    model, xi = fit.model, fit.xi_hat
    n_data, m_noise = fit.n_data, fit.n_noise
    eta_x = _log_ratio(model, fit.noise, x, xi, n_data, m_noise)
    eta_y = _log_ratio(model, fit.noise, y, xi, n_data, m_noise)
    sig_x, sig_y = expit(eta_x), expit(eta_y)
    v_x = grad_xi(model, x, xi)
    v_y = grad_xi(model, y, xi)
    j_mat = np.einsum("n,ni,nj->ij", sig_x * (1.0 - sig_x), v_x, v_x)
    j_mat += np.einsum("n,ni,nj->ij", sig_y * (1.0 - sig_y), v_y, v_y)
    if not (model.theta_linear and model.n_components == 1):
        j_mat -= np.einsum("n,nij->ij", 1.0 - sig_x, hess_xi(model, x, xi))
        j_mat += np.einsum("n,nij->ij", sig_y, hess_xi(model, y, xi))
    j_mat /= n_data + m_noise
    return 0.5 * (j_mat + j_mat.T)


def estimate_I_hat(fit, data, noise_samples):
    """Variance matrix: per-stratum centered outer products, divided by N + M."""
    x, y = _fit_arrays(fit, data, noise_samples)
    model, xi = fit.model, fit.xi_hat
    n_data, m_noise = fit.n_data, fit.n_noise
    eta_x = _log_ratio(model, fit.noise, x, xi, n_data, m_noise)
    eta_y = _log_ratio(model, fit.noise, y, xi, n_data, m_noise)
    g_x = -(1.0 - expit(eta_x))[:, None] * grad_xi(model, x, xi)
    g_y = expit(eta_y)[:, None] * grad_xi(model, y, xi)
    g_x = g_x - g_x.mean(axis=0)
    g_y = g_y - g_y.mean(axis=0)
    i_mat = (g_x.T @ g_x + g_y.T @ g_y) / (n_data + m_noise)
    return 0.5 * (i_mat + i_mat.T)


def ncic1(fit, data, noise_samples):
    """Sandwich-penalty criterion: ``N d_hat + trace(I_hat J_hat^{-1})``."""
    d_hat = nce_objective(data, noise_samples, fit.xi_hat, fit.model, fit.noise)
    penalty = trace_product_inv(
        estimate_I_hat(fit, data, noise_samples), estimate_J_hat(fit, data, noise_samples)
    )
    return float(fit.n_data * d_hat + penalty)


def _b_from_logs(log_p, log_n, n_data, m_noise):
    log_denom = np.logaddexp(np.log(n_data) + log_p, np.log(m_noise) + log_n)
    log_b = log_p + log_n + 2.0 * np.log(n_data + m_noise) - 2.0 * log_denom
    return np.exp(log_b)


def b_hat(z, fit):
    """``p n (N + M)^2 / (N p + M n)^2`` per point, shape (n,).

    Bounded above by ``(N + M)^2 / (4 N M)``; computed in log space so that
    extreme density ratios underflow to 0 instead of overflowing.
    """
    z = fit.model.validate_domain(z)
    log_p = log_p_xi(fit.model, z, fit.xi_hat)
    log_n = require_positive_density(fit.noise.log_density(z))
    return _b_from_logs(log_p, log_n, float(fit.n_data), float(fit.n_noise))


def ncic2(fit, data, noise_samples):
    """Classification-probability criterion: ``N d_hat + m - mean b_hat``.

    The model and noise log-densities at every point feed both the loss term
    and the classification probabilities, so they are computed exactly once.
    """
    x, y = _fit_arrays(fit, data, noise_samples)
    n_data, m_noise = float(fit.n_data), float(fit.n_noise)
    log_p_x = log_p_xi(fit.model, x, fit.xi_hat)
    log_p_y = log_p_xi(fit.model, y, fit.xi_hat)
    log_n_x = require_positive_density(fit.noise.log_density(x))
    log_n_y = require_positive_density(fit.noise.log_density(y))
    log_nu = np.log(n_data / m_noise)
    d_hat = (
        np.sum(_softplus(-(log_nu + log_p_x - log_n_x)))
        + np.sum(_softplus(log_nu + log_p_y - log_n_y))
    ) / n_data
    mean_b = (
        np.sum(_b_from_logs(log_p_x, log_n_x, n_data, m_noise))
        + np.sum(_b_from_logs(log_p_y, log_n_y, n_data, m_noise))
    ) / (n_data + m_noise)
    return float(n_data * d_hat + fit.m - mean_b)


def nce_loocv(
    model,
    data,
    noise,
    noise_samples,
    *,
    grad_tol=1e-7,
    max_iter=2000,
    warm_start=True,
    full_fit=None,
):
    """Leave-one-out estimate of the out-of-sample contrastive loss.

    Requires M = N; fold t drops data point t *and* noise point t, refits
    (warm-started from the full fit unless ``warm_start=False``), and scores
    the held-out pair.  Returns the summed held-out loss, the analogue of
    ``N * E[d_hat]`` that the closed-form criteria estimate.

    Raises
    ------
    EmptyFold
        When fewer than two data points are available.
    """
    x = model.validate_domain(data)
    y = model.validate_domain(noise_samples)
    if x.shape[0] != y.shape[0]:
        raise ValueError("leave-one-out requires matched sample counts (M == N)")
    if x.shape[0] < 2:
        raise EmptyFold("leave-one-out needs at least two data points")
    n_data = x.shape[0]
    if full_fit is None:
        full_fit = fit_nce(
            model, x, noise, y, grad_tol=grad_tol, max_iter=max_iter
        )
    log_n_x = require_positive_density(noise.log_density(x))
    log_n_y = require_positive_density(noise.log_density(y))
    engine = _ContrastiveEngine(model, x, y, log_n_x, log_n_y)
    theta_full, c_full = split_xi(model, full_fit.xi_hat)
    z_warm = engine.pack(theta_full, c_full)

    # Jackknife warm solves: each fold's gradient at the full optimum is a
    # cheap combination of precomputed per-point contributions, and Newton
    # iteration with the (once-factored) full-sample Hessian contracts the
    # gradient by orders of magnitude per step.  Every fold still has to
    # meet the same ``grad_tol`` certificate as a fresh fit; conjugate
    # gradient takes over whenever the frozen-Hessian iteration stalls.
    grads_x = grads_y = grad_sum = solve_newton = None
    if warm_start:
        try:
            grads_x, grads_y = engine.pointwise_grads(z_warm)
            grad_sum = grads_x.sum(axis=0) + grads_y.sum(axis=0)
            solve_newton = spd_solver(
                _numeric_hessian(engine.make_problem().gradient, z_warm)
            )
        except (NnicError, np.linalg.LinAlgError, AssertionError):
            solve_newton = None

    keep = np.arange(n_data)
    total = 0.0
    for t in range(n_data):
        rows = np.delete(keep, t)
        problem = engine.make_problem(rows, rows)
        if warm_start:
            z_t = z_warm
            polished = False
            if solve_newton is not None:
                g_t = (grad_sum - grads_x[t] - grads_y[t]) / (n_data - 1)
                for _ in range(8):
                    if float(np.max(np.abs(g_t))) <= grad_tol:
                        polished = True
                        break
                    z_next = z_t - solve_newton(g_t)
                    if not np.isfinite(problem.objective(z_next)):
                        break
                    z_t = z_next
                    g_t = problem.gradient(z_next)
            if not polished:
                result = minimize_cg(problem, z_t, grad_tol=grad_tol, max_iter=max_iter)
                _require_converged(result, model, grad_tol)
                z_t = result.x_star
        else:
            theta0, c0 = model.default_nce_start(x[rows])
            result = minimize_cg(
                problem, engine.pack(theta0, c0), grad_tol=grad_tol, max_iter=max_iter
            )
            _require_converged(result, model, grad_tol)
            z_t = result.x_star
        theta_t, c_t = engine.unpack(z_t)
        xi_t = np.concatenate([np.asarray(theta_t, float).ravel(), np.asarray(c_t, float).ravel()])
        total += float(rho_d(x[t : t + 1], xi_t, n_data, n_data, model, noise)[0])
        total += float(rho_n(y[t : t + 1], xi_t, n_data, n_data, model, noise)[0])
    return total
