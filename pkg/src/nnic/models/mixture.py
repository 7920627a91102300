"""Finite mixture of one-dimensional unnormalized Gaussians.

Each of the K components carries the natural-parameter form
``theta_k1 x**2 + theta_k2 x`` plus its own log normalizing constant ``c_k``;
the mixture's unnormalized density is ``sum_k exp(log_unnorm_k + c_k)``.
theta stacks the K two-entry blocks; the per-component constants live in the
c vector handled by the estimation layer.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..data import TWO_PI, Domain
from .base import ModelFamily

__all__ = ["GaussianMixture1D", "mixture_log_density"]


class GaussianMixture1D(ModelFamily):
    name = "nn-gmm"
    domain = Domain.REALS
    d = 1
    x_differentiable = False
    exponential_family = False

    def __init__(self, n_components):
        if n_components < 1:
            raise ValueError("n_components must be at least 1")
        self.n_components = int(n_components)
        self.theta_dim = 2 * self.n_components

    def comp_log_unnorm(self, x, theta):
        x = self.validate_domain(x)[:, 0]
        blocks = self._check_theta(theta).reshape(self.n_components, 2)
        return np.outer(x**2, blocks[:, 0]) + np.outer(x, blocks[:, 1])

    def comp_grad_theta(self, x, theta):
        x = self.validate_domain(x)[:, 0]
        self._check_theta(theta)
        features = np.column_stack([x**2, x])
        return np.broadcast_to(features[:, None, :], (x.shape[0], self.n_components, 2)).copy()

    def log_unnorm(self, x, theta):
        return logsumexp(self.comp_log_unnorm(x, theta), axis=1)

    def grad_theta(self, x, theta):
        comp = self.comp_log_unnorm(x, theta)
        weights = np.exp(comp - logsumexp(comp, axis=1, keepdims=True))
        grads = self.comp_grad_theta(x, theta)
        return (weights[:, :, None] * grads).reshape(comp.shape[0], self.theta_dim)

    def params_from_mixture(self, weights, means, variances):
        """Map normalized mixture parameters to ``(theta, c)``.

        Component k of a weighted normalized Gaussian mixture corresponds to
        ``theta_k = (-1 / (2 var_k), mean_k / var_k)`` and
        ``c_k = log w_k - log sqrt(2 pi var_k) - mean_k^2 / (2 var_k)``.
        """
        weights = np.asarray(weights, dtype=float).ravel()
        means = np.asarray(means, dtype=float).ravel()
        variances = np.asarray(variances, dtype=float).ravel()
        if not weights.size == means.size == variances.size == self.n_components:
            raise ValueError(f"expected {self.n_components} components")
        theta = np.empty(self.theta_dim)
        theta[0::2] = -0.5 / variances
        theta[1::2] = means / variances
        c = np.log(weights) - 0.5 * np.log(TWO_PI * variances) - means**2 / (2.0 * variances)
        return theta, c

    def default_nce_start(self, data):
        """Start from an EM fit, falling back to data-quantile anchors.

        A symmetric all-zero start is an exact stationary point of the
        contrastive objective for K > 1 (every component identical), and
        generic spread-out starts leave the ill-conditioned objective far
        from its basin, so a cheap EM pass supplies component parameters and
        log-weights directly.  EM degeneracy (fewer clusters than components)
        falls back to equal-weight Gaussians at the data quantiles.
        """
        # Imported here: baselines depends on the models package.
        from ..baselines import fit_gmm_em_1d
        from ..exceptions import DegenerateComponent

        values = np.asarray(data, dtype=float).ravel()
        k = self.n_components
        try:
            em = fit_gmm_em_1d(values, k, seed=0, max_iter=200, n_restarts=4)
        except DegenerateComponent:
            sd = max(float(np.std(values)), 1e-3)
            centers = np.atleast_1d(np.quantile(values, (np.arange(k) + 0.5) / k))
            return self.params_from_mixture(
                np.full(k, 1.0 / k), centers, np.full(k, sd**2)
            )
        return self.params_from_mixture(em.weights, em.means, em.variances)

    def canonical_params(self, theta, c):
        blocks = np.asarray(theta, dtype=float).reshape(self.n_components, 2)
        c = np.asarray(c, dtype=float)
        means = np.where(blocks[:, 0] < 0.0, -blocks[:, 1] / (2.0 * blocks[:, 0]), np.inf)
        order = np.argsort(means, kind="stable")
        return blocks[order].ravel(), c[order]


def mixture_log_density(theta, c, x):
    """Unnormalized mixture log density ``log sum_k exp(log_unnorm_k + c_k)``."""
    c = np.asarray(c, dtype=float).ravel()
    model = GaussianMixture1D(c.size)
    return logsumexp(model.comp_log_unnorm(x, theta) + c[None, :], axis=1)
