"""One-dimensional unnormalized Gaussian family.

``log_unnorm(x) = theta1 * x**2 + theta2 * x`` — the natural-parameter form
of a Gaussian with the normalizing constant dropped.  Supports every
estimator in the package and serves as the reference family for most
oracle tests.
"""

from __future__ import annotations

import numpy as np

from ..data import Domain
from .base import ModelFamily

__all__ = ["NNGaussian1D"]


class NNGaussian1D(ModelFamily):
    name = "nn-gaussian-1d"
    domain = Domain.REALS
    d = 1
    theta_dim = 2
    x_differentiable = True
    exponential_family = True

    def log_unnorm(self, x, theta):
        x = self.validate_domain(x)[:, 0]
        theta = self._check_theta(theta)
        return theta[0] * x**2 + theta[1] * x

    def grad_theta(self, x, theta):
        x = self.validate_domain(x)[:, 0]
        self._check_theta(theta)
        return np.column_stack([x**2, x])

    def dx_log_unnorm(self, x, theta):
        x = self.validate_domain(x)[:, 0]
        theta = self._check_theta(theta)
        return (2.0 * theta[0] * x + theta[1])[:, None]

    def dxx_log_unnorm(self, x, theta):
        x = self.validate_domain(x)[:, 0]
        theta = self._check_theta(theta)
        return np.full((x.shape[0], 1), 2.0 * theta[0])

    def exp_family_terms(self, x):
        x = self.validate_domain(x)[:, 0]
        n = x.shape[0]
        gamma = np.empty((n, 2, 2))
        gamma[:, 0, 0] = 8.0 * x**2
        gamma[:, 0, 1] = 4.0 * x
        gamma[:, 1, 0] = 4.0 * x
        gamma[:, 1, 1] = 2.0
        g = np.zeros((n, 2))
        g[:, 0] = 4.0
        return gamma, g, np.zeros(n)
