"""Bivariate von Mises (sine model) on the torus.

``log_unnorm(x) = k1 cos(x1 - m1) + k2 cos(x2 - m2)
                  + lam sin(x1 - m1) sin(x2 - m2)``

theta stacks ``(k1, k2, m1, m2, lam)``; the ``dependent=False`` variant pins
``lam = 0`` and drops it from theta, giving the independent-coordinates null
model.  The family is curved (log_unnorm is not linear in theta), so it
carries explicit theta-Hessians, and the concentrations are optimized through
a softplus map to keep them non-negative during line searches.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..data import TWO_PI, Domain
from .base import ModelFamily

__all__ = ["BivariateVonMises"]


def _softplus(a):
    return np.logaddexp(0.0, a)


def _inv_softplus(k):
    k = np.maximum(k, 1e-10)
    # log(expm1(k)), stable for both tails.
    return k + np.log(-np.expm1(-k))


class BivariateVonMises(ModelFamily):
    domain = Domain.TORUS
    d = 2
    theta_linear = False

    def __init__(self, dependent=True):
        self.dependent = bool(dependent)
        self.theta_dim = 5 if self.dependent else 4
        self.name = "bvm" if self.dependent else "bvm-independent"

    def _parts(self, x, theta):
        u = x[:, 0] - theta[2]
        v = x[:, 1] - theta[3]
        lam = theta[4] if self.dependent else 0.0
        return np.cos(u), np.sin(u), np.cos(v), np.sin(v), lam

    def log_unnorm(self, x, theta):
        x = self.validate_domain(x)
        theta = self._check_theta(theta)
        cu, su, cv, sv, lam = self._parts(x, theta)
        return theta[0] * cu + theta[1] * cv + lam * su * sv

    def grad_theta(self, x, theta):
        x = self.validate_domain(x)
        theta = self._check_theta(theta)
        cu, su, cv, sv, lam = self._parts(x, theta)
        grad = np.empty((x.shape[0], self.theta_dim))
        grad[:, 0] = cu
        grad[:, 1] = cv
        grad[:, 2] = theta[0] * su - lam * cu * sv
        grad[:, 3] = theta[1] * sv - lam * su * cv
        if self.dependent:
            grad[:, 4] = su * sv
        return grad

    def hess_theta(self, x, theta):
        x = self.validate_domain(x)
        theta = self._check_theta(theta)
        cu, su, cv, sv, lam = self._parts(x, theta)
        n = x.shape[0]
        hess = np.zeros((n, self.theta_dim, self.theta_dim))
        hess[:, 0, 2] = hess[:, 2, 0] = su
        hess[:, 1, 3] = hess[:, 3, 1] = sv
        hess[:, 2, 2] = -theta[0] * cu - lam * su * sv
        hess[:, 3, 3] = -theta[1] * cv - lam * su * sv
        hess[:, 2, 3] = hess[:, 3, 2] = lam * cu * cv
        if self.dependent:
            hess[:, 2, 4] = hess[:, 4, 2] = -cu * sv
            hess[:, 3, 4] = hess[:, 4, 3] = -su * cv
        return hess

    # ------------------------------------------------------------------
    # Optimizer coordinates: concentrations through softplus
    # ------------------------------------------------------------------

    def to_internal(self, theta):
        z = np.asarray(theta, dtype=float).copy()
        z[:2] = _inv_softplus(z[:2])
        return z

    def from_internal(self, z):
        theta = np.asarray(z, dtype=float).copy()
        theta[:2] = _softplus(theta[:2])
        return theta

    def internal_scale(self, z):
        scale = np.ones(self.theta_dim)
        scale[:2] = expit(z[:2])
        return scale

    def default_nce_start(self, data):
        data = self.validate_domain(data)
        theta0 = np.zeros(self.theta_dim)
        for j in range(2):
            cbar = float(np.mean(np.cos(data[:, j])))
            sbar = float(np.mean(np.sin(data[:, j])))
            rbar = min(np.hypot(cbar, sbar), 0.99)
            theta0[j] = np.clip(rbar * (2.0 - rbar**2) / (1.0 - rbar**2), 1e-3, 50.0)
            theta0[2 + j] = np.arctan2(sbar, cbar) % TWO_PI
        return theta0, np.array([-np.log(TWO_PI**2)])

    def canonical_params(self, theta, c):
        theta = np.asarray(theta, dtype=float).copy()
        for j in range(2):
            if theta[j] < 0.0:
                theta[j] = -theta[j]
                theta[2 + j] += np.pi
        theta[2:4] = np.mod(theta[2:4], TWO_PI)
        return theta, np.asarray(c, dtype=float)
