"""Contract every model family implements.

A family provides an unnormalized log density ``log_unnorm(x, theta)`` plus
whatever derivative structure the estimators need: theta-gradients (and, for
curved families, theta-Hessians) for noise contrastive estimation, and
x-derivatives or exponential-family quadratic terms for score matching.
Operations a family cannot support raise :class:`CapabilityError` rather than
silently degrading.

All evaluation methods are vectorized over an (n, d) batch of points and
return per-point arrays.
"""

from __future__ import annotations

import abc

import numpy as np

from ..data import Domain, as_sample_matrix
from ..exceptions import CapabilityError, DomainError

__all__ = ["ModelFamily"]


class ModelFamily(abc.ABC):
    """Abstract base class for unnormalized model families."""

    #: Identifier used by the CLI and reports.
    name: str = ""
    #: Sample space tag.
    domain: Domain = Domain.REALS
    #: Sample dimension.
    d: int = 1
    #: Length of the theta vector (all components concatenated).
    theta_dim: int = 1
    #: Number of mixture components sharing one normalizing constant each.
    n_components: int = 1
    #: True when log_unnorm is affine in theta (Hessian in theta vanishes).
    theta_linear: bool = True
    #: True when x-derivatives (score matching) are available.
    x_differentiable: bool = False
    #: True when the score matching objective is an exact quadratic in theta.
    exponential_family: bool = False

    # ------------------------------------------------------------------
    # Core evaluations
    # ------------------------------------------------------------------

    def validate_domain(self, x):
        """Coerce ``x`` to an (n, d) batch, raising DomainError when outside."""
        x = as_sample_matrix(x, self.d)
        inside = self.domain.contains(x)
        if not np.all(inside):
            row = int(np.flatnonzero(~inside)[0])
            raise DomainError(
                f"{self.name}: point {row + 1} lies outside domain '{self.domain.value}'"
            )
        return x

    def _check_theta(self, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.shape != (self.theta_dim,):
            raise ValueError(
                f"{self.name}: theta must have length {self.theta_dim}, got {theta.shape}"
            )
        return theta

    @abc.abstractmethod
    def log_unnorm(self, x, theta):
        """Unnormalized log density, shape (n,)."""

    @abc.abstractmethod
    def grad_theta(self, x, theta):
        """Gradient of :meth:`log_unnorm` in theta, shape (n, theta_dim)."""

    def hess_theta(self, x, theta):
        """Hessian of :meth:`log_unnorm` in theta, shape (n, theta_dim, theta_dim)."""
        if self.theta_linear:
            x = self.validate_domain(x)
            return np.zeros((x.shape[0], self.theta_dim, self.theta_dim))
        raise NotImplementedError(f"{self.name}: hess_theta not implemented")

    def theta_ok(self, theta):
        """Feasibility predicate used as a +inf barrier by iterative fits."""
        return True

    # ------------------------------------------------------------------
    # x-derivatives (score matching)
    # ------------------------------------------------------------------

    def dx_log_unnorm(self, x, theta):
        """Coordinatewise first x-derivatives of log_unnorm, shape (n, d)."""
        raise CapabilityError(f"{self.name} does not support x-derivatives")

    def dxx_log_unnorm(self, x, theta):
        """Coordinatewise second x-derivatives (diagonal only), shape (n, d)."""
        raise CapabilityError(f"{self.name} does not support x-derivatives")

    def exp_family_terms(self, x):
        """Quadratic score matching terms (gamma, g, const) per point.

        Returns arrays of shapes (n, k, k), (n, k), (n,) such that the
        domain-appropriate score matching loss equals
        ``0.5 theta' gamma theta + g' theta + const`` pointwise.
        """
        raise CapabilityError(f"{self.name} is not an exponential family")

    # ------------------------------------------------------------------
    # NCE plumbing
    # ------------------------------------------------------------------

    def default_nce_start(self, data):
        """Deterministic (theta0, c0) start for an NCE fit on ``data``."""
        return np.zeros(self.theta_dim), np.zeros(self.n_components)

    def to_internal(self, theta):
        """Map natural theta to unconstrained optimizer coordinates."""
        return np.asarray(theta, dtype=float).copy()

    def from_internal(self, z):
        """Inverse of :meth:`to_internal`."""
        return np.asarray(z, dtype=float).copy()

    def internal_scale(self, z):
        """Diagonal of d(theta)/d(z) at internal coordinates ``z``."""
        return np.ones(self.theta_dim)

    def canonical_params(self, theta, c):
        """Canonical representative of an equivalence class of parameters."""
        return np.asarray(theta, dtype=float), np.asarray(c, dtype=float)

    # ------------------------------------------------------------------
    # Component view (trivial for unmixed families)
    # ------------------------------------------------------------------

    @property
    def component_dim(self):
        return self.theta_dim // self.n_components

    def comp_log_unnorm(self, x, theta):
        """Per-component log_unnorm, shape (n, n_components)."""
        return self.log_unnorm(x, theta)[:, None]

    def comp_grad_theta(self, x, theta):
        """Per-component theta-block gradients, shape (n, n_components, component_dim)."""
        return self.grad_theta(x, theta)[:, None, :]

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, d={self.d}, theta_dim={self.theta_dim})"
