"""Noise distributions for contrastive estimation.

A noise distribution must be easy to sample, have a density that can be
evaluated exactly, and dominate the model on its sample space.  Three
families cover the package's domains: a full-covariance Gaussian (reals),
a product of exponentials (non-negative orthant), and the uniform
distribution on the torus.  ``moment_matched`` constructors fit the noise
scale to a dataset, which is the standard way to keep the contrastive
classification problem hard enough to be informative.
"""

from __future__ import annotations

import abc

import numpy as np
from scipy.linalg import solve_triangular

from .data import TWO_PI
from .exceptions import NoiseDensityZero
from .linalg import cholesky_spd

__all__ = [
    "NoiseDistribution",
    "GaussianNoise",
    "ExponentialProductNoise",
    "UniformTorusNoise",
    "NOISE_KINDS",
    "make_noise",
]


class NoiseDistribution(abc.ABC):
    """Sampling plus exact log density on points of shape (n, d)."""

    kind: str = ""
    d: int = 1

    @abc.abstractmethod
    def log_density(self, x):
        """Log density per row; ``-inf`` where the density vanishes."""

    @abc.abstractmethod
    def sample(self, m, rng):
        """Draw an (m, d) sample using the supplied generator."""

    def describe(self):
        """Plain-dict summary for reports."""
        return {"kind": self.kind, "d": self.d}


class GaussianNoise(NoiseDistribution):
    kind = "gaussian"

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float).ravel()
        self.d = self.mean.size
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (self.d, self.d):
            raise ValueError(f"cov must be ({self.d}, {self.d}), got {cov.shape}")
        self.cov = 0.5 * (cov + cov.T)
        self._factor = cholesky_spd(self.cov, "noise covariance")
        self._logdet = 2.0 * float(np.sum(np.log(np.diag(self._factor))))

    @classmethod
    def standard(cls, d):
        return cls(np.zeros(d), np.eye(d))

    @classmethod
    def moment_matched(cls, data, ridge=1e-8):
        """Gaussian with the sample mean and (ridged) sample covariance."""
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        mean = data.mean(axis=0)
        centered = data - mean
        cov = centered.T @ centered / data.shape[0]
        cov[np.diag_indices_from(cov)] += ridge
        return cls(mean, cov)

    def log_density(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        white = solve_triangular(self._factor, (x - self.mean).T, lower=True).T
        return -0.5 * (self.d * np.log(TWO_PI) + self._logdet + np.sum(white**2, axis=1))

    def sample(self, m, rng):
        white = rng.standard_normal((m, self.d))
        return self.mean + white @ self._factor.T

    def describe(self):
        return {
            "kind": self.kind,
            "d": self.d,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
        }


class ExponentialProductNoise(NoiseDistribution):
    """Independent exponentials, one rate per coordinate (non-negative orthant)."""

    kind = "exp-product"

    def __init__(self, means):
        self.means = np.asarray(means, dtype=float).ravel()
        if np.any(self.means <= 0.0):
            raise ValueError("exponential means must be positive")
        self.d = self.means.size

    @classmethod
    def moment_matched(cls, data):
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        means = np.maximum(data.mean(axis=0), 1e-8)
        return cls(means)

    def log_density(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        out = -np.sum(np.log(self.means)) - np.sum(x / self.means, axis=1)
        return np.where(np.all(x >= 0.0, axis=1), out, -np.inf)

    def sample(self, m, rng):
        return rng.exponential(scale=self.means, size=(m, self.d))

    def describe(self):
        return {"kind": self.kind, "d": self.d, "means": self.means.tolist()}


class UniformTorusNoise(NoiseDistribution):
    kind = "uniform-torus"

    def __init__(self, d):
        self.d = int(d)

    def log_density(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        inside = np.all((x >= 0.0) & (x < TWO_PI), axis=1)
        return np.where(inside, -self.d * np.log(TWO_PI), -np.inf)

    def sample(self, m, rng):
        return rng.uniform(0.0, TWO_PI, size=(m, self.d))


NOISE_KINDS = ("gaussian", "exp-product", "uniform-torus")


def make_noise(kind, data):
    """Moment-matched noise of the requested ``kind`` for ``data``."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    if kind == "gaussian":
        return GaussianNoise.moment_matched(data)
    if kind == "exp-product":
        return ExponentialProductNoise.moment_matched(data)
    if kind == "uniform-torus":
        return UniformTorusNoise(data.shape[1])
    raise ValueError(f"unknown noise kind {kind!r} (options: {', '.join(NOISE_KINDS)})")


def require_positive_density(log_n):
    """Raise :class:`NoiseDensityZero` when any log density is ``-inf``."""
    if np.any(np.isneginf(log_n)):
        raise NoiseDensityZero("noise density vanishes at an evaluation point")
    return log_n
