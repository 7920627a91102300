"""Samplers for the data-generating processes used by the experiments."""

from __future__ import annotations

import numpy as np
from scipy.stats import truncnorm

from ..data import TWO_PI
from ..linalg import cholesky_spd, inv_spd

__all__ = [
    "sample_contaminated_gaussian",
    "contaminated_gaussian_pdf",
    "chain3_precision",
    "sample_mvn_from_precision",
    "sample_truncated_mvn",
    "sample_exp_product",
    "sample_gmm_1d",
    "sample_bivariate_von_mises",
]


def sample_contaminated_gaussian(n, epsilon, rng):
    """(n, 1) draws from ``(1 - eps) N(0, 1) + eps N(0, 10)``.

    The contamination mask thresholds one uniform per point, so for a fixed
    generator state the same points flip to the wide component as ``epsilon``
    grows (monotone coupling across a contamination grid).
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    wide = rng.random(n) < epsilon
    scale = np.where(wide, np.sqrt(10.0), 1.0)
    return (scale * rng.standard_normal(n)).reshape(-1, 1)


def contaminated_gaussian_pdf(epsilon):
    """Scalar pdf of the contaminated Gaussian, as a float-math callable."""
    import math

    norm1 = 1.0 / math.sqrt(2.0 * math.pi)
    norm10 = 1.0 / math.sqrt(2.0 * math.pi * 10.0)

    def pdf(x):
        return (1.0 - epsilon) * norm1 * math.exp(-0.5 * x * x) + epsilon * norm10 * math.exp(
            -0.05 * x * x
        )

    return pdf


def chain3_precision(coupling):
    """Three-node precision with edges (1,2) of the given strength and (2,3) fixed.

    ``[[1, c, 0], [c, 1, 0.55], [0, 0.55, 1]]`` — the (1,3) entry is zero, so
    graph recovery should find exactly the two-edge chain.
    """
    return np.array(
        [
            [1.0, coupling, 0.0],
            [coupling, 1.0, 0.55],
            [0.0, 0.55, 1.0],
        ]
    )


def sample_mvn_from_precision(precision, n, rng):
    """(n, d) zero-mean Gaussian draws with the given precision matrix."""
    cov = inv_spd(precision, "precision")
    factor = cholesky_spd(cov, "covariance")
    return rng.standard_normal((n, precision.shape[0])) @ factor.T


def sample_truncated_mvn(
    precision,
    n,
    rng,
    *,
    batch=None,
    gibbs_threshold=0.01,
    burn_in=100,
):
    """(n, d) draws from a zero-mean Gaussian restricted to the positive orthant.

    Rejection sampling against the untruncated Gaussian; if the observed
    acceptance rate drops below ``gibbs_threshold`` the sampler switches to a
    coordinate Gibbs chain (exact truncated-normal full conditionals,
    ``burn_in`` sweeps discarded).
    """
    d = precision.shape[0]
    if batch is None:
        batch = max(4 * n, 256)
    cov = inv_spd(precision, "precision")
    factor = cholesky_spd(cov, "covariance")
    collected = []
    accepted = 0
    proposed = 0
    while accepted < n:
        draws = rng.standard_normal((batch, d)) @ factor.T
        keep = draws[np.all(draws > 0.0, axis=1)]
        proposed += batch
        accepted += keep.shape[0]
        collected.append(keep)
        if proposed >= batch and accepted / proposed < gibbs_threshold:
            return _truncated_mvn_gibbs(precision, n, rng, burn_in)
    return np.concatenate(collected, axis=0)[:n]


def _truncated_mvn_gibbs(precision, n, rng, burn_in):
    d = precision.shape[0]
    cond_sd = 1.0 / np.sqrt(np.diag(precision))
    x = np.full(d, 1.0)
    draws = np.empty((n, d))
    kept = 0
    for sweep in range(burn_in + n):
        for i in range(d):
            others = precision[i] @ x - precision[i, i] * x[i]
            mean_i = -others / precision[i, i]
            lo = (0.0 - mean_i) / cond_sd[i]
            x[i] = truncnorm.rvs(lo, np.inf, loc=mean_i, scale=cond_sd[i], random_state=rng)
        if sweep >= burn_in:
            draws[kept] = x
            kept += 1
    return draws


def sample_exp_product(means, n, rng):
    """(n, d) independent exponential draws with the given coordinate means."""
    means = np.asarray(means, dtype=float).ravel()
    return rng.exponential(scale=means, size=(n, means.size))


def sample_gmm_1d(weights, means, sds, n, rng):
    """(n, 1) draws from a Gaussian mixture (ancestral sampling)."""
    weights = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    labels = rng.choice(weights.size, size=n, p=weights / weights.sum())
    return (means[labels] + sds[labels] * rng.standard_normal(n)).reshape(-1, 1)


def sample_bivariate_von_mises(theta, n, rng, *, burn_in=200, thin=10):
    """(n, 2) Gibbs draws from the sine-model bivariate von Mises density.

    Both full conditionals are von Mises: collecting the cos/sin terms in one
    coordinate gives ``R cos(x - mu - phi)`` with ``R = hypot(kappa, lam s)``
    and ``phi = atan2(lam s, kappa)``.  One chain, ``burn_in`` sweeps
    discarded, every ``thin``-th sweep kept.
    """
    k1, k2, m1, m2, lam = (float(v) for v in theta)
    x = np.array([m1, m2]) % TWO_PI
    draws = np.empty((n, 2))
    kept = 0
    sweeps = burn_in + n * thin
    for sweep in range(sweeps):
        s2 = np.sin(x[1] - m2)
        conc = np.hypot(k1, lam * s2)
        shift = np.arctan2(lam * s2, k1)
        x[0] = (m1 + shift + rng.vonmises(0.0, conc)) % TWO_PI if conc > 0 else rng.uniform(0, TWO_PI)
        s1 = np.sin(x[0] - m1)
        conc = np.hypot(k2, lam * s1)
        shift = np.arctan2(lam * s1, k2)
        x[1] = (m2 + shift + rng.vonmises(0.0, conc)) % TWO_PI if conc > 0 else rng.uniform(0, TWO_PI)
        if sweep >= burn_in and (sweep - burn_in) % thin == 0:
            draws[kept] = x
            kept += 1
    assert kept == n
    return draws
