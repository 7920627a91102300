"""Population (infinite-sample) quantities via adaptive quadrature.

These are the oracles the simulation studies compare their finite-sample
estimates against: the population contrastive discrepancy between a true
density q and a fitted model, and the population score matching loss.  Both
are one-dimensional integrals here, evaluated with adaptive quadrature on a
wide finite window; integrands take and return plain floats so the
quadrature inner loop stays cheap.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from ..exceptions import QuadratureNonConvergence

__all__ = ["d_nce_population", "d_sm_population", "wald_ci"]


def _softplus(t):
    # float-math softplus, overflow-safe in both tails
    if t > 35.0:
        return t
    if t < -35.0:
        return math.exp(t)
    return math.log1p(math.exp(t))


def _quad(fun, lower, upper, tol):
    value, abserr = quad(fun, lower, upper, epsabs=tol, epsrel=1e-10, limit=500)
    if not np.isfinite(value) or abserr > max(1e3 * tol, 1e-6 * abs(value)):
        raise QuadratureNonConvergence(
            f"quadrature error {abserr:.2e} exceeds tolerance (value {value:.6e})"
        )
    return value


def d_nce_population(q_pdf, log_p, log_n, n_data, n_noise, *, lower=-40.0, upper=40.0, tol=1e-9):
    """Population contrastive discrepancy between density ``q`` and model ``p``.

    ``q_pdf``, ``log_p`` and ``log_n`` are scalar float callables (``log_p``
    includes the fitted normalizing constant).  Equals

        E_q softplus(-eta) + (M/N) E_n softplus(eta),
        eta(z) = log(N/M) + log_p(z) - log_n(z),

    the quantity whose empirical version the contrastive objective averages.
    At ``p = n`` and ``N = M`` it is ``2 log 2``.
    """
    log_ratio_const = math.log(n_data / n_noise)

    def data_term(x):
        return q_pdf(x) * _softplus(-(log_ratio_const + log_p(x) - log_n(x)))

    def noise_term(x):
        return math.exp(log_n(x)) * _softplus(log_ratio_const + log_p(x) - log_n(x))

    value = _quad(data_term, lower, upper, tol)
    value += (n_noise / n_data) * _quad(noise_term, lower, upper, tol)
    return value


def d_sm_population(q_pdf, rho, *, lower=-40.0, upper=40.0, tol=1e-9):
    """Population score matching loss ``E_q rho(x)`` for scalar callables."""
    return _quad(lambda x: q_pdf(x) * rho(x), lower, upper, tol)


def wald_ci(p_hat, n):
    """95% normal-approximation interval for a binomial frequency (unclipped)."""
    if n <= 0:
        raise ValueError("need a positive replicate count")
    half = 1.96 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)
    return (p_hat - half, p_hat + half)
