"""Tests for the simulation-lab samplers, seed streams, and population values."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from nnic.exceptions import QuadratureNonConvergence
from nnic.simlab.population import d_nce_population, d_sm_population, wald_ci
from nnic.simlab.rng import replicate_rng
from nnic.simlab.samplers import (
    chain3_precision,
    contaminated_gaussian_pdf,
    sample_bivariate_von_mises,
    sample_contaminated_gaussian,
    sample_exp_product,
    sample_gmm_1d,
    sample_mvn_from_precision,
    sample_truncated_mvn,
)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _circular_mean(angles):
    return math.atan2(np.sin(angles).mean(), np.cos(angles).mean())


def _circular_correlation(x, y):
    """Fisher-Lee circular correlation coefficient of two angle samples."""
    mx, my = _circular_mean(x), _circular_mean(y)
    sx, sy = np.sin(x - mx), np.sin(y - my)
    return float(np.sum(sx * sy) / math.sqrt(np.sum(sx**2) * np.sum(sy**2)))


class TestReplicateRng:
    def test_same_triple_reproduces_stream(self):
        a = replicate_rng(99, 4, stream=1).standard_normal(16)
        b = replicate_rng(99, 4, stream=1).standard_normal(16)
        assert np.array_equal(a, b)

    def test_distinct_triples_give_distinct_streams(self):
        base = replicate_rng(99, 4, stream=0).standard_normal(16)
        for seed, index, stream in [(99, 4, 1), (99, 5, 0), (100, 4, 0)]:
            other = replicate_rng(seed, index, stream).standard_normal(16)
            assert not np.array_equal(base, other)

    def test_stream_isolation_under_extra_consumption(self):
        """Draining stream 0 cannot shift what stream 1 produces."""
        r0 = replicate_rng(7, 0, stream=0)
        r0.standard_normal(1000)
        after = replicate_rng(7, 0, stream=1).standard_normal(8)
        fresh = replicate_rng(7, 0, stream=1).standard_normal(8)
        assert np.array_equal(after, fresh)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            replicate_rng(7, -1)

    def test_large_index_supported(self):
        big = 2**40 + 3
        a = replicate_rng(7, big).standard_normal(4)
        b = replicate_rng(7, big).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, replicate_rng(7, big + 1).standard_normal(4))


class TestContaminatedGaussian:
    def test_column_shape(self):
        x = sample_contaminated_gaussian(50, 0.1, np.random.default_rng(0))
        assert x.shape == (50, 1)

    def test_pure_component_variances(self):
        clean = sample_contaminated_gaussian(200000, 0.0, np.random.default_rng(6))
        wide = sample_contaminated_gaussian(200000, 1.0, np.random.default_rng(7))
        assert clean.var() == pytest.approx(1.0, abs=0.02)
        assert wide.var() == pytest.approx(10.0, abs=0.2)

    def test_mixture_variance_interpolates(self):
        """Var = 1 + 9*eps; at eps = 0.1 that is 1.9, checked to 1%."""
        x = sample_contaminated_gaussian(10**6, 0.1, np.random.default_rng(5))
        assert x.var() == pytest.approx(1.9, rel=0.01)

    def test_epsilon_outside_unit_interval_rejected(self):
        rng = np.random.default_rng(0)
        for bad in (-0.1, 1.5):
            with pytest.raises(ValueError):
                sample_contaminated_gaussian(10, bad, rng)

    def test_contamination_sets_nest_across_epsilon(self):
        """With one seed, raising eps only flips additional points to wide.

        The contamination mask comes from thresholding a single uniform
        draw, so every point contaminated at a small eps stays contaminated
        (with the identical value) at any larger eps.
        """
        clean = sample_contaminated_gaussian(5000, 0.0, np.random.default_rng(42))
        lo = sample_contaminated_gaussian(5000, 0.05, np.random.default_rng(42))
        hi = sample_contaminated_gaussian(5000, 0.20, np.random.default_rng(42))
        flipped_lo = (lo != clean).ravel()
        flipped_hi = (hi != clean).ravel()
        assert flipped_lo.sum() > 0
        assert np.all(flipped_hi[flipped_lo])
        assert np.array_equal(lo[flipped_lo], hi[flipped_lo])
        ratios = hi[flipped_hi] / clean[flipped_hi]
        assert np.allclose(ratios, math.sqrt(10.0), rtol=1e-12)

    def test_density_normalizes_and_matches_mixture_formula(self):
        pdf = contaminated_gaussian_pdf(0.1)
        mass, _ = quad(pdf, -40, 40)
        second, _ = quad(lambda t: t * t * pdf(t), -40, 40)
        assert mass == pytest.approx(1.0, abs=1e-10)
        assert second == pytest.approx(1.9, abs=1e-10)
        t = 0.3
        direct = 0.9 * math.exp(-t * t / 2) / math.sqrt(2 * math.pi) + 0.1 * math.exp(
            -t * t / 20
        ) / math.sqrt(20 * math.pi)
        assert pdf(t) == pytest.approx(direct, rel=1e-14)


class TestChainPrecision:
    def test_entries(self):
        K = chain3_precision(0.5)
        expected = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.55], [0.0, 0.55, 1.0]])
        assert np.array_equal(K, expected)

    def test_positive_definite_over_coupling_grid(self):
        for coupling in (0.2, 0.3, 0.5):
            eigenvalues = np.linalg.eigvalsh(chain3_precision(coupling))
            assert eigenvalues.min() > 0

    def test_chain_leaves_end_nodes_unlinked(self):
        K = chain3_precision(0.2)
        assert K[0, 2] == 0.0 and K[2, 0] == 0.0


class TestMvnFromPrecision:
    def test_second_moment_matches_inverse_precision(self):
        K = chain3_precision(0.3)
        x = sample_mvn_from_precision(K, 200000, np.random.default_rng(8))
        second = x.T @ x / len(x)
        assert np.abs(second - np.linalg.inv(K)).max() < 0.03

    def test_shape_and_determinism(self):
        K = chain3_precision(0.5)
        a = sample_mvn_from_precision(K, 40, np.random.default_rng(3))
        b = sample_mvn_from_precision(K, 40, np.random.default_rng(3))
        assert a.shape == (40, 3)
        assert np.array_equal(a, b)


class TestTruncatedMvn:
    def test_all_coordinates_positive(self):
        x = sample_truncated_mvn(chain3_precision(0.3), 500, np.random.default_rng(1))
        assert x.shape == (500, 3)
        assert np.all(x > 0)

    def test_independent_case_matches_half_normal_mean(self):
        """With identity precision each coordinate is a half normal."""
        x = sample_truncated_mvn(np.eye(3), 50000, np.random.default_rng(9))
        se = math.sqrt((1.0 - 2.0 / math.pi) / 50000)
        assert np.abs(x.mean(axis=0) - SQRT_2_OVER_PI).max() < 4 * se

    def test_orthant_mass_consistent_with_acceptance_rate(self):
        """Empirical orthant mass of the raw MVN sits within 3 standard
        errors of the exact acceptance probability (1/8 for identity
        precision in three dimensions)."""
        raw = sample_mvn_from_precision(np.eye(3), 20000, np.random.default_rng(10))
        p_hat = np.all(raw > 0, axis=1).mean()
        se = math.sqrt(p_hat * (1 - p_hat) / 20000)
        assert abs(p_hat - 0.125) <= 3 * se

    def test_low_acceptance_falls_back_to_gibbs(self):
        """Near-degenerate negative correlation gives orthant mass below the
        rejection threshold; the sampler must still return positive draws."""
        cov = np.array([[1.0, -0.999], [-0.999, 1.0]])
        precision = np.linalg.inv(cov)
        precision = 0.5 * (precision + precision.T)
        x = sample_truncated_mvn(precision, 200, np.random.default_rng(12))
        assert x.shape == (200, 2)
        assert np.all(x > 0)
        assert np.all(np.isfinite(x))

    def test_determinism(self):
        K = chain3_precision(0.3)
        a = sample_truncated_mvn(K, 50, np.random.default_rng(2))
        b = sample_truncated_mvn(K, 50, np.random.default_rng(2))
        assert np.array_equal(a, b)


class TestExpProduct:
    def test_componentwise_means(self):
        x = sample_exp_product((0.5, 2.0), 100000, np.random.default_rng(11))
        assert x.shape == (100000, 2)
        assert np.all(x > 0)
        assert x[:, 0].mean() == pytest.approx(0.5, abs=0.01)
        assert x[:, 1].mean() == pytest.approx(2.0, abs=0.04)


class TestGmm1D:
    def test_moments_and_component_split(self):
        x = sample_gmm_1d((0.3, 0.7), (0.0, 4.0), (1.0, 1.0), 100000, np.random.default_rng(12))
        assert x.shape == (100000, 1)
        assert x.mean() == pytest.approx(2.8, abs=0.03)
        assert (x > 2.0).mean() == pytest.approx(0.7, abs=0.01)


class TestBivariateVonMises:
    def test_angles_live_on_torus(self):
        x = sample_bivariate_von_mises((2.0, 2.0, 1.12, 4.0, 0.5), 300, np.random.default_rng(4))
        assert x.shape == (300, 2)
        assert np.all(x >= 0) and np.all(x < 2 * math.pi)

    def test_zero_coupling_gives_uncorrelated_margins(self):
        x = sample_bivariate_von_mises((2.0, 2.0, 1.12, 4.0, 0.0), 3000, np.random.default_rng(10))
        assert abs(_circular_correlation(x[:, 0], x[:, 1])) < 0.06

    def test_circular_means_recover_locations(self):
        x = sample_bivariate_von_mises((2.0, 2.0, 1.12, 4.0, 0.0), 3000, np.random.default_rng(10))
        for j, location in enumerate((1.12, 4.0)):
            gap = _circular_mean(x[:, j]) - location
            gap = (gap + math.pi) % (2 * math.pi) - math.pi
            assert abs(gap) < 0.1

    def test_zero_concentration_gives_uniform_margins(self):
        x = sample_bivariate_von_mises((0.0, 0.0, 0.0, 0.0, 0.0), 2000, np.random.default_rng(11))
        for j in range(2):
            assert kstest(x[:, j], "uniform", args=(0.0, 2 * math.pi)).pvalue > 0.01

    def test_determinism(self):
        theta = (2.0, 2.0, 1.12, 4.0, 0.5)
        a = sample_bivariate_von_mises(theta, 100, np.random.default_rng(5))
        b = sample_bivariate_von_mises(theta, 100, np.random.default_rng(5))
        assert np.array_equal(a, b)


def _std_normal_pdf(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def _std_normal_logpdf(x):
    return -0.5 * x * x - 0.5 * math.log(2 * math.pi)


class TestPopulationNceValue:
    def test_matched_balanced_value_is_two_log_two(self):
        value = d_nce_population(_std_normal_pdf, _std_normal_logpdf, _std_normal_logpdf, 10, 10)
        assert value == pytest.approx(2 * math.log(2), abs=1e-9)

    def test_matched_unbalanced_value(self):
        """With data:noise odds 3:1 and matched densities, the log odds are
        the constant log 3, so the value is log(4/3) + log(4)/3."""
        value = d_nce_population(_std_normal_pdf, _std_normal_logpdf, _std_normal_logpdf, 3, 1)
        expected = math.log(4.0 / 3.0) + math.log(4.0) / 3.0
        assert value == pytest.approx(expected, abs=1e-9)

    def test_mismatch_raises_value_above_floor(self):
        shifted = lambda x: _std_normal_logpdf(x - 1.0)
        value = d_nce_population(_std_normal_pdf, shifted, _std_normal_logpdf, 10, 10)
        assert value > 2 * math.log(2) + 1e-3

    def test_tolerance_refinement_is_stable(self):
        coarse = d_nce_population(
            _std_normal_pdf, _std_normal_logpdf, _std_normal_logpdf, 10, 10, tol=1e-9
        )
        fine = d_nce_population(
            _std_normal_pdf, _std_normal_logpdf, _std_normal_logpdf, 10, 10, tol=5e-10
        )
        assert abs(coarse - fine) < 1e-7


class TestPopulationSmValue:
    def test_standard_normal_parameters_give_minus_one(self):
        """At theta = (-1/2, 0) the pointwise value is x**2 - 2, whose
        standard normal expectation is -1."""
        rho = lambda x: x * x - 2.0
        value = d_sm_population(_std_normal_pdf, rho)
        assert value == pytest.approx(-1.0, abs=1e-9)

    def test_true_parameters_minimize_value(self):
        def rho_for(theta1):
            return lambda x: 4 * theta1 + (2 * theta1 * x) ** 2

        center = d_sm_population(_std_normal_pdf, rho_for(-0.5))
        for theta1 in (-0.55, -0.45):
            assert d_sm_population(_std_normal_pdf, rho_for(theta1)) > center

    def test_tolerance_refinement_is_stable(self):
        rho = lambda x: x * x - 2.0
        coarse = d_sm_population(_std_normal_pdf, rho, tol=1e-9)
        fine = d_sm_population(_std_normal_pdf, rho, tol=5e-10)
        assert abs(coarse - fine) < 1e-7

    @pytest.mark.filterwarnings("ignore::UserWarning")
    @pytest.mark.filterwarnings("ignore:.*divergent.*")
    def test_nonconvergent_integrand_raises(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(QuadratureNonConvergence):
                d_sm_population(_std_normal_pdf, lambda x: math.sin(1e7 * x * x))


class TestWaldInterval:
    def test_degenerate_proportion_collapses_interval(self):
        assert wald_ci(1.0, 50) == (1.0, 1.0)
        assert wald_ci(0.0, 50) == (0.0, 0.0)

    def test_half_proportion_interval(self):
        lo, hi = wald_ci(0.5, 100)
        assert lo == pytest.approx(0.402, abs=1e-3)
        assert hi == pytest.approx(0.598, abs=1e-3)

    def test_half_width(self):
        lo, hi = wald_ci(0.187, 1000)
        assert (hi - lo) / 2 == pytest.approx(0.0242, abs=5e-5)

    def test_nonpositive_count_rejected(self):
        for n in (0, -5):
            with pytest.raises(ValueError):
                wald_ci(0.3, n)
