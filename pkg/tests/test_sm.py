"""Tests for score matching: pointwise losses, closed-form and iterative
fits, the information criterion, and leave-one-out refits."""

import numpy as np
import pytest

from nnic.exceptions import CapabilityError, SingularMatrix
from nnic.linalg import inv_spd
from nnic.models import (
    GGM,
    BivariateVonMises,
    GraphSpec,
    LogGGM,
    NNGaussian1D,
    TruncatedGGM,
)
from nnic.sm import (
    fit_sm_closed_form,
    fit_sm_generic,
    rho_sm,
    rho_sm_plus,
    sm_I_hat,
    sm_J_hat,
    sm_loocv,
    sm_loss,
    smic,
)


def _precision_from(graph, theta):
    """Assemble the symmetric precision matrix a graph parametrizes."""
    k = np.zeros((graph.d, graph.d))
    k[np.diag_indices(graph.d)] = theta[: graph.d]
    for idx, (i, j) in enumerate(graph.edges):
        k[i - 1, j - 1] = k[j - 1, i - 1] = theta[graph.d + idx]
    return k


def _chain_sample(rng, n):
    """Rows from the zero-mean Gaussian with a fixed chain precision."""
    precision = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.55], [0.0, 0.55, 1.0]])
    chol = np.linalg.cholesky(inv_spd(precision))
    return rng.standard_normal((n, 3)) @ chol.T


class TestPointwiseLoss:
    """The per-point losses on the reals and on the non-negative orthant."""

    def test_quadratic_family_value(self):
        """For the 1-D quadratic-exponential family the loss expands to
        4 theta1 + (2 theta1 x + theta2)^2; at theta=(-0.5,0), x=0 it is -2."""
        model = NNGaussian1D()
        theta = np.array([-0.5, 0.0])
        assert rho_sm(np.zeros((1, 1)), theta, model)[0] == pytest.approx(
            -2.0, abs=1e-14
        )
        rng = np.random.default_rng(31)
        for _ in range(50):
            th = np.array([rng.uniform(-1.5, -0.1), rng.normal()])
            x = rng.standard_normal((6, 1)) * 1.5
            direct = 4.0 * th[0] + (2.0 * th[0] * x[:, 0] + th[1]) ** 2
            np.testing.assert_allclose(
                rho_sm(x, th, model), direct, rtol=0, atol=1e-12
            )

    def test_precision_model_expansion(self):
        """For a Gaussian precision model the loss is -2 tr K + ||K x||^2;
        the identity precision at x=(1,1) gives -2."""
        model = GGM(GraphSpec.full(2))
        identity_theta = np.array([1.0, 1.0, 0.0])
        x = np.array([[1.0, 1.0]])
        assert rho_sm(x, identity_theta, model)[0] == pytest.approx(-2.0, abs=1e-14)
        rng = np.random.default_rng(5)
        for _ in range(30):
            theta = np.array(
                [rng.uniform(0.8, 2.0), rng.uniform(0.8, 2.0), rng.uniform(-0.5, 0.5)]
            )
            k = _precision_from(GraphSpec.full(2), theta)
            z = rng.standard_normal((4, 2))
            direct = -2.0 * np.trace(k) + np.sum((z @ k.T) ** 2, axis=1)
            np.testing.assert_allclose(
                rho_sm(z, theta, model), direct, rtol=0, atol=1e-10
            )

    def test_orthant_loss_vanishes_at_origin(self):
        """Every term of the orthant-corrected loss carries a factor of a
        coordinate, so the loss at the zero vector is zero."""
        model = TruncatedGGM(GraphSpec.full(2))
        theta = np.array([1.0, 1.0, 0.3])
        assert rho_sm_plus(np.zeros((1, 2)), theta, model)[0] == 0.0

    def test_orthant_loss_zero_coordinate(self):
        """A zero coordinate contributes nothing: the loss equals the sum of
        the remaining coordinates' terms."""
        model = TruncatedGGM(GraphSpec.full(2))
        rng = np.random.default_rng(13)
        for _ in range(20):
            theta = np.array(
                [rng.uniform(0.8, 1.5), rng.uniform(0.8, 1.5), rng.uniform(-0.3, 0.3)]
            )
            a = rng.uniform(0.2, 2.0)
            x = np.array([[a, 0.0]])
            k = _precision_from(GraphSpec.full(2), theta)
            dx = -(x @ k.T)
            dxx = -k[0, 0]
            expected = 2.0 * a * dx[0, 0] + a * a * dxx + a * a * dx[0, 0] ** 2
            assert rho_sm_plus(x, theta, model)[0] == pytest.approx(
                expected, abs=1e-12
            )

    def test_domain_dispatch(self):
        """The combined loss picks the plain variant on the reals, the
        corrected variant on orthants, and rejects non-differentiable
        families."""
        rng = np.random.default_rng(3)
        plain = GGM(GraphSpec.path(3))
        z = rng.standard_normal((5, 3))
        theta = np.array([1.1, 1.0, 1.2, 0.2, -0.2])
        np.testing.assert_array_equal(
            sm_loss(z, theta, plain), rho_sm(z, theta, plain)
        )
        orthant = TruncatedGGM(GraphSpec.path(3))
        zp = rng.uniform(0.2, 2.0, (5, 3))
        np.testing.assert_array_equal(
            sm_loss(zp, theta, orthant), rho_sm_plus(zp, theta, orthant)
        )
        with pytest.raises(CapabilityError):
            sm_loss(rng.uniform(0.0, 6.0, (4, 2)), np.ones(5), BivariateVonMises())

    @pytest.mark.parametrize(
        "family",
        ["gaussian-1d", "ggm-path", "ggm-full", "truncated", "log-domain"],
    )
    def test_quadratic_terms_match_direct_loss(self, family):
        """The per-sample quadratic-form pieces reassemble the loss exactly:
        0.5 theta' Gamma theta + g' theta + const equals the direct value."""
        rng = np.random.default_rng(47)
        if family == "gaussian-1d":
            model, dim = NNGaussian1D(), 2
            draw = lambda n: rng.standard_normal((n, 1)) * 1.4
        elif family == "ggm-path":
            model, dim = GGM(GraphSpec.path(3)), 5
            draw = lambda n: rng.standard_normal((n, 3))
        elif family == "ggm-full":
            model, dim = GGM(GraphSpec.full(2)), 3
            draw = lambda n: rng.standard_normal((n, 2))
        elif family == "truncated":
            model, dim = TruncatedGGM(GraphSpec.path(3)), 5
            draw = lambda n: rng.uniform(0.1, 2.5, (n, 3))
        else:
            model, dim = LogGGM(GraphSpec.path(2)), 3
            draw = lambda n: rng.uniform(0.3, 2.5, (n, 2))
        for _ in range(20):
            theta = rng.uniform(-1.0, 1.0, dim)
            x = draw(5)
            gamma, g, const = model.exp_family_terms(x)
            quad = (
                0.5 * np.einsum("nij,i,j->n", gamma, theta, theta)
                + g @ theta
                + const
            )
            np.testing.assert_allclose(
                quad, sm_loss(x, theta, model), rtol=0, atol=1e-10
            )


class TestClosedForm:
    """Direct solutions of the empirical normal equations."""

    def test_three_point_toy(self):
        """The sample {-1, 0, 1} pins the fit at (-3/4, 0) by hand algebra."""
        fit = fit_sm_closed_form(NNGaussian1D(), np.array([[-1.0], [0.0], [1.0]]))
        np.testing.assert_allclose(fit.theta_hat, [-0.75, 0.0], rtol=0, atol=1e-12)
        assert fit.objective_value == pytest.approx(-1.5, abs=1e-12)
        assert fit.method == "closed-form-linear"
        assert fit.domain == "reals"
        assert fit.n_data == 3

    def test_equals_gaussian_mle_map(self):
        """For the 1-D quadratic-exponential family the estimator reduces
        algebraically to the Gaussian maximum-likelihood map."""
        model = NNGaussian1D()
        for seed in range(5):
            rng = np.random.default_rng(seed)
            x = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), (60, 1))
            fit = fit_sm_closed_form(model, x)
            m1, s2 = x.mean(), x.var()
            np.testing.assert_allclose(
                fit.theta_hat, [-0.5 / s2, m1 / s2], rtol=0, atol=1e-8
            )

    def test_full_graph_equals_inverse_second_moment(self):
        """With every edge present the fitted precision matrix inverts the
        sample second-moment matrix."""
        graph = GraphSpec.full(3)
        rng = np.random.default_rng(11)
        x = _chain_sample(rng, 300)
        fit = fit_sm_closed_form(GGM(graph), x)
        k_hat = _precision_from(graph, fit.theta_hat)
        second_moment = x.T @ x / len(x)
        np.testing.assert_allclose(
            k_hat, inv_spd(second_moment), rtol=0, atol=1e-8
        )

    def test_zero_pattern_respected(self):
        """Absent edges stay exactly zero in the fitted precision matrix."""
        graph = GraphSpec.path(3)
        rng = np.random.default_rng(12)
        fit = fit_sm_closed_form(GGM(graph), _chain_sample(rng, 200))
        k_hat = _precision_from(graph, fit.theta_hat)
        assert k_hat[0, 2] == 0.0
        assert k_hat[2, 0] == 0.0

    def test_identical_rows_rejected(self):
        """A sample of identical rows makes the quadratic term rank
        deficient, which is an error rather than a huge garbage solution."""
        model = NNGaussian1D()
        with pytest.raises(SingularMatrix):
            fit_sm_closed_form(model, np.full((5, 1), 1.3))
        with pytest.raises(SingularMatrix):
            fit_sm_closed_form(model, np.zeros((3, 1)))

    def test_residual_certificate(self):
        """Accepted solutions satisfy the normal equations to one part in
        1e8 of the right-hand side."""
        rng = np.random.default_rng(19)
        for _ in range(10):
            x = rng.standard_normal((40, 3))
            model = GGM(GraphSpec.path(3))
            fit = fit_sm_closed_form(model, x)
            gamma, g, _ = model.exp_family_terms(x)
            residual = gamma.mean(axis=0) @ fit.theta_hat + g.mean(axis=0)
            assert np.max(np.abs(residual)) <= 1e-8 * np.max(np.abs(g.mean(axis=0)))


class TestGenericFit:
    """The iterative route and its agreement with the direct solution."""

    def test_agrees_with_closed_form(self):
        """On quadratic families the iterative minimizer lands within 1e-6
        of the direct solution."""
        rng = np.random.default_rng(23)
        x = _chain_sample(rng, 80)
        model = GGM(GraphSpec.path(3))
        closed = fit_sm_closed_form(model, x)
        generic = fit_sm_generic(model, x)
        np.testing.assert_allclose(
            generic.theta_hat, closed.theta_hat, rtol=0, atol=1e-6
        )
        assert generic.method == "cg"

    def test_stationarity_at_direct_solution(self):
        """The analytic gradient of the mean loss vanishes at the direct
        solution."""
        rng = np.random.default_rng(29)
        x = rng.standard_normal((60, 1)) * 1.2
        model = NNGaussian1D()
        fit = fit_sm_closed_form(model, x)
        gamma, g, _ = model.exp_family_terms(x)
        grad = gamma.mean(axis=0) @ fit.theta_hat + g.mean(axis=0)
        assert np.linalg.norm(grad) <= 1e-8

    def test_log_domain_instance(self):
        """A two-node log-domain instance fits iteratively to a stationary
        point and matches the direct solution."""
        rng = np.random.default_rng(8)
        model = LogGGM(GraphSpec.path(2))
        x = rng.uniform(0.5, 2.0, (30, 2))
        generic = fit_sm_generic(model, x)
        gamma, g, _ = model.exp_family_terms(x)
        grad = gamma.mean(axis=0) @ generic.theta_hat + g.mean(axis=0)
        assert np.linalg.norm(grad) <= 1e-7
        closed = fit_sm_closed_form(model, x)
        np.testing.assert_allclose(
            generic.theta_hat, closed.theta_hat, rtol=0, atol=1e-6
        )
        assert generic.domain == "nonneg"

    def test_objective_exactly_quadratic(self):
        """Along any parameter segment the mean loss has a constant second
        difference: halving the step divides the difference by four."""
        rng = np.random.default_rng(37)
        model = GGM(GraphSpec.full(2))
        x = rng.standard_normal((25, 2))
        theta_a = np.array([1.2, 0.9, 0.1])
        theta_b = np.array([0.7, 1.4, -0.3])

        def f(t):
            return float(np.mean(sm_loss(x, theta_a + t * (theta_b - theta_a), model)))

        for h in (0.4, 0.1):
            coarse = f(0.5 + h) - 2.0 * f(0.5) + f(0.5 - h)
            fine = f(0.5 + h / 2) - 2.0 * f(0.5) + f(0.5 - h / 2)
            assert abs(coarse - 4.0 * fine) <= 1e-10 * max(1.0, abs(coarse))


@pytest.fixture(scope="module")
def fitted():
    rng = np.random.default_rng(41)
    x = _chain_sample(rng, 150)
    model = GGM(GraphSpec.path(3))
    return model, x, fit_sm_closed_form(model, x)


class TestInformationPieces:
    """The curvature and outer-product matrices and the criterion."""

    def test_curvature_is_mean_quadratic_term(self, fitted):
        """For quadratic families the loss Hessian is the averaged
        quadratic term, independent of theta."""
        model, x, fit = fitted
        gamma, _, _ = model.exp_family_terms(x)
        np.testing.assert_allclose(
            sm_J_hat(model, fit.theta_hat, x), gamma.mean(axis=0), rtol=0, atol=1e-14
        )

    def test_outer_product_is_uncentered(self, fitted):
        """The outer-product matrix averages raw per-point loss gradients
        without centering."""
        model, x, fit = fitted
        gamma, g, _ = model.exp_family_terms(x)
        scores = np.einsum("nij,j->ni", gamma, fit.theta_hat) + g
        expected = scores.T @ scores / len(x)
        np.testing.assert_allclose(
            sm_I_hat(model, fit.theta_hat, x), expected, rtol=0, atol=1e-12
        )

    def test_criterion_assembly(self, fitted):
        """The criterion is N times the fitted loss plus the trace of the
        outer-product matrix against the inverted curvature."""
        model, x, fit = fitted
        i_mat = sm_I_hat(model, fit.theta_hat, x)
        j_mat = sm_J_hat(model, fit.theta_hat, x)
        expected = len(x) * fit.objective_value + float(
            np.trace(i_mat @ np.linalg.inv(j_mat))
        )
        assert smic(fit, x) == pytest.approx(expected, abs=1e-8)

    def test_criterion_rejects_mismatched_sample(self, fitted):
        """Scoring a fit against a different-sized sample is an error."""
        model, x, fit = fitted
        with pytest.raises(ValueError, match="sample count"):
            smic(fit, x[:100])


class TestLeaveOneOut:
    """Downdated refits and the cross-validated score."""

    def test_matches_brute_force_refits(self):
        """On a three-point sample the downdated folds equal refits computed
        from scratch on each two-point subset."""
        model = NNGaussian1D()
        x = np.array([[-1.1], [0.2], [0.9]])
        expected = 0.0
        for t in range(3):
            fold_fit = fit_sm_closed_form(model, np.delete(x, t, axis=0))
            expected += float(sm_loss(x[t : t + 1], fold_fit.theta_hat, model)[0])
        assert sm_loocv(model, x) == pytest.approx(expected, abs=1e-8)

    def test_two_points_degenerate(self):
        """With two points each fold has one row, whose quadratic term is
        rank deficient for this family."""
        with pytest.raises(SingularMatrix):
            sm_loocv(NNGaussian1D(), np.array([[0.2], [1.1]]))

    def test_duplicated_sample_redundancy(self):
        """With every point duplicated, each fold keeps the removed point's
        twin, so the score approaches the full-fit loss total."""
        model = NNGaussian1D()
        rng = np.random.default_rng(8)
        x = rng.standard_normal((6000, 1)) * 0.6
        doubled = np.repeat(x, 2, axis=0)
        full = fit_sm_closed_form(model, doubled)
        score = sm_loocv(model, doubled)
        reference = rho_sm(doubled, full.theta_hat, model).sum()
        assert abs(score - reference) <= 1e-3 * abs(reference)

    def test_full_fit_shortcut_matches(self):
        """Supplying the precomputed full fit to the iterative path changes
        nothing but the work performed."""
        rng = np.random.default_rng(53)
        model = LogGGM(GraphSpec.path(2))
        x = rng.uniform(0.4, 2.2, (12, 2))
        fit = fit_sm_generic(model, x)
        assert sm_loocv(model, x, full_fit=fit) == pytest.approx(
            sm_loocv(model, x), abs=1e-12
        )

    @pytest.mark.slow
    def test_ranking_agrees_with_information_criterion(self):
        """Across replicated graph-selection problems the cross-validated
        score and the criterion pick the same graph in at least 85 percent
        of replicates."""
        graphs = GraphSpec.enumerate_all(3)
        agreements = 0
        n_reps = 10
        for rep in range(n_reps):
            rng = np.random.default_rng(2000 + rep)
            x = _chain_sample(rng, 200)
            best_ic, best_cv = None, None
            ic_value, cv_value = np.inf, np.inf
            for graph in graphs:
                model = GGM(graph)
                try:
                    fit = fit_sm_closed_form(model, x)
                    by_ic = smic(fit, x)
                    by_cv = sm_loocv(model, x)
                except SingularMatrix:
                    continue
                if by_ic < ic_value:
                    ic_value, best_ic = by_ic, graph.to_string()
                if by_cv < cv_value:
                    cv_value, best_cv = by_cv, graph.to_string()
            agreements += best_ic == best_cv
        assert agreements / n_reps >= 0.85
