"""Tests for the dense symmetric-positive-definite linear-algebra kernel.

Fixed small instances are verified against hand-computed values; random
instances are checked against independently computed quantities (explicit
inverses, residual norms) over seeded property loops.
"""

import math

import numpy as np
import pytest

from nnic.exceptions import NotPositiveDefinite, SingularMatrix
from nnic.linalg import (
    cholesky_spd,
    inv_spd,
    is_pd,
    logdet_spd,
    solve_spd,
    spd_solver,
    trace_product_inv,
)


def _random_spd(rng, dim, scale=1.0):
    """A well-conditioned random SPD matrix of the given dimension."""
    a = rng.standard_normal((dim, dim))
    return scale * (a @ a.T) + dim * np.eye(dim)


class TestSolveSpd:
    def test_identity_returns_rhs(self):
        """solve(I, B) = B for any right-hand side."""
        rng = np.random.default_rng(11)
        b = rng.standard_normal((3, 4))
        np.testing.assert_array_equal(solve_spd(np.eye(3), b), b)

    def test_diagonal_solve(self):
        """diag(2, 4) X = (2, 4)^T has solution (1, 1)^T."""
        a = np.array([[2.0, 0.0], [0.0, 4.0]])
        b = np.array([[2.0], [4.0]])
        np.testing.assert_allclose(solve_spd(a, b), np.array([[1.0], [1.0]]))

    def test_hand_inversion(self):
        """[[4,1],[1,3]]^{-1} = (1/11) [[3,-1],[-1,4]]."""
        a = np.array([[4.0, 1.0], [1.0, 3.0]])
        x = solve_spd(a, np.eye(2))
        np.testing.assert_allclose(x, np.array([[3.0, -1.0], [-1.0, 4.0]]) / 11.0,
                                   atol=1e-12)
        np.testing.assert_allclose(a @ x, np.eye(2), atol=1e-12)

    def test_residual_bound_random_instances(self):
        """|AX - B|_inf <= 1e-8 |B|_inf on random SPD systems up to 50x50."""
        rng = np.random.default_rng(2024)
        for dim in (1, 2, 5, 13, 50):
            a = _random_spd(rng, dim)
            b = rng.standard_normal((dim, 3))
            x = solve_spd(a, b)
            residual = np.max(np.abs(a @ x - b))
            assert residual <= 1e-8 * np.max(np.abs(b))

    def test_vector_rhs_keeps_shape(self):
        rng = np.random.default_rng(3)
        a = _random_spd(rng, 4)
        b = rng.standard_normal(4)
        assert solve_spd(a, b).shape == (4,)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            solve_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))


class TestSpdSolver:
    def test_matches_solve_spd(self):
        """The factor-once solver returns the same solutions as solve_spd."""
        rng = np.random.default_rng(5)
        a = _random_spd(rng, 6)
        solve = spd_solver(a)
        for _ in range(4):
            b = rng.standard_normal(6)
            np.testing.assert_allclose(solve(b), solve_spd(a, b), atol=1e-12)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_solver(np.array([[0.0, 1.0], [1.0, 0.0]]))


class TestTraceProductInv:
    def test_equal_matrices_give_dimension(self):
        """tr(A A^{-1}) = dim, exactly up to 1e-10, for random SPD A."""
        rng = np.random.default_rng(7)
        for dim in (1, 3, 8):
            a = _random_spd(rng, dim)
            assert abs(trace_product_inv(a, a) - dim) <= 1e-10

    def test_diagonal_arithmetic(self):
        """tr(diag(2,4) diag(1,2)^{-1}) = 2/1 + 4/2 = 4."""
        i_mat = np.diag([2.0, 4.0])
        j_mat = np.diag([1.0, 2.0])
        assert trace_product_inv(i_mat, j_mat) == pytest.approx(4.0, abs=1e-12)

    def test_matches_explicit_inverse(self):
        """Agrees with the trace computed from an explicitly inverted matrix."""
        rng = np.random.default_rng(19)
        for _ in range(20):
            i_mat = _random_spd(rng, 3)
            j_mat = _random_spd(rng, 3)
            expected = float(np.trace(i_mat @ np.linalg.inv(j_mat)))
            assert trace_product_inv(i_mat, j_mat) == pytest.approx(expected, abs=1e-10)

    def test_singular_second_argument(self):
        with pytest.raises((SingularMatrix, NotPositiveDefinite)):
            trace_product_inv(np.eye(2), np.zeros((2, 2)))


class TestLogdetSpd:
    def test_identity_is_zero(self):
        assert logdet_spd(np.eye(4)) == pytest.approx(0.0, abs=1e-14)

    def test_diagonal_exponentials(self):
        """logdet diag(e, e^2) = 3."""
        assert logdet_spd(np.diag([math.e, math.e**2])) == pytest.approx(3.0, abs=1e-12)

    def test_two_by_two_by_hand(self):
        """det [[2,1],[1,2]] = 3."""
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert logdet_spd(a) == pytest.approx(math.log(3.0), abs=1e-12)

    def test_inverse_cancels(self):
        """logdet(A) + logdet(A^{-1}) = 0 within 1e-8 on random SPD A."""
        rng = np.random.default_rng(23)
        for dim in (2, 5, 12):
            a = _random_spd(rng, dim)
            total = logdet_spd(a) + logdet_spd(inv_spd(a))
            assert abs(total) <= 1e-8

    def test_raises_on_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            logdet_spd(np.array([[1.0, 3.0], [3.0, 1.0]]))


class TestIsPd:
    def test_accepts_spd(self):
        rng = np.random.default_rng(29)
        assert is_pd(_random_spd(rng, 5))

    def test_rejects_indefinite_and_singular(self):
        assert not is_pd(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert not is_pd(np.zeros((3, 3)))


class TestCholeskyInv:
    def test_cholesky_reconstructs(self):
        rng = np.random.default_rng(31)
        a = _random_spd(rng, 6)
        factor = cholesky_spd(a)
        np.testing.assert_allclose(factor @ factor.T, a, atol=1e-10)

    def test_inv_spd_matches_numpy(self):
        rng = np.random.default_rng(37)
        a = _random_spd(rng, 5)
        np.testing.assert_allclose(inv_spd(a), np.linalg.inv(a), atol=1e-10)
