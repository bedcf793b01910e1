"""Tests for the training matrix and the QR based least squares helpers."""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from numerics.api import (
    build_training_matrix,
    least_squares,
    masked_least_squares,
    trace_inverse_gram,
)
from numerics.errors import (
    DimensionMismatchError,
    InvalidTrainingError,
    RankDeficientError,
    SingularGramError,
)


class TestTrainingMatrix:
    """Shape and entries of the convolution matrix."""

    def test_single_symbol_gives_identity(self):
        model = build_training_matrix([1.0], 3)
        assert_array_equal(model.U, np.eye(3))
        assert model.N == 3

    def test_two_symbol_example(self):
        model = build_training_matrix([1.0, -1.0], 2)
        assert_array_equal(model.U, [[1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]])

    def test_entries_follow_shifted_training(self, rng):
        u = np.where(rng.integers(0, 2, size=5) == 1, 1.0, -1.0)
        model = build_training_matrix(u, 30)
        assert model.U.shape == (34, 30)
        for r in range(34):
            for c in range(30):
                expected = u[r - c] if 0 <= r - c < 5 else 0.0
                assert model.U[r, c] == expected

    def test_rejects_empty_training(self):
        with pytest.raises(InvalidTrainingError, match="at least one symbol"):
            build_training_matrix([], 4)

    def test_rejects_memory_shorter_than_training(self):
        with pytest.raises(InvalidTrainingError, match="at least the training length"):
            build_training_matrix([1.0, 1.0, -1.0], 2)

    def test_matrix_is_read_only(self):
        model = build_training_matrix([1.0, -1.0], 4)
        with pytest.raises(ValueError):
            model.U[0, 0] = 5.0

    def test_scaled_multiplies_columns(self, pm_one_model, rng):
        h = rng.standard_normal(30)
        assert_allclose(pm_one_model.scaled(h), pm_one_model.U @ np.diag(h))


class TestLeastSquares:
    """QR least squares against the normal equations."""

    def test_consistent_system_is_solved_exactly(self, rng):
        A = rng.standard_normal((12, 5))
        x = rng.standard_normal(5)
        assert_allclose(least_squares(A, A @ x), x, atol=1e-10)

    def test_matches_normal_equations(self, rng):
        A = rng.standard_normal((20, 6))
        y = rng.standard_normal(20)
        expected = np.linalg.solve(A.T @ A, A.T @ y)
        assert_allclose(least_squares(A, y), expected, rtol=1e-9, atol=1e-12)

    def test_residual_is_orthogonal_to_columns(self, rng):
        A = rng.standard_normal((15, 4))
        y = rng.standard_normal(15)
        x = least_squares(A, y)
        assert np.max(np.abs(A.T @ (y - A @ x))) <= 1e-10

    def test_no_perturbation_improves_the_fit(self, rng):
        A = rng.standard_normal((10, 3))
        y = rng.standard_normal(10)
        x = least_squares(A, y)
        best = np.sum((y - A @ x) ** 2)
        for _ in range(20):
            other = x + 1e-3 * rng.standard_normal(3)
            assert np.sum((y - A @ other) ** 2) >= best

    def test_rank_deficient_matrix_is_rejected(self, rng):
        column = rng.standard_normal(8)
        A = np.column_stack([column, column, rng.standard_normal(8)])
        with pytest.raises(RankDeficientError):
            least_squares(A, rng.standard_normal(8))

    def test_underdetermined_system_is_rejected(self, rng):
        with pytest.raises(RankDeficientError, match="Underdetermined"):
            least_squares(rng.standard_normal((3, 5)), rng.standard_normal(3))

    def test_length_mismatch_is_rejected(self, rng):
        with pytest.raises(DimensionMismatchError):
            least_squares(rng.standard_normal((6, 2)), rng.standard_normal(5))


class TestMaskedLeastSquares:
    """Support restricted fits."""

    def test_full_support_equals_unrestricted_fit(self, pm_one_model, rng):
        y = rng.standard_normal(pm_one_model.N)
        assert_allclose(
            masked_least_squares(pm_one_model, np.ones(30), y),
            least_squares(pm_one_model.U, y),
            rtol=1e-10, atol=1e-12,
        )

    def test_empty_support_gives_zero(self, pm_one_model, rng):
        h_hat = masked_least_squares(pm_one_model, np.zeros(30), rng.standard_normal(pm_one_model.N))
        assert_array_equal(h_hat, np.zeros(30))

    def test_recovers_sparse_channel_without_noise(self, rng):
        model = build_training_matrix([1.0, -1.0, 1.0], 6)
        h = np.zeros(6)
        h[[1, 4]] = [0.7, -1.3]
        b = (h != 0).astype(int)
        h_hat = masked_least_squares(model, b, model.U @ h)
        assert_allclose(h_hat, h, atol=1e-12)

    def test_off_support_entries_are_exactly_zero(self, pm_one_model, rng):
        b = np.zeros(30, dtype=int)
        b[[2, 9, 17]] = 1
        h_hat = masked_least_squares(pm_one_model, b, rng.standard_normal(pm_one_model.N))
        assert np.all(h_hat[b == 0] == 0.0)

    def test_wrong_support_length_is_rejected(self, pm_one_model):
        with pytest.raises(DimensionMismatchError):
            masked_least_squares(pm_one_model, np.ones(29), np.zeros(pm_one_model.N))


class TestTraceInverseGram:
    """Trace of the inverse Gram matrix."""

    def test_identity(self):
        assert trace_inverse_gram(np.eye(4)) == pytest.approx(4.0, rel=1e-12)

    def test_scaled_identity(self):
        assert trace_inverse_gram(2.0 * np.eye(3)) == pytest.approx(0.75, rel=1e-12)

    def test_matches_explicit_inverse(self, rng):
        A = rng.standard_normal((9, 4))
        expected = np.trace(np.linalg.inv(A.T @ A))
        assert trace_inverse_gram(A) == pytest.approx(expected, rel=1e-9)

    def test_singular_gram_is_rejected(self, rng):
        column = rng.standard_normal(6)
        with pytest.raises(SingularGramError):
            trace_inverse_gram(np.column_stack([column, 2.0 * column]))

    def test_wide_matrix_is_rejected(self, rng):
        with pytest.raises(SingularGramError):
            trace_inverse_gram(rng.standard_normal((2, 3)))
