"""Unit tests for the jittered Cholesky factorization."""

import numpy as np
import pytest

from src.kernel.errors import IllConditionedError
from src.kernel.linalg import identity_residual, jittered_cholesky, jittered_pivot


class TestJitteredCholesky:
    def test_well_conditioned_needs_no_jitter(self):
        a = np.array([[4.0, 1.0], [1.0, 3.0]])
        factor = jittered_cholesky(a)
        assert factor.jitter == 0.0
        np.testing.assert_allclose(factor.lower @ factor.lower.T, a, atol=1e-14)

    def test_singular_matrix_gets_jitter(self):
        """A rank-one matrix is factorable only after jitter."""
        v = np.array([1.0, 1.0, 1.0])
        factor = jittered_cholesky(np.outer(v, v))
        assert factor.jitter > 0.0
        assert factor.jitter <= 1e-9 * 1.0 * 10.0 ** 2

    def test_jitter_scales_with_reference_variance(self):
        v = np.array([1.0, 1.0])
        factor = jittered_cholesky(np.zeros((2, 2)), scale=5.0)
        assert factor.jitter == pytest.approx(5e-9)
        assert jittered_cholesky(np.outer(v, v) * 1e6).jitter == pytest.approx(1e-3)

    def test_indefinite_matrix_raises(self):
        with pytest.raises(IllConditionedError):
            jittered_cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_empty_matrix(self):
        assert jittered_cholesky(np.zeros((0, 0))).size == 0

    def test_solve_and_inverse(self, rng):
        b = rng.standard_normal((5, 5))
        a = b @ b.T + 5.0 * np.eye(5)
        factor = jittered_cholesky(a)
        rhs = rng.standard_normal(5)
        np.testing.assert_allclose(a @ factor.solve(rhs), rhs, atol=1e-10)
        assert identity_residual(a, factor.inverse()) < 1e-12

    def test_retry_count_follows_settings(self, monkeypatch):
        monkeypatch.setenv("JITTER_RETRIES", "0")
        v = np.array([1.0, 1.0])
        with pytest.raises(IllConditionedError):
            jittered_cholesky(np.outer(v, v))


class TestJitteredPivot:
    """Scalar pivots follow the same escalation as full factorizations."""

    def test_healthy_pivot_unchanged(self):
        assert jittered_pivot(0.25, scale=1.0) == 0.25

    def test_zero_pivot_gets_first_jitter(self):
        assert jittered_pivot(0.0, scale=2.0) == pytest.approx(2e-9)

    def test_small_negative_pivot_escalates(self):
        assert jittered_pivot(-5e-9, scale=1.0) == pytest.approx(-5e-9 + 1e-8)

    def test_hopeless_pivot_raises(self):
        with pytest.raises(IllConditionedError):
            jittered_pivot(-1.0, scale=1.0)

    def test_no_retries_means_no_jitter(self, monkeypatch):
        monkeypatch.setenv("JITTER_RETRIES", "0")
        with pytest.raises(IllConditionedError):
            jittered_pivot(0.0, scale=1.0)
