import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bdnn_hash.numerics import (
    DimensionError,
    InsufficientSamplesError,
    as_matrix,
    covariance,
    sgn,
    sigmoid,
    svd_small,
    top_eigenvectors,
)


def covariance_loops(X):
    D, m = len(X), len(X[0])
    mu = [sum(X[i][j] for j in range(m)) / m for i in range(D)]
    C = np.zeros((D, D))
    for a in range(D):
        for b in range(D):
            C[a, b] = sum((X[a][j] - mu[a]) * (X[b][j] - mu[b]) for j in range(m)) / (m - 1)
    return C


def jacobi_eigen(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi rotations; returns eigenvalues and eigenvector columns."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A ** 2) - np.sum(np.diag(A) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta ** 2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t ** 2 + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    return np.diag(A), V


class TestSgn:
    def test_examples(self):
        assert sgn(0.5) == 1
        assert sgn(-2.0) == -1
        assert sgn(0.0) == 1

    def test_array(self):
        out = sgn(np.array([[0.3, -0.2], [-1.5, 0.0]]))
        np.testing.assert_array_equal(out, [[1, -1], [-1, 1]])

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite(self, bad):
        with pytest.raises(ValueError):
            sgn(bad)

    @given(st.floats(allow_nan=False, allow_infinity=False).filter(lambda v: v != 0))
    def test_odd_and_nonzero(self, x):
        assert sgn(x) in (-1, 1)
        assert sgn(-x) == -sgn(x)


class TestCovariance:
    def test_hand_example(self):
        np.testing.assert_allclose(covariance([[1, -1], [0, 0]]), [[2, 0], [0, 0]])

    def test_identical_columns(self):
        X = np.tile([[1.0], [2.0], [-3.0]], (1, 5))
        np.testing.assert_allclose(covariance(X), np.zeros((3, 3)), atol=0)

    def test_matches_loop_oracle(self, rng):
        X = rng.normal(size=(5, 50))
        np.testing.assert_allclose(covariance(X), covariance_loops(X.tolist()), atol=1e-12)

    def test_needs_two_samples(self):
        with pytest.raises(InsufficientSamplesError):
            covariance(np.ones((3, 1)))

    @settings(max_examples=50)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 12)),
                  elements=st.floats(-1e3, 1e3)))
    def test_symmetric_psd(self, X):
        C = covariance(X)
        np.testing.assert_array_equal(C, C.T)
        scale = max(np.linalg.norm(C), 1.0)
        assert np.linalg.eigvalsh(C).min() >= -1e-10 * scale


class TestTopEigenvectors:
    def test_diagonal(self):
        V = top_eigenvectors(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(np.abs(V), [[1, 0], [0, 1], [0, 0]], atol=1e-12)

    def test_degenerate_identity(self):
        A = np.eye(3)
        V = top_eigenvectors(A, 3)
        np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-10)
        for j in range(3):
            assert np.linalg.norm(A @ V[:, j] - V[:, j]) <= 1e-8 * np.linalg.norm(A)

    def test_matches_jacobi(self, rng):
        M = rng.normal(size=(6, 6))
        A = M + M.T
        w_ref, V_ref = jacobi_eigen(A)
        order = np.argsort(-w_ref)
        V, w = top_eigenvectors(A, 6, return_values=True)
        np.testing.assert_allclose(w, w_ref[order], atol=1e-8)
        for j in range(6):
            ref = V_ref[:, order[j]]
            assert min(np.linalg.norm(V[:, j] - ref), np.linalg.norm(V[:, j] + ref)) < 1e-8
            assert np.linalg.norm(A @ V[:, j] - w[j] * V[:, j]) <= 1e-8 * np.linalg.norm(A)

    def test_orthonormal(self, rng):
        M = rng.normal(size=(9, 9))
        V = top_eigenvectors(M @ M.T, 5)
        np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-10)

    def test_errors(self):
        with pytest.raises(DimensionError):
            top_eigenvectors(np.eye(3), 4)
        with pytest.raises(ValueError):
            top_eigenvectors(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


class TestSvdSmall:
    def test_diagonal(self):
        U, s, V = svd_small(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(s, [2, 1])
        np.testing.assert_allclose(np.abs(U), np.eye(2), atol=1e-12)
        np.testing.assert_allclose(np.abs(V), np.eye(2), atol=1e-12)

    def test_rank_one(self, rng):
        u, v = rng.normal(size=4), rng.normal(size=3)
        _, s, _ = svd_small(np.outer(u, v))
        assert s[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-12)
        np.testing.assert_allclose(s[1:], 0, atol=1e-12)

    def test_reconstruction(self, rng):
        M = rng.normal(size=(8, 5))
        U, s, V = svd_small(M)
        assert np.linalg.norm(U @ np.diag(s) @ V.T - M) <= 1e-8 * np.linalg.norm(M)
        np.testing.assert_allclose(U.T @ U, np.eye(5), atol=1e-8)
        np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-8)
        assert np.all(s >= 0) and np.all(np.diff(s) <= 0)


def test_sigmoid_stable_and_bounded():
    z = np.array([-1000.0, -30.0, 0.0, 30.0, 1000.0])
    out = sigmoid(z)
    assert np.all(np.isfinite(out))
    assert out[2] == 0.5
    np.testing.assert_allclose(sigmoid(z) + sigmoid(-z), 1.0)
    mid = sigmoid(np.linspace(-30, 30, 101))
    assert np.all((mid > 0) & (mid < 1))


def test_as_matrix_rejects_non_finite():
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(DimensionError):
        as_matrix(np.zeros((0, 3)))
