"""Dense linear algebra helpers shared by every other module.

All matrices are column-per-sample: an ``(D, m)`` array holds ``m`` samples
of dimension ``D``.
"""

import numpy as np


class DimensionError(ValueError):
    """Shapes of the arguments do not conform."""


class InsufficientSamplesError(ValueError):
    """Fewer samples than the operation needs."""


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array with at least one row and column."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def sgn(x):
    """Sign with ``sgn(0) = +1``.

    Works on scalars (returns an int) and arrays (returns an int8 array of the
    same shape). Non-finite input raises ``ValueError``.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("sgn of a non-finite value")
    out = np.where(arr >= 0, 1, -1).astype(np.int8)
    if out.ndim == 0:
        return int(out)
    return out


def covariance(X):
    """Unbiased covariance of the rows of ``X`` (columns are samples)."""
    X = as_matrix(X, "X")
    m = X.shape[1]
    if m < 2:
        raise InsufficientSamplesError(f"covariance needs at least 2 samples, got {m}")
    centered = X - X.mean(axis=1, keepdims=True)
    C = centered @ centered.T / (m - 1)
    # exact symmetry; the product is symmetric only up to rounding
    return 0.5 * (C + C.T)


def _fix_signs(V):
    # largest-magnitude entry of every column made positive, for reproducibility
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def top_eigenvectors(A, k, return_values=False):
    """Top-``k`` eigenvectors of the symmetric matrix ``A`` as columns.

    Columns are orthonormal and ordered by descending eigenvalue. Each column's
    sign is fixed so that its largest-magnitude entry is positive.
    """
    A = as_matrix(A, "A")
    d = A.shape[0]
    if A.shape[1] != d:
        raise DimensionError(f"A must be square, got {A.shape}")
    if not 1 <= k <= d:
        raise DimensionError(f"k must lie in [1, {d}], got {k}")
    if np.max(np.abs(A - A.T)) > 1e-10 * max(1.0, np.max(np.abs(A))):
        raise ValueError("A is not symmetric")
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(-w, kind="stable")[:k]
    vecs = _fix_signs(V[:, order])
    if return_values:
        return vecs, w[order]
    return vecs


def svd_small(M):
    """Thin SVD ``M = U @ diag(s) @ V.T`` with descending non-negative ``s``."""
    M = as_matrix(M, "M")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U, s, Vt.T


def sigmoid(z):
    """Logistic function, evaluated without overflow for large ``|z|``."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
