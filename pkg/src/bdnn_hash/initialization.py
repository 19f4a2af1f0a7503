"""Starting points for the alternating trainers: ITQ codes and PCA weights."""

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DimensionError,
    InsufficientSamplesError,
    as_matrix,
    covariance,
    sgn,
    svd_small,
    top_eigenvectors,
)


@dataclass(frozen=True)
class ItqConfig:
    rotation_iterations: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.rotation_iterations < 1:
            raise ValueError("rotation_iterations must be >= 1")


@dataclass
class ItqModel:
    mean: np.ndarray          # (D,)
    projection: np.ndarray    # (D, L) top-L principal directions
    rotation: np.ndarray      # (L, L) orthogonal
    codes: np.ndarray         # (L, m) training codes
    losses: list = field(default_factory=list)  # quantization loss after each half-step

    def encode(self, X):
        X = as_matrix(X, "X")
        P = self.projection.T @ (X - self.mean[:, None])
        return sgn(self.rotation.T @ P)


def random_rotation(dim, rng):
    """Orthogonal ``dim x dim`` matrix from the QR factorization of a Gaussian draw."""
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    # sign fix makes the draw Haar-distributed and the factorization unique
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def procrustes_rotation(P, B):
    """Orthogonal ``R`` minimising ``||B - R.T @ P||_F``."""
    U, _, V = svd_small(P @ B.T)
    return U @ V.T


def itq_fit(X, code_length, config=None):
    """Iterative quantization on the columns of ``X``.

    The data are centred, projected on the top ``code_length`` principal
    directions, and a rotation is refined by alternating ``B = sgn(R.T P)``
    with the Procrustes update of ``R``.
    """
    cfg = config or ItqConfig()
    X = as_matrix(X, "X")
    D, m = X.shape
    if code_length > D:
        raise DimensionError(f"code length {code_length} exceeds input dimension {D}")
    if code_length < 1:
        raise DimensionError("code length must be >= 1")
    if m < 2:
        raise InsufficientSamplesError("ITQ needs at least 2 samples")
    mean = X.mean(axis=1)
    E = top_eigenvectors(covariance(X), code_length)
    P = E.T @ (X - mean[:, None])
    R = random_rotation(code_length, np.random.default_rng(cfg.seed))
    losses = []
    for _ in range(cfg.rotation_iterations):
        B = sgn(R.T @ P)
        losses.append(float(np.sum((B - R.T @ P) ** 2)))
        R = procrustes_rotation(P, B)
        losses.append(float(np.sum((B - R.T @ P) ** 2)))
    B = sgn(R.T @ P)
    return ItqModel(mean=mean, projection=E, rotation=R, codes=B, losses=losses)


def itq_codes(X, code_length, config=None):
    """ITQ binary codes (``L x m``, entries +-1) of the training columns."""
    return itq_fit(X, code_length, config).codes


def pca_weight_init(H_prev, s_next, rng=None):
    """Weight matrix whose rows are the leading eigenvectors of ``cov(H_prev)``.

    When ``s_next`` exceeds the input width ``s_l`` the extra rows are filled
    block by block with rows of seeded random orthogonal matrices, so every
    consecutive block of ``s_l`` rows is orthonormal. Only ``s_l`` rows can be
    mutually orthonormal in ``R^{s_l}``.
    """
    H_prev = as_matrix(H_prev, "H_prev")
    if s_next < 1:
        raise ValueError("s_next must be >= 1")
    s_l = H_prev.shape[0]
    C = covariance(H_prev)
    k = min(s_next, s_l)
    rows = [top_eigenvectors(C, k).T]
    extra = s_next - k
    if extra:
        rng = rng if rng is not None else np.random.default_rng(0)
        while extra > 0:
            block = random_rotation(s_l, rng)[:min(extra, s_l)]
            rows.append(block)
            extra -= block.shape[0]
    return np.vstack(rows)


def rect_identity(rows, cols):
    """``rows x cols`` matrix with ones on the main diagonal."""
    return np.eye(rows, cols)
