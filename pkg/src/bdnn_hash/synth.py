"""Desk-scale Gaussian-mixture datasets.

Cluster ``k`` has mean ``(separation * sigma / sqrt(2)) * e_k`` so every pair of
means is exactly ``separation * sigma`` apart. Samples add isotropic noise of
standard deviation ``sigma``. Columns are shuffled with the same seed, and
labels follow their columns. Means do not depend on the seed, so two draws
with different seeds (e.g. database and queries) share one mixture.
"""

import numpy as np


def gaussian_mixture(clusters, dims, per_cluster, separation=6.0, sigma=1.0, seed=0,
                     shuffle=True):
    """Return ``(X, labels)`` with ``X`` of shape ``(dims, clusters * per_cluster)``."""
    if clusters < 1 or per_cluster < 1:
        raise ValueError("clusters and per_cluster must be >= 1")
    if clusters > dims:
        raise ValueError(f"cannot place {clusters} axis-aligned means in {dims} dimensions")
    if not separation >= 0 or not sigma > 0:
        raise ValueError("separation must be >= 0 and sigma > 0")
    rng = np.random.default_rng(seed)
    means = np.zeros((dims, clusters))
    means[np.arange(clusters), np.arange(clusters)] = separation * sigma / np.sqrt(2.0)
    labels = np.repeat(np.arange(clusters), per_cluster)
    X = means[:, labels] + sigma * rng.standard_normal((dims, labels.size))
    if shuffle:
        order = rng.permutation(labels.size)
        X, labels = X[:, order], labels[order]
    return X, labels.astype(np.uint32)
