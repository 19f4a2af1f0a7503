"""Packed Hamming search and retrieval metrics.

Bit layout: code bit ``i`` (0-based, i.e. the ``i+1``-th row of ``B``) lives in
word ``i // 64`` at bit position ``i % 64``; ``+1`` maps to a set bit. Unused
high bits of the last word are always zero.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numerics import DimensionError, as_matrix

WORD_BITS = 64


@dataclass(frozen=True)
class PackedCodes:
    L: int
    words: np.ndarray  # (count, n_words) uint64

    @property
    def count(self):
        return self.words.shape[0]

    @property
    def n_words(self):
        return self.words.shape[1]

    def __getitem__(self, i):
        return self.words[i]


def words_per_code(L):
    return (L + WORD_BITS - 1) // WORD_BITS


def pack(B):
    """Pack an ``L x count`` matrix of +-1 into ``PackedCodes``."""
    B = np.asarray(B)
    if B.ndim != 2:
        raise DimensionError("codes must be an L x count matrix")
    if not np.all(np.abs(B) == 1):
        raise ValueError("codes must contain only -1 and +1")
    L, count = B.shape
    nw = words_per_code(L)
    bits = np.zeros((count, nw * WORD_BITS), dtype=np.uint8)
    bits[:, :L] = (B.T > 0)
    # little bit order within each byte, bytes little-endian within each word
    packed = np.packbits(bits, axis=1, bitorder="little")
    words = packed.view("<u8").astype(np.uint64).reshape(count, nw)
    return PackedCodes(L, words)


def unpack(codes):
    """Inverse of :func:`pack`."""
    raw = np.ascontiguousarray(codes.words.astype("<u8")).view(np.uint8)
    bits = np.unpackbits(raw.reshape(codes.count, -1), axis=1, bitorder="little")
    return np.where(bits[:, :codes.L].T > 0, 1, -1).astype(np.int8)


def popcount(words):
    """Per-element population count of a uint64 array."""
    w = np.asarray(words, dtype=np.uint64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(w).astype(np.int64)
    w = w - ((w >> np.uint64(1)) & np.uint64(0x5555555555555555))
    w = (w & np.uint64(0x3333333333333333)) + ((w >> np.uint64(2)) & np.uint64(0x3333333333333333))
    w = (w + (w >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return ((w * np.uint64(0x0101010101010101)) >> np.uint64(56)).astype(np.int64)


def hamming_distance(a, b):
    """Hamming distance between two packed codes (word arrays of equal length)."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    if a.shape != b.shape:
        raise DimensionError(f"code lengths differ: {a.shape} vs {b.shape}")
    return int(popcount(a ^ b).sum())


def hamming_distances(query, db):
    """Distances from one packed query (word array) to every code in ``db``."""
    q = np.asarray(query, dtype=np.uint64)
    if q.shape != (db.n_words,):
        raise DimensionError("query and database code lengths differ")
    return popcount(db.words ^ q[None, :]).sum(axis=1)


@dataclass(frozen=True)
class Ranking:
    indices: np.ndarray
    distances: np.ndarray


def rank_by_hamming(query, db):
    """Database indices sorted by ascending distance, ties by ascending index."""
    d = hamming_distances(query, db)
    order = np.argsort(d, kind="stable")
    return Ranking(order, d[order])


def rank_all(queries, db):
    if queries.L != db.L:
        raise DimensionError(f"query codes have L={queries.L}, database has L={db.L}")
    return [rank_by_hamming(queries[i], db) for i in range(queries.count)]


def euclidean_ground_truth(X_db, X_q, k):
    """For every query column, the ``k`` nearest database columns (ties by index)."""
    X_db = as_matrix(X_db, "X_db")
    X_q = as_matrix(X_q, "X_q")
    if X_db.shape[0] != X_q.shape[0]:
        raise DimensionError("database and queries differ in dimension")
    N = X_db.shape[1]
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in [1, {N}], got {k}")
    gt = []
    for j in range(X_q.shape[1]):
        d2 = np.sum((X_db - X_q[:, j:j + 1]) ** 2, axis=0)
        gt.append(np.sort(np.argsort(d2, kind="stable")[:k]))
    return gt


def class_ground_truth(db_labels, query_labels):
    """Relevant set of each query: every database item sharing its label."""
    db_labels = np.asarray(db_labels)
    return [np.flatnonzero(db_labels == y) for y in np.asarray(query_labels)]


def average_precision(ranked, relevant, top_k=None):
    """AP of one ranked index list against a relevant set.

    Precision is averaged at the ranks of relevant items (only within the first
    ``top_k`` when given) and divided by ``min(|relevant|, top_k)``.
    """
    relevant = np.asarray(relevant)
    if relevant.size == 0:
        return 0.0
    ranked = np.asarray(ranked)
    if top_k is not None:
        ranked = ranked[:top_k]
    hits = np.isin(ranked, relevant)
    if not hits.any():
        return 0.0
    ranks = np.flatnonzero(hits) + 1
    precisions = np.arange(1, ranks.size + 1) / ranks
    denom = relevant.size if top_k is None else min(relevant.size, top_k)
    return float(precisions.sum() / denom)


def mean_average_precision(rankings, gt, top_k=None):
    if len(rankings) != len(gt):
        raise DimensionError("one ranking per query is required")
    if not rankings:
        return 0.0
    return float(np.mean([average_precision(_indices(r), g, top_k) for r, g in zip(rankings, gt)]))


def _indices(r):
    return r.indices if isinstance(r, Ranking) else np.asarray(r)


def precision_within_radius(ranking, relevant, radius=2):
    """``(precision, retrieved_count)`` for items at distance ``<= radius``."""
    within = ranking.indices[ranking.distances <= radius]
    if within.size == 0:
        return 0.0, 0
    return float(np.isin(within, relevant).sum() / within.size), int(within.size)


def precision_at_radius(rankings, gt, radius=2):
    """Mean over queries of precision within the Hamming ball; empty balls score 0."""
    if len(rankings) != len(gt):
        raise DimensionError("one ranking per query is required")
    if not rankings:
        return 0.0
    return float(np.mean([precision_within_radius(r, g, radius)[0] for r, g in zip(rankings, gt)]))


@dataclass
class EvalReport:
    map: float
    precision_at_radius2: float
    ap: np.ndarray
    precision: np.ndarray
    retrieved: np.ndarray
    L: int
    k_gt: Optional[int] = None
    map_top_k: Optional[int] = None
    radius: int = 2
    params: dict = field(default_factory=dict)


def evaluate(db_codes, query_codes, gt, top_k=None, radius=2, k_gt=None):
    """Rank every query against the database and collect both metrics."""
    rankings = rank_all(query_codes, db_codes)
    if len(gt) != len(rankings):
        raise DimensionError(f"{len(gt)} ground-truth rows for {len(rankings)} queries")
    ap = np.array([average_precision(r.indices, g, top_k) for r, g in zip(rankings, gt)])
    pr = [precision_within_radius(r, g, radius) for r, g in zip(rankings, gt)]
    precision = np.array([p for p, _ in pr])
    retrieved = np.array([c for _, c in pr], dtype=np.int64)
    return EvalReport(map=float(ap.mean()) if ap.size else 0.0,
                      precision_at_radius2=float(precision.mean()) if precision.size else 0.0,
                      ap=ap, precision=precision, retrieved=retrieved,
                      L=db_codes.L, k_gt=k_gt, map_top_k=top_k, radius=radius)


def precision_radius_curve(db_codes, query_codes, gt, max_radius=None):
    """Mean precision within radius ``r`` for ``r = 0..max_radius`` (for plots)."""
    rankings = rank_all(query_codes, db_codes)
    max_radius = db_codes.L if max_radius is None else max_radius
    radii = np.arange(max_radius + 1)
    values = [np.mean([precision_within_radius(r, g, rad)[0] for r, g in zip(rankings, gt)])
              for rad in radii]
    return radii, np.array(values)
