"""Supervised hashing with a binary deep network (pairwise label objective).

The last layer is the code layer. Its Gram matrix ``H.T H / L`` is fitted to
the pairwise label matrix ``S``, with the same binding, independence and
balance penalties as the unsupervised model. The B step is a plain sign.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .initialization import ItqConfig, itq_codes, pca_weight_init
from .network import (
    SUPERVISED,
    LayerSchedule,
    NetworkParams,
    activation,
    activation_derivative,
    default_schedule,
    forward,
)
from .numerics import DimensionError, as_matrix, sgn, sigmoid
from .optimizer import LbfgsConfig
from .uh_bdnn import TrainResult, _backprop, _check_codes, _penalties, _wc_step


class MemoryBudgetError(ValueError):
    """The dense pairwise label matrix would exceed the configured budget."""


@dataclass(frozen=True)
class ShConfig:
    lambda1: float = 1e-3
    lambda2: float = 5.0
    lambda3: float = 1.0
    lambda4: float = 1e-4
    T: int = 5
    code_length: int = 8
    schedule: Optional[LayerSchedule] = None
    lbfgs: LbfgsConfig = field(default_factory=LbfgsConfig)
    per_class_sample: Optional[int] = 3000
    itq_iterations: int = 50
    max_pairwise_entries: int = 10 ** 8
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.per_class_sample is not None and self.per_class_sample < 1:
            raise ValueError("per_class_sample must be >= 1")
        if self.schedule is not None:
            if self.schedule.mode != SUPERVISED:
                raise ValueError("ShConfig needs a supervised schedule")
            if self.schedule.code_length != self.code_length:
                object.__setattr__(self, "code_length", self.schedule.code_length)

    def resolve_schedule(self, input_dim):
        if self.schedule is None:
            return default_schedule(input_dim, self.code_length, SUPERVISED)
        if self.schedule.input_dim != input_dim:
            raise DimensionError(
                f"schedule expects {self.schedule.input_dim}-dim input, data has {input_dim}")
        return self.schedule


def pairwise_labels(Y):
    """``S[i, j] = +1`` when samples ``i`` and ``j`` share a label, else ``-1``."""
    Y = np.asarray(Y).ravel()
    return np.where(Y[:, None] == Y[None, :], 1.0, -1.0)


def per_class_subsample(X, Y, k, seed=0):
    """Keep at most ``k`` random columns per class.

    Output columns are grouped by ascending class label and keep their
    original relative order inside each group.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = as_matrix(X, "X")
    Y = np.asarray(Y).ravel()
    if Y.size != X.shape[1]:
        raise DimensionError("one label per column is required")
    rng = np.random.default_rng(seed)
    keep = []
    for label in np.unique(Y):
        idx = np.flatnonzero(Y == label)
        if idx.size > k:
            idx = np.sort(rng.choice(idx, size=k, replace=False))
        keep.append(idx)
    keep = np.concatenate(keep)
    return X[:, keep], Y[keep]


def _sh_value_grad(params, B, X, S, cfg, need_grad=True):
    schedule = params.schedule
    n = schedule.n
    m = X.shape[1]
    trace = forward(params, X)
    Hn = trace.output(n)
    L = Hn.shape[0]
    V = Hn.T @ Hn / L - S
    pen, dH = _penalties(Hn, B, cfg.lambda2, cfg.lambda3, cfg.lambda4)
    J = (np.sum(V ** 2) / (2 * m)
         + cfg.lambda1 / 2 * sum(np.sum(W ** 2) for W in params.weights)
         + pen)
    if not need_grad:
        return J, None
    dH = dH + Hn @ (V + V.T) / (m * L)
    delta = dH * activation_derivative(n, schedule, trace.preactivation(n), Hn)
    gW, gc = _backprop(params.weights, trace, schedule, delta, n, cfg.lambda1)
    grads = NetworkParams(tuple(gW[l] for l in range(1, n)),
                          tuple(gc[l] for l in range(1, n)), schedule)
    return J, grads


def _check_similarity(S, m):
    S = np.asarray(S, dtype=np.float64)
    if S.shape != (m, m):
        raise DimensionError(f"S has shape {S.shape}, expected {(m, m)}")
    return S


def objective_sh(params, B, X, S, cfg):
    """Supervised objective at ``(params, B)`` for pairwise labels ``S``."""
    X = as_matrix(X, "X")
    m = X.shape[1]
    B = _check_codes(B, params.schedule.code_length, m)
    return _sh_value_grad(params, B, X, _check_similarity(S, m), cfg, need_grad=False)[0]


def gradient_sh(params, B, X, S, cfg):
    """Analytic gradient of :func:`objective_sh`, laid out like ``params``."""
    X = as_matrix(X, "X")
    m = X.shape[1]
    B = _check_codes(B, params.schedule.code_length, m)
    return _sh_value_grad(params, B, X, _check_similarity(S, m), cfg)[1]


def b_step_sh(H_n):
    """Closed-form B step: ``sgn`` of the code-layer output."""
    return sgn(as_matrix(H_n, "H_n"))


def init_params_sh(X, schedule, seed=0):
    """PCA weights for every layer and zero biases."""
    rng = np.random.default_rng([seed, 1])
    sizes = schedule.sizes
    weights = []
    H = X
    for l in range(1, schedule.n):
        W = pca_weight_init(H, sizes[l], rng)
        weights.append(W)
        Z = W @ H
        H = sigmoid(Z) if activation(l + 1, schedule) == "sigmoid" else Z
    biases = [np.zeros(s) for s in sizes[1:]]
    return NetworkParams(tuple(weights), tuple(biases), schedule)


def train_sh(X, Y, cfg=None):
    """Alternating optimization for the supervised model.

    With ``cfg.per_class_sample`` set, training first subsamples each class.
    History records follow :func:`bdnn_hash.uh_bdnn.train_uh`.
    """
    cfg = cfg or ShConfig()
    X = as_matrix(X, "X")
    Y = np.asarray(Y).ravel()
    if Y.size != X.shape[1]:
        raise DimensionError("one label per column is required")
    if cfg.per_class_sample is not None:
        X, Y = per_class_subsample(X, Y, cfg.per_class_sample, cfg.seed)
    D, m = X.shape
    if m * m > cfg.max_pairwise_entries:
        raise MemoryBudgetError(
            f"{m} samples need {m * m} pairwise entries, budget is {cfg.max_pairwise_entries}")
    schedule = cfg.resolve_schedule(D)
    S = pairwise_labels(Y)
    B = itq_codes(X, schedule.code_length, ItqConfig(cfg.itq_iterations, cfg.seed)).astype(np.float64)
    params = init_params_sh(X, schedule, cfg.seed)

    def value_grad_for(Bfix):
        return lambda p: _sh_value_grad(p, Bfix, X, S, cfg)

    history = [(0, "init", _sh_value_grad(params, B, X, S, cfg, False)[0])]
    statuses = []
    params, res = _wc_step(value_grad_for(B), params, cfg.lbfgs)
    statuses.append(res.status)
    history.append((0, "wc", res.f))
    for t in range(1, cfg.T + 1):
        B = b_step_sh(forward(params, X).output(schedule.n)).astype(np.float64)
        history.append((t, "b", _sh_value_grad(params, B, X, S, cfg, False)[0]))
        params, res = _wc_step(value_grad_for(B), params, cfg.lbfgs)
        statuses.append(res.status)
        history.append((t, "wc", res.f))
    return TrainResult(params=params, codes=B.astype(np.int8), history=history,
                       lbfgs_status=statuses)
