"""Unsupervised hashing with a binary deep network (reconstruction objective).

The code layer ``n - 1`` is tied to a binary auxiliary matrix ``B`` by a
quadratic penalty; training alternates an L-BFGS step on the network
parameters with a discrete cyclic coordinate descent step on ``B``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .initialization import ItqConfig, itq_codes, pca_weight_init, rect_identity
from .network import (
    UNSUPERVISED,
    LayerSchedule,
    NetworkParams,
    activation,
    activation_derivative,
    default_schedule,
    forward,
)
from .numerics import DimensionError, as_matrix, sgn, sigmoid
from .optimizer import LbfgsConfig, minimize


@dataclass(frozen=True)
class UhConfig:
    lambda1: float = 1e-5
    lambda2: float = 5e-2
    lambda3: float = 1e-2
    lambda4: float = 1e-6
    T: int = 10
    code_length: int = 8
    schedule: Optional[LayerSchedule] = None
    lbfgs: LbfgsConfig = field(default_factory=LbfgsConfig)
    b_step_max_sweeps: int = 5
    itq_iterations: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.b_step_max_sweeps < 1:
            raise ValueError("b_step_max_sweeps must be >= 1")
        if self.schedule is not None:
            if self.schedule.mode != UNSUPERVISED:
                raise ValueError("UhConfig needs an unsupervised schedule")
            if self.schedule.code_length != self.code_length:
                object.__setattr__(self, "code_length", self.schedule.code_length)

    def resolve_schedule(self, input_dim):
        if self.schedule is None:
            return default_schedule(input_dim, self.code_length, UNSUPERVISED)
        if self.schedule.input_dim != input_dim:
            raise DimensionError(
                f"schedule expects {self.schedule.input_dim}-dim input, data has {input_dim}")
        return self.schedule


@dataclass
class TrainResult:
    params: NetworkParams
    codes: np.ndarray
    history: list             # (iteration, phase, J) records
    lbfgs_status: list        # status string of every (W, c) step

    def objective_trace(self):
        return np.array([h[2] for h in self.history])


def _check_codes(B, L, m):
    B = np.asarray(B)
    if B.shape != (L, m):
        raise DimensionError(f"B has shape {B.shape}, expected {(L, m)}")
    if not np.all(np.abs(B) == 1):
        raise ValueError("B must contain only -1 and +1")
    return B.astype(np.float64)


def _penalties(Hc, B, lam2, lam3, lam4):
    """Binding, independence and balance terms on the code-layer output."""
    L, m = Hc.shape
    gram = Hc @ Hc.T / m - np.eye(L)
    rowsum = Hc.sum(axis=1)
    value = (lam2 / (2 * m) * np.sum((Hc - B) ** 2)
             + lam3 / 2 * np.sum(gram ** 2)
             + lam4 / (2 * m) * np.sum(rowsum ** 2))
    dH = (lam2 / m * (Hc - B)
          + 2 * lam3 / m * gram @ Hc
          + lam4 / m * rowsum[:, None])
    return value, dH


def _backprop(weights, trace, schedule, delta, top_layer, lam1):
    """Gradients of ``W(l), c(l)`` for ``l < top_layer`` given ``delta`` at ``top_layer``."""
    gW, gc = {}, {}
    for l in range(top_layer - 1, 0, -1):
        gW[l] = delta @ trace.output(l).T + lam1 * weights[l - 1]
        gc[l] = delta.sum(axis=1)
        if l >= 2:
            delta = (weights[l - 1].T @ delta) * activation_derivative(
                l, schedule, trace.preactivation(l), trace.output(l))
    return gW, gc


def _uh_value_grad(params, B, X, cfg, need_grad=True):
    schedule = params.schedule
    n = schedule.n
    m = X.shape[1]
    W_out, c_out = params.weights[-1], params.biases[-1]
    trace = forward(params, X)
    Hc = trace.output(n - 1)
    resid = X - W_out @ B - c_out[:, None]
    pen, dH = _penalties(Hc, B, cfg.lambda2, cfg.lambda3, cfg.lambda4)
    J = (np.sum(resid ** 2) / (2 * m)
         + cfg.lambda1 / 2 * sum(np.sum(W ** 2) for W in params.weights)
         + pen)
    if not need_grad:
        return J, None
    gW = {n - 1: -resid @ B.T / m + cfg.lambda1 * W_out}
    gc = {n - 1: -resid.sum(axis=1) / m}
    delta = dH * activation_derivative(n - 1, schedule, trace.preactivation(n - 1), Hc)
    w, c = _backprop(params.weights, trace, schedule, delta, n - 1, cfg.lambda1)
    gW.update(w)
    gc.update(c)
    grads = NetworkParams(tuple(gW[l] for l in range(1, n)),
                          tuple(gc[l] for l in range(1, n)), schedule)
    return J, grads


def objective_uh(params, B, X, cfg):
    """Penalized reconstruction objective at ``(params, B)``."""
    X = as_matrix(X, "X")
    B = _check_codes(B, params.schedule.code_length, X.shape[1])
    return _uh_value_grad(params, B, X, cfg, need_grad=False)[0]


def gradient_uh(params, B, X, cfg):
    """Analytic gradient of :func:`objective_uh`, laid out like ``params``."""
    X = as_matrix(X, "X")
    B = _check_codes(B, params.schedule.code_length, X.shape[1])
    return _uh_value_grad(params, B, X, cfg)[1]


def b_objective_uh(params, X, B, lambda2):
    """``||X - W B - c 1^T||^2 + lambda2 ||H - B||^2``, the sub-objective of the B step."""
    X = as_matrix(X, "X")
    n = params.schedule.n
    Hc = forward(params, X).output(n - 1)
    B = np.asarray(B, dtype=np.float64)
    resid = X - params.weights[-1] @ B - params.biases[-1][:, None]
    return float(np.sum(resid ** 2) + lambda2 * np.sum((Hc - B) ** 2))


def b_step_uh(params, X, B_in, cfg):
    """Discrete cyclic coordinate descent on the rows of ``B``.

    Rows are visited in ascending order; sweeps repeat until one changes
    nothing or ``cfg.b_step_max_sweeps`` is reached.
    """
    X = as_matrix(X, "X")
    schedule = params.schedule
    L = schedule.code_length
    B = _check_codes(B_in, L, X.shape[1]).copy()
    W = params.weights[-1]
    Hc = forward(params, X).output(schedule.n - 1)
    Q = W.T @ (X - params.biases[-1][:, None]) + cfg.lambda2 * Hc
    G = W.T @ W
    for _ in range(cfg.b_step_max_sweeps):
        changed = False
        for k in range(L):
            # q_k^T - w_k^T W_1 B_1, with the k-th row's own contribution removed
            target = Q[k] - G[k] @ B + G[k, k] * B[k]
            row = sgn(target).astype(np.float64)
            if np.any(row != B[k]):
                B[k] = row
                changed = True
        if not changed:
            break
    return B.astype(np.int8)


def _wc_step(value_grad, params, lbfgs):
    schedule = params.schedule

    def objective(theta):
        p = NetworkParams.unflatten(theta, schedule)
        J, g = value_grad(p)
        return J, g.flatten()

    result = minimize(objective, params.flatten(), lbfgs)
    return NetworkParams.unflatten(result.x, schedule), result


def init_params_uh(X, schedule, seed=0):
    """PCA weights for layers 1..n-2, rectangular identity on top, zero biases."""
    rng = np.random.default_rng([seed, 1])
    sizes = schedule.sizes
    n = schedule.n
    weights = []
    H = X
    for l in range(1, n - 1):
        W = pca_weight_init(H, sizes[l], rng)
        weights.append(W)
        Z = W @ H
        H = sigmoid(Z) if activation(l + 1, schedule) == "sigmoid" else Z
    weights.append(rect_identity(sizes[-1], sizes[-2]))
    biases = [np.zeros(s) for s in sizes[1:]]
    return NetworkParams(tuple(weights), tuple(biases), schedule)


def train_uh(X, cfg=None):
    """Alternating optimization: ITQ start, then ``T`` rounds of B step and (W, c) step.

    ``history`` holds ``(t, phase, J)`` with phase ``"init"`` (before any
    optimization), ``"wc"`` after every parameter step and ``"b"`` after every
    B step.
    """
    cfg = cfg or UhConfig()
    X = as_matrix(X, "X")
    D, m = X.shape
    schedule = cfg.resolve_schedule(D)
    L = schedule.code_length
    B = itq_codes(X, L, ItqConfig(cfg.itq_iterations, cfg.seed)).astype(np.float64)
    params = init_params_uh(X, schedule, cfg.seed)

    def value_grad_for(Bfix):
        return lambda p: _uh_value_grad(p, Bfix, X, cfg)

    history = [(0, "init", _uh_value_grad(params, B, X, cfg, False)[0])]
    statuses = []
    params, res = _wc_step(value_grad_for(B), params, cfg.lbfgs)
    statuses.append(res.status)
    history.append((0, "wc", res.f))
    for t in range(1, cfg.T + 1):
        B = b_step_uh(params, X, B, cfg).astype(np.float64)
        history.append((t, "b", _uh_value_grad(params, B, X, cfg, False)[0]))
        params, res = _wc_step(value_grad_for(B), params, cfg.lbfgs)
        statuses.append(res.status)
        history.append((t, "wc", res.f))
    return TrainResult(params=params, codes=B.astype(np.int8), history=history,
                       lbfgs_status=statuses)
