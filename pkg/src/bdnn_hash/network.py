"""Binary deep network architecture: parameters, forward pass, encoding, model files.

Layers are numbered 1..n as in the usual BDNN notation; ``weights[l - 1]``
maps layer ``l`` (``s_l`` units) to layer ``l + 1``. In unsupervised mode the
code layer is ``n - 1`` and layer ``n`` reconstructs the input; in supervised
mode the code layer is the last one.

Model file layout (all integers little-endian ``uint32``)::

    magic     4 bytes  b"BDNM"
    version   u32      1
    mode      u32      0 = unsupervised, 1 = supervised
    n         u32      number of layers
    sizes     n * u32  s_1 .. s_n
    has_std   u32      0 or 1
    [mean, scale]      2 * s_1 float64, present only if has_std == 1
    for l = 1 .. n-1:
        W(l)  s_{l+1} * s_l float64, column-major
        c(l)  s_{l+1} float64
"""

import struct
from dataclasses import dataclass

import numpy as np

from .numerics import DimensionError, as_matrix, sgn, sigmoid

UNSUPERVISED = "unsupervised"
SUPERVISED = "supervised"

MODEL_MAGIC = b"BDNM"
MODEL_VERSION = 1
_MODE_CODES = {UNSUPERVISED: 0, SUPERVISED: 1}


class ModelFormatError(ValueError):
    """A model file is truncated, corrupt, or of an unknown version."""


@dataclass(frozen=True)
class LayerSchedule:
    sizes: tuple
    mode: str = UNSUPERVISED

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if self.mode not in _MODE_CODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(sizes) < 3:
            raise ValueError("a schedule needs at least 3 layers")
        if min(sizes) < 1:
            raise ValueError("layer sizes must be >= 1")
        if self.mode == UNSUPERVISED and sizes[-1] != sizes[0]:
            raise ValueError("unsupervised schedule must reconstruct the input: s_n == s_1")

    @property
    def n(self):
        return len(self.sizes)

    @property
    def input_dim(self):
        return self.sizes[0]

    @property
    def code_layer(self):
        """1-based index of the layer whose output is the hash code."""
        return self.n - 1 if self.mode == UNSUPERVISED else self.n

    @property
    def code_length(self):
        return self.sizes[self.code_layer - 1]


# layer-size schedules for the tabulated code lengths (hidden layers 2..n-1)
_HIDDEN_TABLE = {8: (90, 20), 16: (90, 30), 24: (100, 40), 32: (120, 50)}


def default_schedule(input_dim, code_length, mode=UNSUPERVISED):
    """Five-layer (unsupervised) or four-layer (supervised) default schedule.

    Tabulated code lengths 8/16/24/32 use their hidden sizes directly; other
    lengths borrow the hidden sizes of the next tabulated length up (the
    largest one beyond 32).
    """
    if code_length < 1:
        raise ValueError("code_length must be >= 1")
    key = min((k for k in _HIDDEN_TABLE if k >= code_length), default=32)
    hidden = _HIDDEN_TABLE[key]
    sizes = (input_dim, *hidden, code_length)
    if mode == UNSUPERVISED:
        sizes = sizes + (input_dim,)
    return LayerSchedule(sizes, mode)


def activation(layer, schedule):
    """Activation tag (``"sigmoid"`` or ``"identity"``) of 1-based ``layer``."""
    n = schedule.n
    if not 2 <= layer <= n:
        raise IndexError(f"layer must lie in [2, {n}], got {layer}")
    last_sigmoid = n - 2 if schedule.mode == UNSUPERVISED else n - 1
    return "sigmoid" if layer <= last_sigmoid else "identity"


@dataclass(frozen=True)
class NetworkParams:
    weights: tuple
    biases: tuple
    schedule: LayerSchedule

    def __post_init__(self):
        sizes = self.schedule.sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise DimensionError("need one weight matrix and bias per layer transition")
        ws, cs = [], []
        for l, (W, c) in enumerate(zip(self.weights, self.biases)):
            W = as_matrix(W, f"W({l + 1})")
            c = np.asarray(c, dtype=np.float64).ravel()
            if W.shape != (sizes[l + 1], sizes[l]):
                raise DimensionError(
                    f"W({l + 1}) has shape {W.shape}, expected {(sizes[l + 1], sizes[l])}")
            if c.shape != (sizes[l + 1],) or not np.all(np.isfinite(c)):
                raise DimensionError(f"c({l + 1}) must be a finite vector of length {sizes[l + 1]}")
            W = W.copy()
            c = c.copy()
            W.setflags(write=False)
            c.setflags(write=False)
            ws.append(W)
            cs.append(c)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(cs))

    @classmethod
    def zeros(cls, schedule):
        s = schedule.sizes
        return cls(tuple(np.zeros((s[l + 1], s[l])) for l in range(len(s) - 1)),
                   tuple(np.zeros(s[l + 1]) for l in range(len(s) - 1)),
                   schedule)

    @property
    def size(self):
        return sum(W.size + c.size for W, c in zip(self.weights, self.biases))

    def flatten(self):
        """Pack parameters as ``[vec(W1), c1, vec(W2), c2, ...]`` (row-major ``W``)."""
        parts = []
        for W, c in zip(self.weights, self.biases):
            parts.append(W.ravel())
            parts.append(c)
        return np.concatenate(parts)

    @classmethod
    def unflatten(cls, vector, schedule):
        vector = np.asarray(vector, dtype=np.float64)
        s = schedule.sizes
        ws, cs = [], []
        pos = 0
        for l in range(len(s) - 1):
            k = s[l + 1] * s[l]
            ws.append(vector[pos:pos + k].reshape(s[l + 1], s[l]))
            pos += k
            cs.append(vector[pos:pos + s[l + 1]])
            pos += s[l + 1]
        if pos != vector.size:
            raise DimensionError(f"vector has {vector.size} entries, schedule needs {pos}")
        return cls(tuple(ws), tuple(cs), schedule)


@dataclass
class ForwardTrace:
    H: list  # H[0] is the input; H[l - 1] is the output of layer l
    Z: list  # Z[l - 2] is the pre-activation of layer l, l = 2..n

    def output(self, layer):
        return self.H[layer - 1]

    def preactivation(self, layer):
        return self.Z[layer - 2]


def forward(params, X):
    """Run ``X`` (``s_1 x m``) through the network, keeping every layer."""
    X = as_matrix(X, "X")
    schedule = params.schedule
    if X.shape[0] != schedule.input_dim:
        raise DimensionError(f"X has {X.shape[0]} rows, network expects {schedule.input_dim}")
    H = [X]
    Z = []
    for l, (W, c) in enumerate(zip(params.weights, params.biases), start=2):
        z = W @ H[-1] + c[:, None]
        Z.append(z)
        H.append(sigmoid(z) if activation(l, schedule) == "sigmoid" else z)
    return ForwardTrace(H, Z)


def activation_derivative(layer, schedule, Z, H):
    """Element-wise derivative of layer ``layer``'s activation at ``Z``."""
    if activation(layer, schedule) == "sigmoid":
        return H * (1.0 - H)
    return np.ones_like(Z)


def code_layer_output(params, X):
    return forward(params, X).output(params.schedule.code_layer)


def encode(params, X):
    """Binary codes ``sgn(H_code)`` as an ``L x m`` int8 matrix of +-1."""
    return sgn(code_layer_output(params, X))


def fit_standardizer(X):
    """Per-dimension ``(mean, scale)``; constant dimensions get scale 1."""
    X = as_matrix(X, "X")
    mean = X.mean(axis=1)
    scale = X.std(axis=1)
    scale[scale == 0] = 1.0
    return mean, scale


def standardize(X, standardizer):
    mean, scale = standardizer
    return (as_matrix(X, "X") - mean[:, None]) / scale[:, None]


def save_model(path, params, standardizer=None):
    """Write ``params`` (and an optional ``(mean, scale)`` pair) to ``path``."""
    schedule = params.schedule
    out = [MODEL_MAGIC,
           struct.pack("<III", MODEL_VERSION, _MODE_CODES[schedule.mode], schedule.n),
           struct.pack(f"<{schedule.n}I", *schedule.sizes),
           struct.pack("<I", 0 if standardizer is None else 1)]
    if standardizer is not None:
        mean, scale = standardizer
        for v in (mean, scale):
            v = np.asarray(v, dtype="<f8").ravel()
            if v.size != schedule.input_dim:
                raise DimensionError("standardizer length must equal the input dimension")
            out.append(v.tobytes())
    for W, c in zip(params.weights, params.biases):
        out.append(np.asarray(W, dtype="<f8").tobytes(order="F"))
        out.append(np.asarray(c, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(out))


def load_model(path):
    """Inverse of :func:`save_model`; returns ``(params, standardizer_or_None)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(k):
        nonlocal pos
        if pos + k > len(data):
            raise ModelFormatError("model file is truncated")
        chunk = data[pos:pos + k]
        pos += k
        return chunk

    if take(4) != MODEL_MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    version, mode_code, n = struct.unpack("<III", take(12))
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    modes = {v: k for k, v in _MODE_CODES.items()}
    if mode_code not in modes:
        raise ModelFormatError(f"unknown mode code {mode_code}")
    if not 3 <= n <= 1000:
        raise ModelFormatError(f"implausible layer count {n}")
    sizes = struct.unpack(f"<{n}I", take(4 * n))
    try:
        schedule = LayerSchedule(sizes, modes[mode_code])
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc
    (has_std,) = struct.unpack("<I", take(4))
    standardizer = None
    if has_std:
        d = sizes[0]
        mean = np.frombuffer(take(8 * d), dtype="<f8").astype(np.float64)
        scale = np.frombuffer(take(8 * d), dtype="<f8").astype(np.float64)
        standardizer = (mean, scale)
    ws, cs = [], []
    for l in range(n - 1):
        rows, cols = sizes[l + 1], sizes[l]
        W = np.frombuffer(take(8 * rows * cols), dtype="<f8").reshape((rows, cols), order="F")
        ws.append(W.astype(np.float64))
        cs.append(np.frombuffer(take(8 * rows), dtype="<f8").astype(np.float64))
    if pos != len(data):
        raise ModelFormatError("trailing bytes after model payload")
    return NetworkParams(tuple(ws), tuple(cs), schedule), standardizer
