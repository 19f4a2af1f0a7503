import itertools

import numpy as np
import pytest

from bdnn_hash.network import SUPERVISED, UNSUPERVISED, LayerSchedule, NetworkParams


def central_difference(f, x, eps=1e-5):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def max_relative_error(analytic, numeric, floor=1e-6):
    """Largest per-coordinate ``|a - n| / max(|a|, |n|, floor)``."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def random_params(rng, sizes, mode, scale=0.7):
    schedule = LayerSchedule(sizes, mode)
    s = schedule.sizes
    return NetworkParams(
        tuple(rng.normal(0, scale, (s[i + 1], s[i])) for i in range(len(s) - 1)),
        tuple(rng.normal(0, 0.3, s[i + 1]) for i in range(len(s) - 1)),
        schedule)


def random_uh_toy(rng):
    """D <= 6, m <= 8, L <= 3, n = 4."""
    D = int(rng.integers(2, 7))
    L = int(rng.integers(1, min(3, D) + 1))
    h = int(rng.integers(2, 7))
    m = int(rng.integers(2, 9))
    params = random_params(rng, (D, h, L, D), UNSUPERVISED)
    X = rng.normal(size=(D, m))
    B = rng.choice([-1, 1], size=(L, m))
    return params, X, B


def random_sh_toy(rng):
    """D <= 6, m <= 8, L <= 3, n = 4."""
    D = int(rng.integers(2, 7))
    L = int(rng.integers(1, 4))
    h1, h2 = (int(v) for v in rng.integers(2, 7, size=2))
    m = int(rng.integers(2, 9))
    params = random_params(rng, (D, h1, h2, L), SUPERVISED)
    X = rng.normal(size=(D, m))
    B = rng.choice([-1, 1], size=(L, m))
    Y = rng.integers(0, 3, size=m)
    return params, X, B, Y


def all_sign_matrices(L, m):
    for bits in itertools.product((-1, 1), repeat=L * m):
        yield np.array(bits, dtype=np.float64).reshape(L, m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
