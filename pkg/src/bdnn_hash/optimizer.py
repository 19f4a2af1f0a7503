"""Limited-memory BFGS with a strong-Wolfe line search.

The objective callback maps a flat parameter vector to ``(value, gradient)``.
Line-search failure is not an error: the best point seen so far is returned
and ``result.status == "line_search_failed"``.
"""

from dataclasses import dataclass, field

import numpy as np


class InvalidStartError(ValueError):
    """The objective is not finite at the starting point."""


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 10
    max_iterations: int = 50
    grad_tolerance: float = 1e-6
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search_steps: int = 20

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.grad_tolerance < 0:
            raise ValueError("grad_tolerance must be >= 0")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.max_line_search_steps < 1:
            raise ValueError("max_line_search_steps must be >= 1")


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    evaluations: int
    status: str
    values: list = field(default_factory=list)

    @property
    def line_search_failed(self):
        return self.status == "line_search_failed"


def _evaluate(objective, x, n):
    f, g = objective(x)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (n,):
        raise ValueError(f"gradient has shape {g.shape}, expected ({n},)")
    return float(f), g


def two_loop_direction(g, s_hist, y_hist):
    """Return ``-H g`` where ``H`` is the L-BFGS inverse-Hessian estimate.

    With empty history this is the steepest-descent direction ``-g``.
    """
    q = g.copy()
    rhos = [1.0 / float(y @ s) for s, y in zip(s_hist, y_hist)]
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rhos)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= float(s @ y) / float(y @ y)
    for s, y, rho, a in zip(s_hist, y_hist, rhos, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def _cubic_min(a, fa, da, b, fb, db):
    # minimizer of the cubic interpolating (f, f') at a and b; None if undefined
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0 or not np.isfinite(disc):
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if np.isfinite(t) else None


def strong_wolfe_search(phi, f0, dphi0, alpha, c1, c2, max_steps, alpha_max=1e10):
    """Find a step satisfying the strong Wolfe conditions along one direction.

    ``phi(alpha)`` returns ``(f, dphi, payload)``. Returns ``(alpha, f, payload,
    ok, best)`` where ``best`` is the ``(alpha, f, payload)`` triple with the
    lowest value seen (``None`` if nothing improved on ``f0``).
    """
    best = None
    steps = 0

    def trial(a):
        nonlocal best, steps
        steps += 1
        f, d, payload = phi(a)
        if not np.isfinite(f):
            f, d = np.inf, np.nan
        if f < f0 and (best is None or f < best[1]):
            best = (a, f, payload)
        return f, d, payload

    def armijo(a, f, d):
        if f <= f0 + c1 * a * dphi0:
            return True
        # approximate Wolfe test for when f differences sink below rounding;
        # still never accepts an increase
        return f <= f0 and d <= (2.0 * c1 - 1.0) * dphi0

    def curvature(d):
        return abs(d) <= -c2 * dphi0

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        while steps < max_steps:
            width = hi - lo
            a = None
            if np.isfinite(f_hi) and np.isfinite(d_hi):
                a = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            lo_edge, hi_edge = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if a is None or not lo_edge <= a <= hi_edge:
                a = lo + 0.5 * width
            f, d, payload = trial(a)
            if not armijo(a, f, d) or f > f_lo:
                hi, f_hi, d_hi = a, f, d
            else:
                if curvature(d):
                    return a, f, payload, True
                if d * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = a, f, d
        return None

    a_prev, f_prev, d_prev = 0.0, f0, dphi0
    a = alpha
    while steps < max_steps:
        f, d, payload = trial(a)
        if not armijo(a, f, d) or (a_prev > 0 and f > f_prev):
            hit = zoom(a_prev, f_prev, d_prev, a, f, d)
            break
        if curvature(d):
            hit = (a, f, payload, True)
            break
        if d >= 0:
            hit = zoom(a, f, d, a_prev, f_prev, d_prev)
            break
        a_prev, f_prev, d_prev = a, f, d
        a = min(2.0 * a, alpha_max)
    else:
        hit = None
    if hit is None:
        return None, None, None, False, best
    return hit[0], hit[1], hit[2], True, best


def minimize(objective, x0, config=None):
    """Minimize ``objective`` from ``x0`` with L-BFGS.

    Stops when ``max|g| <= grad_tolerance``, after ``max_iterations`` accepted
    steps, or when the line search fails. The returned value never exceeds
    ``f(x0)``.
    """
    cfg = config or LbfgsConfig()
    x = np.array(x0, dtype=np.float64).ravel()
    n = x.size
    f, g = _evaluate(objective, x, n)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise InvalidStartError("objective or gradient is not finite at x0")
    evaluations = 1
    values = [f]
    s_hist, y_hist = [], []
    iterations = 0
    status = "max_iterations"

    while True:
        if np.max(np.abs(g), initial=0.0) <= cfg.grad_tolerance:
            status = "converged"
            break
        if iterations >= cfg.max_iterations:
            status = "max_iterations"
            break
        d = two_loop_direction(g, s_hist, y_hist)
        dphi0 = float(g @ d)
        if not dphi0 < 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
            dphi0 = float(g @ d)
        alpha0 = 1.0 if s_hist else min(1.0, 1.0 / np.linalg.norm(g))

        def phi(a, x=x, d=d):
            nonlocal evaluations
            xa = x + a * d
            fa, ga = _evaluate(objective, xa, n)
            evaluations += 1
            return fa, float(ga @ d), (xa, ga)

        alpha, f_new, payload, ok, best = strong_wolfe_search(
            phi, f, dphi0, alpha0, cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_line_search_steps
        )
        if not ok:
            if best is not None:
                x, g = best[2]
                f = best[1]
                values.append(f)
            status = "line_search_failed"
            break
        x_new, g_new = payload
        s = x_new - x
        y = g_new - g
        if float(s @ y) > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g = x_new, f_new, g_new
        values.append(f)
        iterations += 1

    return LbfgsResult(x=x, f=f, grad=g, iterations=iterations,
                       evaluations=evaluations, status=status, values=values)
