"""Flat ``key = value`` run configuration for the command line.

Blank lines and ``#`` comments are ignored. Unknown keys are errors. Keys
left out take the mode's defaults (see ``UhConfig`` / ``ShConfig``).

``hidden_sizes`` lists the hidden layers between the input and the code
layer, e.g. ``90,20``. The full schedule is ``D, hidden..., L, D`` for
``mode = uh`` and ``D, hidden..., L`` for ``mode = sh``.
"""

from dataclasses import dataclass, fields, replace
from typing import Optional

from .network import SUPERVISED, UNSUPERVISED, LayerSchedule
from .optimizer import LbfgsConfig
from .sh_bdnn import ShConfig
from .uh_bdnn import UhConfig


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class RunConfig:
    mode: str = "uh"
    code_length: int = 8
    hidden_sizes: Optional[tuple] = None
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None
    lambda3: Optional[float] = None
    lambda4: Optional[float] = None
    T: Optional[int] = None
    lbfgs_memory: int = 10
    lbfgs_max_iterations: int = 50
    lbfgs_grad_tolerance: float = 1e-6
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search_steps: int = 20
    b_step_max_sweeps: int = 5
    itq_iterations: int = 50
    seed: int = 0
    standardize: bool = False
    per_class_sample: Optional[int] = 3000
    max_pairwise_entries: int = 10 ** 8

    def lbfgs(self):
        try:
            return LbfgsConfig(memory=self.lbfgs_memory,
                               max_iterations=self.lbfgs_max_iterations,
                               grad_tolerance=self.lbfgs_grad_tolerance,
                               wolfe_c1=self.wolfe_c1, wolfe_c2=self.wolfe_c2,
                               max_line_search_steps=self.max_line_search_steps)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def schedule(self, input_dim):
        if self.hidden_sizes is None:
            return None
        sizes = (input_dim, *self.hidden_sizes, self.code_length)
        if self.mode == "uh":
            return LayerSchedule(sizes + (input_dim,), UNSUPERVISED)
        return LayerSchedule(sizes, SUPERVISED)

    def _lambdas(self, defaults):
        out = {}
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "T"):
            value = getattr(self, name)
            out[name] = getattr(defaults, name) if value is None else value
        return out

    def train_config(self, input_dim):
        """Build the ``UhConfig`` or ``ShConfig`` this file describes."""
        try:
            schedule = self.schedule(input_dim)
            if self.mode == "uh":
                return UhConfig(code_length=self.code_length, schedule=schedule,
                                lbfgs=self.lbfgs(), b_step_max_sweeps=self.b_step_max_sweeps,
                                itq_iterations=self.itq_iterations, seed=self.seed,
                                **self._lambdas(UhConfig))
            return ShConfig(code_length=self.code_length, schedule=schedule,
                            lbfgs=self.lbfgs(), per_class_sample=self.per_class_sample,
                            itq_iterations=self.itq_iterations,
                            max_pairwise_entries=self.max_pairwise_entries, seed=self.seed,
                            **self._lambdas(ShConfig))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _int(text, lo=None):
    v = int(text)
    if lo is not None and v < lo:
        raise ValueError(f"must be >= {lo}")
    return v


def _float(text, lo=None):
    v = float(text)
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError("must be finite")
    if lo is not None and v < lo:
        raise ValueError(f"must be >= {lo}")
    return v


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _mode(text):
    if text not in ("uh", "sh"):
        raise ValueError("expected 'uh' or 'sh'")
    return text


def _sizes(text):
    if text.strip().lower() in ("", "default"):
        return None
    sizes = tuple(_int(tok.strip(), 1) for tok in text.split(","))
    if not sizes:
        raise ValueError("need at least one hidden size")
    return sizes


def _optional_count(text):
    if text.strip().lower() == "none":
        return None
    return _int(text, 1)


_PARSERS = {
    "mode": _mode,
    "code_length": lambda t: _int(t, 1),
    "hidden_sizes": _sizes,
    "lambda1": lambda t: _float(t, 0.0),
    "lambda2": lambda t: _float(t, 0.0),
    "lambda3": lambda t: _float(t, 0.0),
    "lambda4": lambda t: _float(t, 0.0),
    "T": lambda t: _int(t, 1),
    "lbfgs_memory": lambda t: _int(t, 1),
    "lbfgs_max_iterations": lambda t: _int(t, 0),
    "lbfgs_grad_tolerance": lambda t: _float(t, 0.0),
    "wolfe_c1": _float,
    "wolfe_c2": _float,
    "max_line_search_steps": lambda t: _int(t, 1),
    "b_step_max_sweeps": lambda t: _int(t, 1),
    "itq_iterations": lambda t: _int(t, 1),
    "seed": lambda t: _int(t, 0),
    "standardize": _bool,
    "per_class_sample": _optional_count,
    "max_pairwise_entries": lambda t: _int(t, 1),
}
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_config(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
    cfg = replace(RunConfig(), **values)
    cfg.lbfgs()
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
