"""Flat ``key = value`` experiment configuration files.

Keys are dotted (``model.name``, ``grid.n``), one per line; ``#`` starts a
comment.  Numeric values may use the literal ``pi`` (also ``2*pi``, ``pi/2``).
Lists are comma separated.  Every error names the file, line and field.

Example::

    command = simulate
    model.name = logistic
    model.kappa = 1
    kernel.order = weak
    kernel.tau = 0.5
    grid.L = pi
    grid.n = 128
    d = 0.5
    history.type = sine
    history.amplitude = 0.1
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .integrate import SimConfig
from .kernels import HistoryFn, KernelSpec, constant_history, sine_history
from .models import MODELS, ModelSpec, make_model
from .spectral import Grid1D

__all__ = ["ExperimentConfig", "parse_config", "load_config", "COMMANDS"]

COMMANDS = ("bif-table", "branch", "simulate", "verify-equivalence", "uniqueness-probe")

# accepted keys outside the model.* namespace
_KEYS = {
    "command", "seed", "output.dir", "d",
    "kernel.order", "kernel.tau",
    "grid.L", "grid.n",
    "tau.values", "tau.start", "tau.stop", "tau.count",
    "history.type", "history.amplitude", "history.value", "history.horizon",
    "sim.dt", "sim.t_end", "sim.output_stride", "sim.convergence_tol",
    "sim.attractor_tol", "sim.zero_tol", "sim.window", "sim.history_cap",
    "sim.n_modes", "sim.method",
    "branch.mode", "branch.d_start", "branch.d_end", "branch.n_steps",
    "branch.amplitudes", "branch.seed_fraction", "branch.svg",
    "verify.ladder", "verify.bound", "verify.n_modes",
    "probe.d", "probe.d_over_dstar", "probe.n_starts", "probe.tol",
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*(pi)?\s*(?:/\s*(\d+\.?\d*))?\s*$")


def _number(text: str) -> float:
    """Parse a float, allowing ``pi`` with an optional factor and divisor."""
    s = text.strip()
    try:
        return float(s)
    except ValueError:
        pass
    m = _NUM.match(s)
    if not m or not m.group(2):
        raise ValueError(f"not a number: {text!r}")
    factor = float(m.group(1)) if m.group(1) else 1.0
    div = float(m.group(3)) if m.group(3) else 1.0
    return factor * math.pi / div


def parse_config(text: str, source: str = "<config>") -> dict[str, tuple[str, int]]:
    """Raw ``{key: (value, line_number)}`` mapping."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: field '{key}' already set on line {out[key][1]}")
        if key not in _KEYS and not key.startswith("model."):
            raise ConfigError(f"{source}:{lineno}: unknown field '{key}'")
        out[key] = (value, lineno)
    return out


@dataclass
class ExperimentConfig:
    """Typed view over a parsed config; accessors raise ConfigError naming the field."""

    raw: dict[str, tuple[str, int]]
    source: str = "<config>"
    seed_override: int | None = None
    out_override: str | None = None

    # generic accessors
    def _where(self, key: str) -> str:
        if key in self.raw:
            return f"{self.source}:{self.raw[key][1]}: field '{key}'"
        return f"{self.source}: field '{key}'"

    def has(self, key: str) -> bool:
        return key in self.raw

    def text(self, key: str, default: str | None = None) -> str:
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"{self._where(key)} is required but missing")
            return default
        return self.raw[key][0]

    def number(self, key: str, default: float | None = None, positive: bool = False) -> float:
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"{self._where(key)} is required but missing")
            return float(default)
        try:
            val = _number(self.raw[key][0])
        except ValueError as exc:
            raise ConfigError(f"{self._where(key)}: {exc}") from None
        if positive and not val > 0:
            raise ConfigError(f"{self._where(key)} must be positive, got {val}")
        return val

    def integer(self, key: str, default: int | None = None, minimum: int = 1) -> int:
        val = self.number(key, default)
        if val != int(val) or val < minimum:
            raise ConfigError(f"{self._where(key)} must be an integer >= {minimum}, got {val}")
        return int(val)

    def numbers(self, key: str) -> list[float]:
        items = [s for s in self.text(key).split(",") if s.strip()]
        if not items:
            raise ConfigError(f"{self._where(key)} is an empty list")
        try:
            return [_number(s) for s in items]
        except ValueError as exc:
            raise ConfigError(f"{self._where(key)}: {exc}") from None

    # typed pieces
    @property
    def command(self) -> str:
        cmd = self.text("command")
        if cmd not in COMMANDS:
            raise ConfigError(f"{self._where('command')}: unknown command {cmd!r}")
        return cmd

    @property
    def seed(self) -> int:
        if self.seed_override is not None:
            return self.seed_override
        return self.integer("seed", 0, minimum=0)

    @property
    def out_dir(self) -> Path:
        return Path(self.out_override or self.text("output.dir", "out"))

    @property
    def model(self) -> ModelSpec:
        name = self.text("model.name")
        if name not in MODELS:
            raise ConfigError(f"{self._where('model.name')}: unknown model {name!r}")
        params = {k[len("model."):]: self.number(k) for k in self.raw if k.startswith("model.") and k != "model.name"}
        try:
            return make_model(name, **params)
        except ValueError as exc:
            raise ConfigError(f"{self._where('model.name')}: {exc}") from None

    @property
    def tau(self) -> float:
        return self.number("kernel.tau", positive=True)

    @property
    def kernel(self) -> KernelSpec:
        order = self.text("kernel.order", "weak")
        if order not in ("weak", "strong"):
            raise ConfigError(f"{self._where('kernel.order')} must be 'weak' or 'strong', got {order!r}")
        return KernelSpec(order, self.tau)

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.number("grid.L", math.pi, positive=True), self.integer("grid.n", 128, minimum=3))

    @property
    def d(self) -> float:
        return self.number("d", positive=True)

    @property
    def taus(self) -> np.ndarray:
        if self.has("tau.values"):
            vals = np.array(self.numbers("tau.values"))
            key = "tau.values"
        elif self.has("tau.start"):
            count = self.integer("tau.count")
            vals = np.linspace(self.number("tau.start"), self.number("tau.stop"), count)
            key = "tau.start"
        else:
            raise ConfigError(f"{self.source}: field 'tau.values' (or tau.start/tau.stop/tau.count) is required but missing")
        if np.any(vals <= 0):
            raise ConfigError(f"{self._where(key)}: tau values must be positive")
        return vals

    @property
    def history(self) -> HistoryFn:
        kind = self.text("history.type")
        horizon = self.number("history.horizon", 20.0, positive=True)
        if kind == "sine":
            return sine_history(self.number("history.amplitude"), self.grid.length, horizon)
        if kind == "constant":
            return constant_history(self.number("history.value"), horizon)
        raise ConfigError(f"{self._where('history.type')} must be 'sine' or 'constant', got {kind!r}")

    def history_label(self) -> str:
        kind = self.text("history.type")
        if kind == "sine":
            return f"{self.number('history.amplitude'):g}*sin(pi x/L)"
        return f"{self.number('history.value'):g}"

    @property
    def sim(self) -> SimConfig:
        d = SimConfig()
        n_modes = self.integer("sim.n_modes") if self.has("sim.n_modes") else None
        try:
            return SimConfig(
                dt=self.number("sim.dt", d.dt, positive=True),
                t_end=self.number("sim.t_end", d.t_end, positive=True),
                output_stride=self.integer("sim.output_stride", d.output_stride),
                convergence_tol=self.number("sim.convergence_tol", d.convergence_tol),
                attractor_tol=self.number("sim.attractor_tol", d.attractor_tol, positive=True),
                zero_tol=self.number("sim.zero_tol", d.zero_tol, positive=True),
                window=self.integer("sim.window", d.window),
                history_cap=self.integer("sim.history_cap", d.history_cap),
                n_modes=n_modes,
            )
        except ValueError as exc:
            raise ConfigError(f"{self.source}: sim: {exc}") from None

    def amplitudes(self) -> np.ndarray:
        """``branch.amplitudes`` as a list or as ``start:stop:count``."""
        key = "branch.amplitudes"
        text = self.text(key)
        if ":" in text:
            try:
                start, stop, count = (part.strip() for part in text.split(":"))
                vals = np.linspace(_number(start), _number(stop), int(count))
            except ValueError:
                raise ConfigError(f"{self._where(key)}: want start:stop:count, got {text!r}") from None
        else:
            vals = np.array(self.numbers(key))
        if vals.size == 0 or np.any(vals <= 0):
            raise ConfigError(f"{self._where(key)} must be nonempty and positive")
        return vals

    def ladder(self) -> list[tuple[int, float]]:
        text = self.text("verify.ladder", "64:4e-3, 128:2e-3, 256:1e-3")
        out = []
        for item in text.split(","):
            try:
                n, dt = item.split(":")
                out.append((int(n), float(dt)))
            except ValueError:
                raise ConfigError(f"{self._where('verify.ladder')}: bad entry {item.strip()!r}, want n:dt") from None
        if not out:
            raise ConfigError(f"{self._where('verify.ladder')} is empty")
        return out


def load_config(path: str | Path, *, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return ExperimentConfig(parse_config(text, str(p)), str(p), seed, out)
