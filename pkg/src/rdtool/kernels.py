"""Temporal delay kernels, the Dirichlet heat kernel, and history quadratures.

The heat kernel is represented by its (truncated) eigen-expansion on the
discrete grid.  Coefficients are taken with the weighted inner product
``<f, g> = h * sum(f * g)``, so modal coefficients approximate continuum L2
projections.

All time quadratures use the composite trapezoid rule on the lag nodes
``r_j = j * dt``, ``j = 0..N`` with ``N = ceil(horizon / dt)``.  The history
initializers and :func:`nonlocal_convolution` share this rule, which is why the
direct nonlocal simulator and the local system start from identical data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, InsufficientHistoryError, QuadratureStepError
from .spectral import Grid1D, build_laplacian

__all__ = [
    "KernelSpec",
    "HistoryFn",
    "GreenExpansion",
    "kernel_value",
    "build_green_expansion",
    "green_apply",
    "history_horizon",
    "lag_weights",
    "history_to_initial_weak",
    "history_to_initial_strong",
    "history_to_initial",
    "nonlocal_convolution",
    "sine_history",
    "constant_history",
]

HORIZON_IN_TAUS = 40.0


@dataclass(frozen=True)
class KernelSpec:
    order: Literal["weak", "strong"]
    tau: float

    def __post_init__(self):
        if self.order not in ("weak", "strong"):
            raise ValueError(f"kernel order must be 'weak' or 'strong', got {self.order!r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class HistoryFn:
    """Past state ``eta(x, t)`` for ``t <= 0``; zero before ``-horizon``."""

    func: Callable[[np.ndarray, float], np.ndarray]
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("history horizon must be positive")

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        if t < -self.horizon:
            return np.zeros_like(x, dtype=float)
        return np.asarray(self.func(x, t), dtype=float) * np.ones_like(x, dtype=float)


def sine_history(amplitude: float, length: float, horizon: float = 20.0) -> HistoryFn:
    """``eta(x, t) = amplitude * sin(pi x / L)``, constant in t."""
    return HistoryFn(lambda x, t: amplitude * np.sin(np.pi * x / length), horizon)


def constant_history(value: float, horizon: float = 20.0) -> HistoryFn:
    return HistoryFn(lambda x, t: np.full_like(x, value, dtype=float), horizon)


def kernel_value(spec: KernelSpec, t):
    """Density g(t) of the weak or strong kernel; accepts scalars or arrays."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("delay kernels are defined for t >= 0 only")
    tau = spec.tau
    if spec.order == "weak":
        out = np.exp(-t_arr / tau) / tau
    else:
        out = t_arr * np.exp(-t_arr / tau) / tau**2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GreenExpansion:
    """Eigenmodes of ``-Delta_h``, orthonormal under the h-weighted product."""

    grid: Grid1D
    eigenvalues: np.ndarray
    modes: np.ndarray  # shape (n_interior, n_modes)

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def project(self, f: np.ndarray) -> np.ndarray:
        """Modal coefficients of f (last axis of f is space)."""
        return self.grid.h * (np.asarray(f, dtype=float) @ self.modes)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs) @ self.modes.T


def build_green_expansion(grid: Grid1D, n_modes: int | None = None) -> GreenExpansion:
    n = grid.n_interior
    n_modes = n if n_modes is None else int(n_modes)
    if not 1 <= n_modes <= n:
        raise ValueError(f"n_modes must lie in [1, {n}], got {n_modes}")
    lap = build_laplacian(grid)
    lam, vecs = eigh_tridiagonal(lap.diag, lap.off, select="i", select_range=(0, n_modes - 1))
    vecs = vecs / np.sqrt(grid.h * np.sum(vecs**2, axis=0))
    vecs = vecs * np.where(vecs[0] < 0, -1.0, 1.0)
    return GreenExpansion(grid, lam, vecs)


def green_apply(exp: GreenExpansion, d: float, t: float, f: np.ndarray) -> np.ndarray:
    """Action of the truncated heat kernel: sum_n e^{-d lam_n t} <phi_n, f> phi_n."""
    if t < 0:
        raise DomainError("heat kernel lag must be nonnegative")
    return exp.synthesize(np.exp(-d * exp.eigenvalues * t) * exp.project(f))


def history_horizon(spec: KernelSpec, user_horizon: float = 0.0) -> float:
    return max(HORIZON_IN_TAUS * spec.tau, user_horizon)


def _n_lags(horizon: float, dt: float) -> int:
    return int(math.ceil(horizon / dt - 1e-9))


def lag_weights(exp: GreenExpansion, d: float, weight: Callable, dt: float, n_lags: int) -> np.ndarray:
    """Trapezoid weights times ``weight(r) e^{-d lam r}`` on lags r_j = j dt.

    Returns an array of shape (n_lags + 1, n_modes).
    """
    r = dt * np.arange(n_lags + 1)
    w = np.full(n_lags + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    return (w * weight(r))[:, None] * np.exp(-d * np.outer(r, exp.eigenvalues))


def _check_step(spec: KernelSpec, dt: float) -> None:
    if not dt > 0:
        raise QuadratureStepError("quadrature step must be positive")
    if dt > spec.tau / 4:
        raise QuadratureStepError(f"quadrature step {dt} exceeds tau/4 = {spec.tau / 4}")


def _history_coeffs(exp: GreenExpansion, H: Callable, eta: HistoryFn, dt: float, n_lags: int) -> np.ndarray:
    """Modal coefficients of H(eta(., -j dt)) for j = 0..n_lags."""
    x = exp.grid.x
    rows = [H(eta(x, -j * dt)) for j in range(n_lags + 1)]
    return exp.project(np.array(rows))


def _weak(spec: KernelSpec) -> Callable:
    return lambda r: kernel_value(KernelSpec("weak", spec.tau), r)


def _strong(spec: KernelSpec) -> Callable:
    return lambda r: kernel_value(KernelSpec("strong", spec.tau), r)


def history_to_initial_weak(
    exp: GreenExpansion, d: float, spec: KernelSpec, H: Callable, eta: HistoryFn, dt: float
) -> np.ndarray:
    """Initial auxiliary field for the weak-kernel system.

    ``v(x,0) = int_{-inf}^0 int G(x,y,-s) e^{s/tau}/tau H(eta(y,s)) dy ds``,
    truncated at ``max(40 tau, eta.horizon)``.
    """
    if spec.order != "weak":
        raise ValueError("history_to_initial_weak needs a weak kernel")
    _check_step(spec, dt)
    n_lags = _n_lags(history_horizon(spec, eta.horizon), dt)
    coeffs = _history_coeffs(exp, H, eta, dt, n_lags)
    wts = lag_weights(exp, d, _weak(spec), dt, n_lags)
    return exp.synthesize(np.sum(wts * coeffs, axis=0))


def history_to_initial_strong(
    exp: GreenExpansion, d: float, spec: KernelSpec, H: Callable, eta: HistoryFn, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Initial (v, w) for the strong-kernel three-component system.

    v carries the weight ``-s e^{s/tau}/tau^2`` and w the weight ``e^{s/tau}/tau``.
    """
    if spec.order != "strong":
        raise ValueError("history_to_initial_strong needs a strong kernel")
    _check_step(spec, dt)
    n_lags = _n_lags(history_horizon(spec, eta.horizon), dt)
    coeffs = _history_coeffs(exp, H, eta, dt, n_lags)
    v_w = lag_weights(exp, d, _strong(spec), dt, n_lags)
    w_w = lag_weights(exp, d, _weak(spec), dt, n_lags)
    return (
        exp.synthesize(np.sum(v_w * coeffs, axis=0)),
        exp.synthesize(np.sum(w_w * coeffs, axis=0)),
    )


def history_to_initial(exp, d, spec, H, eta, dt) -> tuple[np.ndarray, ...]:
    """Auxiliary initial fields as a tuple: (v,) or (v, w)."""
    if spec.order == "weak":
        return (history_to_initial_weak(exp, d, spec, H, eta, dt),)
    return history_to_initial_strong(exp, d, spec, H, eta, dt)


def nonlocal_convolution(
    exp: GreenExpansion,
    d: float,
    spec: KernelSpec,
    H: Callable,
    times: np.ndarray,
    fields: np.ndarray,
    t: float,
    horizon: float = 0.0,
) -> np.ndarray:
    """Evaluate ``(g ** H(u))(., t)`` directly from a stored u-trajectory.

    ``times`` must be uniformly spaced and, together with ``fields`` (one row
    per time), cover ``[t - max(40 tau, horizon), t]``.  Any history before
    t = 0 has to be spliced into the trajectory by the caller.
    """
    times = np.asarray(times, dtype=float)
    fields = np.asarray(fields, dtype=float)
    if times.size < 2:
        raise InsufficientHistoryError("trajectory needs at least two samples")
    dt = float(times[-1] - times[0]) / (times.size - 1)
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("trajectory time stamps must be uniformly spaced")
    idx = int(round((t - times[0]) / dt))
    if idx < 0 or idx >= times.size or abs(times[idx] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t={t} is not a trajectory sample")
    n_lags = _n_lags(history_horizon(spec, horizon), dt)
    if idx < n_lags:
        raise InsufficientHistoryError(
            f"trajectory covers {idx * dt:.4g} time units before t, need {n_lags * dt:.4g}"
        )
    window = fields[idx - n_lags : idx + 1][::-1]
    coeffs = exp.project(np.array([H(u) for u in window]))
    weight = _weak(spec) if spec.order == "weak" else _strong(spec)
    wts = lag_weights(exp, d, weight, dt, n_lags)
    return exp.synthesize(np.sum(wts * coeffs, axis=0))
