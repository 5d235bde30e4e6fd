"""Time stepping for the local systems and the direct nonlocal equation.

Both simulators use the same first-order IMEX split.  Diffusion and the
linear relaxation terms ``-v/tau`` (and ``-w/tau``) go through prefactored
tridiagonal solves; ``F(u, v)``, ``H(u)/tau`` and ``w/tau`` are explicit.
A useful consequence: fixed points of the scheme are exactly the discrete
steady states, so a converged run can be compared to a Newton solution
without any time-discretization offset.

The nonlocal simulator keeps a ring buffer of modal coefficients of H(u)
over the history horizon and evaluates the delayed average with the same
trapezoid lag weights that build the initial auxiliary fields.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BlowUpError, ConvergenceError, MemoryBudgetError, NegativeSolutionError, QuadratureStepError
from .kernels import (
    GreenExpansion,
    HistoryFn,
    KernelSpec,
    _n_lags,
    _history_coeffs,
    build_green_expansion,
    history_horizon,
    history_to_initial,
    kernel_value,
    lag_weights,
)
from .models import ModelSpec
from .spectral import Grid1D, TridiagonalLU, build_laplacian
from .steady import FieldState, newton_solve

__all__ = [
    "SimConfig",
    "Trajectory",
    "ImexStepper",
    "step_imex",
    "simulate",
    "simulate_nonlocal",
    "equivalence_gap",
    "BLOWUP_LIMIT",
    "ZERO",
    "POSITIVE",
    "NOT_CONVERGED",
]

BLOWUP_LIMIT = 1e6
ZERO = "converged-to-zero"
POSITIVE = "converged-to-positive"
NOT_CONVERGED = "not-converged"


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 200.0
    output_stride: int = 100
    convergence_tol: float = 1e-6
    attractor_tol: float = 1e-4
    zero_tol: float = 1e-3
    window: int = 10
    history_cap: int = 2_000_000
    n_modes: int | None = None  # modal truncation of the nonlocal history

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.output_stride < 1 or self.window < 1:
            raise ValueError("output_stride and window must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def check_step(self, tau: float) -> None:
        if self.dt > tau / 4:
            raise QuadratureStepError(f"dt = {self.dt} exceeds the bound tau/4 = {tau / 4}")


@dataclass
class Trajectory:
    """Snapshots at output strides plus the verdict on the final state.

    For the nonlocal simulator ``v`` holds the evaluated delayed average.
    """

    times: np.ndarray
    states: list[FieldState]
    verdict: str
    final: FieldState
    steady: FieldState | None = None
    min_value: float = 0.0
    converged_at: float | None = None

    def u_matrix(self) -> np.ndarray:
        return np.array([s.u for s in self.states])


class ImexStepper:
    """Prefactored IMEX step for the weak (u, v) or strong (u, v, w) system."""

    def __init__(self, model: ModelSpec, d: float, tau: float, grid: Grid1D, dt: float, strong: bool = False):
        self.model, self.tau, self.dt, self.strong = model, tau, dt, strong
        lap = build_laplacian(grid)
        self.lu_u = TridiagonalLU(lap.scaled(dt * d, 1.0))
        self.lu_v = TridiagonalLU(lap.scaled(dt * d, 1.0 + dt / tau))

    def step(self, state: FieldState) -> FieldState:
        m, dt, tau = self.model, self.dt, self.tau
        u, v = state.u, state.v
        u_new = self.lu_u.solve(u + dt * m.F(u, v))
        if self.strong:
            rhs = np.column_stack([v + dt / tau * state.w, state.w + dt / tau * m.H(u)])
            sol = self.lu_v.solve(rhs)
            new = FieldState(u_new, sol[:, 0].copy(), sol[:, 1].copy())
        else:
            new = FieldState(u_new, self.lu_v.solve(v + dt / tau * m.H(u)))
        _check_blowup(new.stack())
        return new


def _check_blowup(x: np.ndarray) -> None:
    big = np.max(np.abs(x))
    if not np.isfinite(big) or big > BLOWUP_LIMIT:
        raise BlowUpError(f"solution magnitude {big:.3e} exceeds {BLOWUP_LIMIT:.0e}")


def step_imex(model: ModelSpec, d: float, tau: float, grid: Grid1D, state: FieldState, dt: float) -> FieldState:
    """One IMEX step; convenient but refactors the operators on every call."""
    if dt > tau / 4:
        raise QuadratureStepError(f"dt = {dt} exceeds the bound tau/4 = {tau / 4}")
    return ImexStepper(model, d, tau, grid, dt, strong=state.strong).step(state)


class _Monitor:
    """Collects snapshots and detects convergence over a sliding window."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.times: list[float] = []
        self.states: list[FieldState] = []
        self.keys: list[np.ndarray] = []
        self.min_value = np.inf
        self.converged_at: float | None = None

    def record(self, t: float, state: FieldState, key: np.ndarray) -> bool:
        self.times.append(t)
        self.states.append(state)
        self.keys.append(key)
        self.min_value = min(self.min_value, float(np.min(state.stack())))
        w = self.cfg.window
        if len(self.states) <= w:
            return False
        span = t - self.times[-1 - w]
        rate = float(np.max(np.abs(key - self.keys[-1 - w]))) / span
        if rate < self.cfg.convergence_tol:
            self.converged_at = t
            return True
        return False


def _verdict(model, kernel, d, grid, final: FieldState, cfg: SimConfig, u_only: bool):
    if np.max(np.abs(final.u)) < cfg.zero_tol:
        return ZERO, None
    strong = kernel.order == "strong"
    if u_only:
        # the delayed average stands in for v (and w) as the Newton guess
        guess = FieldState(final.u, final.v, final.v.copy() if strong else None)
    else:
        guess = final
    try:
        steady = newton_solve(model, d, kernel.tau, grid, guess)
    except (ConvergenceError, NegativeSolutionError):
        return NOT_CONVERGED, None
    gap = np.max(np.abs(steady.u - final.u)) if u_only else steady.distance(final)
    if gap < cfg.attractor_tol and np.max(steady.u) > cfg.zero_tol:
        return POSITIVE, steady
    return NOT_CONVERGED, steady


def simulate(
    model: ModelSpec,
    kernel: KernelSpec,
    d: float,
    grid: Grid1D,
    eta: HistoryFn,
    cfg: SimConfig,
    initial: FieldState | None = None,
) -> Trajectory:
    """Integrate the equivalent local system from history ``eta``.

    The auxiliary fields start from the history quadratures.  Passing
    ``initial`` skips the history and starts from that state instead.
    """
    cfg.check_step(kernel.tau)
    strong = kernel.order == "strong"
    if initial is None:
        exp = build_green_expansion(grid, cfg.n_modes)
        aux = history_to_initial(exp, d, kernel, model.H, eta, cfg.dt)
        state = FieldState(eta(grid.x, 0.0), *aux)
    else:
        if initial.strong != strong:
            raise ValueError("initial state does not match the kernel order")
        state = initial
    stepper = ImexStepper(model, d, kernel.tau, grid, cfg.dt, strong)
    mon = _Monitor(cfg)
    mon.record(0.0, state, state.stack())
    for i in range(1, cfg.n_steps + 1):
        state = stepper.step(state)
        if i % cfg.output_stride == 0 or i == cfg.n_steps:
            if mon.record(i * cfg.dt, state, state.stack()):
                break
    verdict, steady = _verdict(model, kernel, d, grid, state, cfg, u_only=False)
    return Trajectory(
        np.array(mon.times), mon.states, verdict, state, steady, mon.min_value, mon.converged_at
    )


def simulate_nonlocal(
    model: ModelSpec,
    kernel: KernelSpec,
    d: float,
    grid: Grid1D,
    eta: HistoryFn,
    cfg: SimConfig,
) -> Trajectory:
    """Integrate the nonlocal equation directly from stored history.

    Each step evaluates ``(g ** H(u))`` as a lag sum over a ring buffer of
    modal coefficients, seeded with ``H(eta)`` for negative times.  The
    buffer holds ``(ceil(horizon/dt) + 1) * n_modes`` scalars and must fit
    within ``cfg.history_cap``.
    """
    cfg.check_step(kernel.tau)
    exp: GreenExpansion = build_green_expansion(grid, cfg.n_modes)
    horizon = history_horizon(kernel, eta.horizon)
    n_lags = _n_lags(horizon, cfg.dt)
    size = (n_lags + 1) * exp.n_modes
    if size > cfg.history_cap:
        raise MemoryBudgetError(
            f"history buffer needs {size} entries (horizon {horizon:g}, dt {cfg.dt:g}, "
            f"{exp.n_modes} modes), cap is {cfg.history_cap}"
        )
    weights = lag_weights(exp, d, lambda r: kernel_value(kernel, r), cfg.dt, n_lags)
    # buf[(head + j) % N1] holds the coefficients at lag j
    buf = _history_coeffs(exp, model.H, eta, cfg.dt, n_lags)
    n1 = n_lags + 1
    head = 0

    def average() -> np.ndarray:
        c = np.einsum("jk,jk->k", weights[: n1 - head], buf[head:])
        if head:
            c += np.einsum("jk,jk->k", weights[n1 - head :], buf[:head])
        return exp.synthesize(c)

    lu = TridiagonalLU(build_laplacian(grid).scaled(cfg.dt * d, 1.0))
    u = eta(grid.x, 0.0)
    state = FieldState(u, average())
    mon = _Monitor(cfg)
    mon.record(0.0, state, u)
    for i in range(1, cfg.n_steps + 1):
        u = lu.solve(u + cfg.dt * model.F(u, state.v))
        _check_blowup(u)
        head = (head - 1) % n1
        buf[head] = exp.project(model.H(u))
        state = FieldState(u, average())
        if i % cfg.output_stride == 0 or i == cfg.n_steps:
            if mon.record(i * cfg.dt, state, u):
                break
    verdict, steady = _verdict(model, kernel, d, grid, state, cfg, u_only=True)
    return Trajectory(
        np.array(mon.times), mon.states, verdict, state, steady, mon.min_value, mon.converged_at
    )


def equivalence_gap(
    model: ModelSpec, kernel: KernelSpec, d: float, grid: Grid1D, eta: HistoryFn, cfg: SimConfig
) -> float:
    """Max over output times of the max-norm gap between the two simulators' u."""
    cfg = replace(cfg, convergence_tol=0.0)
    local = simulate(model, kernel, d, grid, eta, cfg)
    direct = simulate_nonlocal(model, kernel, d, grid, eta, cfg)
    return float(np.max(np.abs(local.u_matrix() - direct.u_matrix())))
