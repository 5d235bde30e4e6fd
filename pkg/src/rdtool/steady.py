"""Steady states of the local system, continuation in d, and their stability.

The discrete steady system for the weak kernel is

    -d L u + F(u, v)          = 0
    -d L v + (H(u) - v) / tau = 0

with ``L = -Delta_h``.  For the strong kernel a third field w relays H(u)
to v through two relaxation stages.  Unknowns are stacked as
``[u, v]`` or ``[u, v, w]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bifurcation import apriori_bounds, bif_summary, eigen_ratio
from .errors import (
    AssumptionError,
    ConvergenceError,
    EigenIterationError,
    FoldDetectedError,
    NegativeSolutionError,
)
from .models import ModelSpec
from .parallel import parallel_map
from .spectral import Grid1D, build_laplacian, principal_eigenpair

__all__ = [
    "FieldState",
    "BranchPoint",
    "Spectrum",
    "ProbeResult",
    "SteadySystem",
    "newton_solve",
    "linearized_spectrum",
    "continue_branch",
    "continue_amplitude",
    "uniqueness_probe",
    "is_positive",
    "STABLE_TOL",
]

RESIDUAL_TOL = 1e-10
NEGATIVE_TOL = 1e-6
STABLE_TOL = 1e-8
TRIVIAL_TOL = 1e-8


@dataclass(frozen=True)
class FieldState:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray | None = None

    @property
    def fields(self) -> tuple[np.ndarray, ...]:
        return (self.u, self.v) if self.w is None else (self.u, self.v, self.w)

    @property
    def strong(self) -> bool:
        return self.w is not None

    def stack(self) -> np.ndarray:
        return np.concatenate(self.fields)

    @classmethod
    def from_stack(cls, x: np.ndarray, n: int) -> "FieldState":
        parts = np.split(np.asarray(x, dtype=float), x.size // n)
        return cls(*parts)

    @classmethod
    def zeros(cls, n: int, strong: bool = False) -> "FieldState":
        z = np.zeros(n)
        return cls(z, z.copy(), z.copy() if strong else None)

    def distance(self, other: "FieldState") -> float:
        return float(np.max(np.abs(self.stack() - other.stack())))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.stack())))


class Spectrum(NamedTuple):
    leading_eig: float
    min_sv: float
    leading_imag: float = 0.0

    @property
    def stable(self) -> bool:
        return self.leading_eig < -STABLE_TOL


@dataclass(frozen=True)
class BranchPoint:
    d: float
    state: FieldState
    amplitude: float
    leading_eig: float
    min_sv: float
    residual: float = 0.0


class SteadySystem:
    """Residual and Jacobian of the discrete steady problem at fixed d, tau."""

    def __init__(self, model: ModelSpec, d: float, tau: float, grid: Grid1D, strong: bool = False):
        if not (d > 0 and tau > 0):
            raise ValueError("d and tau must be positive")
        self.model, self.d, self.tau, self.grid, self.strong = model, d, tau, grid, strong
        self.n = grid.n_interior
        self.lap = build_laplacian(grid).to_sparse()

    @property
    def n_fields(self) -> int:
        return 3 if self.strong else 2

    def split(self, x):
        return np.split(x, self.n_fields)

    def residual(self, x: np.ndarray) -> np.ndarray:
        m, d, tau, L = self.model, self.d, self.tau, self.lap
        if self.strong:
            u, v, w = self.split(x)
            return np.concatenate([
                -d * (L @ u) + m.F(u, v),
                -d * (L @ v) + (w - v) / tau,
                -d * (L @ w) + (m.H(u) - w) / tau,
            ])
        u, v = self.split(x)
        return np.concatenate([
            -d * (L @ u) + m.F(u, v),
            -d * (L @ v) + (m.H(u) - v) / tau,
        ])

    def d_derivative(self, x: np.ndarray) -> np.ndarray:
        """Partial derivative of the residual with respect to d."""
        return np.concatenate([-(self.lap @ f) for f in self.split(x)])

    def jacobian(self, x: np.ndarray) -> sp.csc_matrix:
        m, d, tau = self.model, self.d, self.tau
        dL = -d * self.lap
        eye = sp.identity(self.n, format="csr")
        u, v = self.split(x)[:2]
        Fu, Fv = sp.diags(m.F_u(u, v)), sp.diags(m.F_v(u, v))
        Hp = sp.diags(m.dH(u) / tau)
        if self.strong:
            blocks = [
                [dL + Fu, Fv, None],
                [None, dL - eye / tau, eye / tau],
                [Hp, None, dL - eye / tau],
            ]
        else:
            blocks = [[dL + Fu, Fv], [Hp, dL - eye / tau]]
        return sp.bmat(blocks, format="csc")


def _check_sign(x: np.ndarray, sys: SteadySystem) -> None:
    if np.min(x) < -NEGATIVE_TOL:
        raise NegativeSolutionError(
            f"converged state has entries down to {np.min(x):.3e}",
            state=FieldState.from_stack(x, sys.n),
        )


def _polish(sys: SteadySystem, x: np.ndarray, r: np.ndarray, steps: int = 2) -> np.ndarray:
    """Extra full Newton steps kept only while they shrink the residual.

    Near d* the Jacobian is nearly singular, so a residual of 1e-10 can
    leave a state ~1e-7 away from the root; polishing removes that slack.
    """
    rnorm = np.max(np.abs(r))
    for _ in range(steps):
        if rnorm == 0.0:
            break
        x_try = x + spla.spsolve(sys.jacobian(x), -r)
        r_try = sys.residual(x_try)
        if not np.all(np.isfinite(r_try)) or np.max(np.abs(r_try)) >= rnorm:
            break
        x, r, rnorm = x_try, r_try, np.max(np.abs(r_try))
    return x


def _newton(sys: SteadySystem, x0: np.ndarray, tol: float, max_iter: int, max_halvings: int) -> np.ndarray:
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial guess is not finite")
    r = sys.residual(x)
    rnorm = np.max(np.abs(r))
    best = (rnorm, x.copy())
    for _ in range(max_iter):
        if rnorm <= tol:
            return _polish(sys, x, r)
        dx = spla.spsolve(sys.jacobian(x), -r)
        if not np.all(np.isfinite(dx)):
            break
        merit = np.linalg.norm(r)
        step = 1.0
        for _ in range(max_halvings + 1):
            x_try = x + step * dx
            r_try = sys.residual(x_try)
            if np.all(np.isfinite(r_try)) and np.linalg.norm(r_try) < merit:
                break
            step *= 0.5
        else:
            break
        x, r = x_try, r_try
        rnorm = np.max(np.abs(r))
        if rnorm < best[0]:
            best = (rnorm, x.copy())
    if rnorm <= tol:
        return _polish(sys, x, r)
    raise ConvergenceError(
        f"Newton stopped with residual {best[0]:.3e} > {tol:.1e}",
        best_residual=best[0],
        best_state=FieldState.from_stack(best[1], sys.n),
    )


def newton_solve(
    model: ModelSpec,
    d: float,
    tau: float,
    grid: Grid1D,
    guess: FieldState,
    *,
    tol: float = RESIDUAL_TOL,
    max_iter: int = 50,
    max_halvings: int = 30,
) -> FieldState:
    """Damped Newton for the steady system; the kernel follows ``guess.w``."""
    sys = SteadySystem(model, d, tau, grid, strong=guess.strong)
    x = _newton(sys, guess.stack(), tol, max_iter, max_halvings)
    _check_sign(x, sys)
    return FieldState.from_stack(x, sys.n)


def linearized_spectrum(
    model: ModelSpec, d: float, tau: float, grid: Grid1D, state: FieldState
) -> Spectrum:
    """Rightmost eigenvalue and smallest singular value of the Jacobian.

    The state is linearly stable iff the leading eigenvalue is below
    ``-STABLE_TOL``.
    """
    sys = SteadySystem(model, d, tau, grid, strong=state.strong)
    J = sys.jacobian(state.stack()).toarray()
    try:
        eigs = la.eigvals(J)
        svals = la.svdvals(J)
    except la.LinAlgError as exc:
        raise EigenIterationError(str(exc)) from exc
    lead = eigs[np.argmax(eigs.real)]
    return Spectrum(float(lead.real), float(svals[-1]), float(abs(lead.imag)))


def is_positive(state: FieldState) -> bool:
    return np.max(state.u) > TRIVIAL_TOL and np.min(state.stack()) >= -1e-10


def _branch_point(model, d, tau, grid, x, sys) -> BranchPoint:
    st = FieldState.from_stack(x, grid.n_interior)
    spec = linearized_spectrum(model, d, tau, grid, st)
    return BranchPoint(
        d=float(d),
        state=st,
        amplitude=float(np.max(st.u)),
        leading_eig=spec.leading_eig,
        min_sv=spec.min_sv,
        residual=float(np.max(np.abs(sys.residual(x)))),
    )


def _seed_state(model, tau, d, lambda1, phi1, s, strong) -> FieldState:
    """First-order branch shape s (1, M) phi_1 (chain of ratios for strong)."""
    c = model.coefficients()
    if strong:
        relax = 1.0 + tau * d * lambda1
        mw = c.k / relax
        return FieldState(s * phi1, s * mw / relax * phi1, s * mw * phi1)
    M = eigen_ratio(c.a, c.b, c.k, tau)
    return FieldState(s * phi1, s * M * phi1)


def _amplitude_cap(model: ModelSpec) -> float:
    return apriori_bounds(model).get("u_max", 1.0)


def continue_branch(
    model: ModelSpec,
    tau: float,
    grid: Grid1D,
    d_start: float,
    d_end: float,
    n_steps: int,
    *,
    strong: bool = False,
    seed_fraction: float = 0.05,
    max_seed_halvings: int = 6,
    max_substeps: int = 4,
) -> list[BranchPoint]:
    """Natural continuation of the positive branch from d_start down to d_end.

    The first point is seeded with the local branch shape at amplitude
    ``seed_fraction * u_max``; each later point starts from a secant
    prediction.  A failed step is retried with halved d-increments; when that
    also fails while the smallest singular value has been shrinking, the
    branch is folding and :class:`FoldDetectedError` carries the points
    computed so far.
    """
    if not d_end < d_start:
        raise ValueError("continuation runs towards smaller d: need d_end < d_start")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    pair = principal_eigenpair(grid)
    n = grid.n_interior

    s = seed_fraction * _amplitude_cap(model)
    first = None
    for _ in range(max_seed_halvings + 1):
        guess = _seed_state(model, tau, d_start, pair.lam, pair.phi, s, strong)
        try:
            st = newton_solve(model, d_start, tau, grid, guess)
        except (ConvergenceError, NegativeSolutionError):
            st = None
        if st is not None and is_positive(st):
            first = st
            break
        s *= 0.5
    if first is None:
        raise ConvergenceError(f"could not seed a positive solution at d={d_start}")

    sys0 = SteadySystem(model, d_start, tau, grid, strong)
    points = [_branch_point(model, d_start, tau, grid, first.stack(), sys0)]
    targets = np.linspace(d_start, d_end, n_steps + 1)[1:]
    prev_x, prev_d = None, None
    cur_x, cur_d = first.stack(), d_start

    for d_target in targets:
        sub = 1
        while True:
            try:
                cur_x, cur_d, prev_x, prev_d = _advance(
                    model, tau, grid, strong, cur_x, cur_d, prev_x, prev_d, d_target, sub
                )
                break
            except (ConvergenceError, NegativeSolutionError) as exc:
                sub *= 2
                if sub > 2**max_substeps:
                    sv = [p.min_sv for p in points[-3:]]
                    if len(sv) >= 2 and all(b < a for a, b in zip(sv, sv[1:])):
                        raise FoldDetectedError(
                            f"continuation failed at d={d_target:.6g} with shrinking min_sv "
                            f"{sv[-1]:.3e}", last_point=points[-1], points=points,
                        ) from exc
                    raise
        sys = SteadySystem(model, cur_d, tau, grid, strong)
        points.append(_branch_point(model, cur_d, tau, grid, cur_x, sys))
    return points


def _advance(model, tau, grid, strong, cur_x, cur_d, prev_x, prev_d, d_target, n_sub):
    """Take n_sub equal secant-predicted steps from cur_d to d_target."""
    for d_next in np.linspace(cur_d, d_target, n_sub + 1)[1:]:
        if prev_x is not None:
            guess = cur_x + (cur_x - prev_x) * (d_next - cur_d) / (cur_d - prev_d)
        else:
            guess = cur_x
        sys = SteadySystem(model, d_next, tau, grid, strong)
        x = _newton(sys, guess, RESIDUAL_TOL, 50, 30)
        _check_sign(x, sys)
        if np.max(x[: grid.n_interior]) <= TRIVIAL_TOL:
            raise ConvergenceError(f"continuation fell onto the trivial branch at d={d_next:.6g}")
        prev_x, prev_d, cur_x, cur_d = cur_x, cur_d, x, float(d_next)
    return cur_x, cur_d, prev_x, prev_d


def _bordered_newton(sys_at, x0, d0, phi1, s, grid, tol=RESIDUAL_TOL, max_iter=50, max_halvings=30):
    """Newton on (state, d) with the phi_1-projection of u pinned to s."""
    n = grid.n_interior
    proj = phi1 / np.dot(phi1, phi1)
    x, d = np.array(x0, dtype=float), float(d0)

    def full_residual(x, d):
        sys = sys_at(d)
        return np.append(sys.residual(x), np.dot(proj, x[:n]) - s), sys

    r, sys = full_residual(x, d)
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            return x, d
        col = sys.d_derivative(x)[:, None]
        row = np.zeros((1, x.size))
        row[0, :n] = proj
        K = sp.bmat([[sys.jacobian(x), sp.csc_matrix(col)], [sp.csc_matrix(row), None]], format="csc")
        delta = spla.spsolve(K, -r)
        merit = np.linalg.norm(r)
        step = 1.0
        for _ in range(max_halvings + 1):
            d_try = d + step * delta[-1]
            if d_try > 0:
                r_try, sys_try = full_residual(x + step * delta[:-1], d_try)
                if np.all(np.isfinite(r_try)) and np.linalg.norm(r_try) < merit:
                    break
            step *= 0.5
        else:
            break
        x, d, r, sys = x + step * delta[:-1], d_try, r_try, sys_try
    if np.max(np.abs(r)) <= tol:
        return x, d
    raise ConvergenceError(
        f"bordered Newton stopped at amplitude {s:.4g} with residual {np.max(np.abs(r)):.3e}",
        best_residual=float(np.max(np.abs(r))),
    )


def continue_amplitude(
    model: ModelSpec,
    tau: float,
    grid: Grid1D,
    amplitudes,
    *,
    strong: bool = False,
    d_min: float | None = None,
) -> list[BranchPoint]:
    """Continue the branch in its phi_1 amplitude, solving for (state, d).

    Works through folds in d (subcritical bifurcations).  The amplitude is
    the projection ``<u, phi_1> / <phi_1, phi_1>``, which equals max u to
    first order near the bifurcation point.  The sweep ends early once the
    branch is predicted to leave ``d >= d_min`` (default ``1e-3 d*``).
    """
    amps = np.asarray(amplitudes, dtype=float)
    if amps.size == 0 or np.any(amps <= 0):
        raise ValueError("amplitudes must be a nonempty sequence of positive values")
    pair = principal_eigenpair(grid)
    summ = bif_summary(model, tau, pair.lam, pair.phi, grid.h)

    def sys_at(d):
        return SteadySystem(model, d, tau, grid, strong)

    d_min = 1e-3 * summ.d_star if d_min is None else d_min
    d0 = summ.d_star + summ.d_prime0 * amps[0]
    x = _seed_state(model, tau, summ.d_star, pair.lam, pair.phi, amps[0], strong).stack()
    points: list[BranchPoint] = []
    hist: list[tuple[float, np.ndarray, float]] = []
    for s in amps:
        if len(hist) >= 2:
            (s1, x1, d1), (s2, x2, d2) = hist[-2], hist[-1]
            t = (s - s2) / (s2 - s1)
            x_guess, d_guess = x2 + t * (x2 - x1), d2 + t * (d2 - d1)
        elif hist:
            x_guess, d_guess = hist[-1][1] * (s / hist[-1][0]), hist[-1][2]
        else:
            x_guess, d_guess = x, d0
        if d_guess < d_min:
            break
        try:
            x_new, d_new = _bordered_newton(sys_at, x_guess, d_guess, pair.phi, s, grid)
        except ConvergenceError:
            if points and d_guess < 10 * d_min:
                break
            raise
        if d_new < d_min:
            break
        _check_sign(x_new, sys_at(d_new))
        hist.append((s, x_new, d_new))
        points.append(_branch_point(model, d_new, tau, grid, x_new, sys_at(d_new)))
    return points


@dataclass(frozen=True)
class ProbeResult:
    verdict: str  # "unique", "multiple" or "none"
    solutions: list[FieldState]
    n_starts: int
    n_failed: int
    n_trivial: int


def _random_start(rng, phi1, cap, M, strong) -> FieldState:
    c = rng.uniform(0.05, 1.0) * cap
    u = c * phi1 * (1.0 + 0.2 * rng.uniform(-1.0, 1.0, phi1.size))
    v = c * M * phi1 * (1.0 + 0.2 * rng.uniform(-1.0, 1.0, phi1.size))
    return FieldState(u, v, v.copy() if strong else None)


def uniqueness_probe(
    model: ModelSpec,
    d: float,
    tau: float,
    grid: Grid1D,
    n_starts: int = 20,
    *,
    seed: int = 0,
    strong: bool = False,
    tol: float = 1e-6,
) -> ProbeResult:
    """Multi-start Newton search for positive steady states at fixed d.

    Starts are positive multiples of phi_1 with 20% relative uniform noise,
    drawn from ``numpy.random.default_rng(seed)`` before any solve runs, so
    the outcome does not depend on RDTOOL_THREADS.
    """
    w = model.witnesses()
    if not (w.A7 or w.cooperative):
        warnings.warn(
            f"{model.name} has no uniqueness structure; the probe only reports what it finds",
            stacklevel=2,
        )
    pair = principal_eigenpair(grid)
    c = model.coefficients()
    M = eigen_ratio(c.a, c.b, c.k, tau) if c.a + c.b * c.k > 0 else c.k
    rng = np.random.default_rng(seed)
    starts = [_random_start(rng, pair.phi, _amplitude_cap(model), M, strong) for _ in range(n_starts)]

    def run(guess):
        try:
            return newton_solve(model, d, tau, grid, guess)
        except (ConvergenceError, NegativeSolutionError):
            return None

    results = parallel_map(run, starts)
    n_failed = sum(r is None for r in results)
    positive = [r for r in results if r is not None and is_positive(r)]
    n_trivial = len(results) - n_failed - len(positive)
    distinct: list[FieldState] = []
    for st in positive:
        if all(st.distance(o) >= tol for o in distinct):
            distinct.append(st)
    distinct.sort(key=lambda st: float(np.max(st.u)))
    verdict = "none" if not distinct else ("unique" if len(distinct) == 1 else "multiple")
    return ProbeResult(verdict, distinct, n_starts, n_failed, n_trivial)
