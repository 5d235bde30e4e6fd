"""Closed-form bifurcation quantities for the weak-kernel steady system.

At the trivial state, mode phi_1 of the linearization sees the 2x2 matrix

    [[a,     b   ],
     [k/tau, -1/tau]]

shifted by ``-d lambda_1``.  Its positive eigenvalue ``mu1`` fixes the
bifurcation point ``d* = mu1 / lambda_1`` and its eigenvector ``(1, M)`` the
v/u ratio along the bifurcating branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError
from .models import Coefficients, ModelSpec

__all__ = [
    "BifSummary",
    "DStarCurve",
    "linear_matrix",
    "mu1",
    "eigen_ratio",
    "d_star",
    "d_prime0",
    "bif_summary",
    "dstar_curve",
    "dstar_limits",
    "nonexistence_threshold",
    "apriori_bounds",
]


def _check_a3(a: float, b: float, k: float) -> None:
    if not a + b * k > 0:
        raise AssumptionError(f"a + b k = {a + b * k:.6g} <= 0: no positive bifurcation point")


def linear_matrix(a: float, b: float, k: float, tau: float) -> np.ndarray:
    return np.array([[a, b], [k / tau, -1.0 / tau]])


def mu1(a: float, b: float, k: float, tau: float) -> float:
    """Positive root of mu^2 - (a - 1/tau) mu - (a + b k)/tau = 0.

    Uses the cancellation-free branch of the quadratic formula.
    """
    _check_a3(a, b, k)
    if not tau > 0:
        raise ValueError("tau must be positive")
    B = a - 1.0 / tau
    C = (a + b * k) / tau
    root = math.sqrt(B * B + 4.0 * C)
    if B >= 0:
        return 0.5 * (B + root)
    return 2.0 * C / (root - B)


def eigen_ratio(a: float, b: float, k: float, tau: float) -> float:
    """M = 2k / (a tau + 1 + sqrt((a tau + 1)^2 + 4 b tau k)) = k / (1 + tau mu1)."""
    return k / (1.0 + tau * mu1(a, b, k, tau))


def d_star(a: float, b: float, k: float, tau: float, lambda1: float) -> float:
    return mu1(a, b, k, tau) / lambda1


def dstar_limits(a: float, b: float, k: float, lambda1: float) -> tuple[float, float]:
    """(limit as tau -> 0+, limit as tau -> infinity) of d*(tau)."""
    _check_a3(a, b, k)
    return (a + b * k) / lambda1, (a + abs(a)) / (2.0 * lambda1)


def d_prime0(c: Coefficients, tau: float, lambda1: float, int_phi3: float, int_phi2: float) -> float:
    """Initial slope d'(0) of the branch parameterized by the phi_1 amplitude."""
    M = eigen_ratio(c.a, c.b, c.k, tau)
    test = c.k * (c.p + 2 * c.q * M + c.r * M * M) + M * c.b * c.l
    return test * int_phi3 / (2.0 * lambda1 * (c.k + M * M * c.b * tau) * int_phi2)


@dataclass(frozen=True)
class BifSummary:
    tau: float
    lambda1: float
    mu1: float
    d_star: float
    M: float
    d_prime0: float
    sign_test: float
    d_star_star: float | None
    d_star_star_star: float | None
    bounds: dict[str, float] = field(default_factory=dict)
    normalization: str = "max-norm phi_1 = 1"

    @property
    def threshold(self) -> float | None:
        return self.d_star_star if self.d_star_star is not None else self.d_star_star_star

    @property
    def direction(self) -> str:
        """'supercritical' (branch below d*) or 'subcritical' (above d*)."""
        if self.sign_test < 0:
            return "supercritical"
        if self.sign_test > 0:
            return "subcritical"
        return "degenerate"


def apriori_bounds(model: ModelSpec) -> dict[str, float]:
    """Maximum-principle ceilings for nonnegative steady states.

    Keys: ``u_star``, ``H_star`` (logistic-type), ``K4_over_K1``, ``H_2star``
    (bounded F2), ``H_3star``, ``K5`` (bounded H), plus the combined
    ``u_max`` and ``v_max`` (the tightest available).
    """
    w = model.witnesses()
    out: dict[str, float] = {}
    u_caps, v_caps = [], []
    if w.A4:
        out["u_star"] = w.u_star
        out["H_star"] = model.h_max(w.u_star)
        u_caps.append(out["u_star"])
        v_caps.append(out["H_star"])
    if w.A5 and w.A6a:
        out["K4_over_K1"] = w.K4 / w.K1
        out["H_2star"] = model.h_max(w.K4 / w.K1)
        u_caps.append(out["K4_over_K1"])
        v_caps.append(out["H_2star"])
    if w.A5 and w.A6b:
        out["K5"] = w.K5
        out["H_3star"] = model.f2_max(w.K5) / w.K1
        u_caps.append(out["H_3star"])
        v_caps.append(out["K5"])
    if u_caps:
        out["u_max"] = min(u_caps)
        out["v_max"] = min(v_caps)
    return out


def nonexistence_threshold(model: ModelSpec, tau: float, lambda1: float) -> float:
    """Diffusivity above which no positive steady state exists.

    ``K0 / lambda1`` for a > 0 under the logistic-type ceiling, otherwise the
    root of (lambda1 d + K1)(lambda1 d + 1/tau) = K2 K3 / tau for a < 0.
    """
    c = model.coefficients()
    w = model.witnesses()
    if c.a > 0:
        if not w.A4:
            raise AssumptionError(f"{model.name}: a > 0 but no F(u,v) <= F1(u) u witness")
        return w.K0 / lambda1
    if c.a < 0:
        if not w.A5:
            raise AssumptionError(f"{model.name}: a < 0 but no F <= -K1 u + F2(v) witness")
        return d_star(-w.K1, w.K2, w.K3, tau, lambda1)
    raise AssumptionError(f"{model.name}: a = 0 is not covered")


def bif_summary(model: ModelSpec, tau: float, lambda1: float, phi1=None, h: float | None = None) -> BifSummary:
    """All closed-form quantities for one model and tau.

    ``phi1`` (max-norm 1) and the grid spacing ``h`` feed the integrals in
    d'(0); without them the integrals of sin on (0, pi) are used, which is
    the continuum limit for the max-norm normalization (the ratio of
    integrals does not depend on L).
    """
    c = model.coefficients()
    _check_a3(c.a, c.b, c.k)
    if phi1 is None:
        int3, int2 = 4.0 / 3.0, math.pi / 2.0
    else:
        phi1 = np.asarray(phi1)
        step = 1.0 if h is None else h
        int3, int2 = step * float(np.sum(phi1**3)), step * float(np.sum(phi1**2))
    m1 = mu1(c.a, c.b, c.k, tau)
    M = eigen_ratio(c.a, c.b, c.k, tau)
    test = c.k * (c.p + 2 * c.q * M + c.r * M * M) + M * c.b * c.l
    w = model.witnesses()
    dss = dsss = None
    if c.a > 0 and w.A4:
        dss = w.K0 / lambda1
    elif c.a < 0 and w.A5:
        dsss = d_star(-w.K1, w.K2, w.K3, tau, lambda1)
    return BifSummary(
        tau=tau,
        lambda1=lambda1,
        mu1=m1,
        d_star=m1 / lambda1,
        M=M,
        d_prime0=d_prime0(c, tau, lambda1, int3, int2),
        sign_test=test,
        d_star_star=dss,
        d_star_star_star=dsss,
        bounds=apriori_bounds(model),
    )


@dataclass(frozen=True)
class DStarCurve:
    taus: np.ndarray
    values: np.ndarray
    limit_zero: float
    limit_inf: float


def dstar_curve(model_or_coeffs, tau_grid, lambda1: float) -> DStarCurve:
    """d*(tau) over a grid together with its two limits."""
    c = model_or_coeffs.coefficients() if isinstance(model_or_coeffs, ModelSpec) else model_or_coeffs
    taus = np.asarray(tau_grid, dtype=float)
    if taus.size == 0:
        raise ValueError("empty tau grid")
    vals = np.array([d_star(c.a, c.b, c.k, t, lambda1) for t in taus])
    lo, hi = dstar_limits(c.a, c.b, c.k, lambda1)
    return DStarCurve(taus, vals, lo, hi)
