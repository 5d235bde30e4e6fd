"""Catalog of nonlinearity pairs (F, H) for the delayed reaction-diffusion model.

Each model fixes its parameters at construction.  ``F(u, v)`` is the reaction
rate given the local density u and the delayed average v, ``H(u)`` is the
quantity being averaged.  The ``F``/``H`` methods and their derivatives are
unchecked and defined on all of R (solvers need that); the public
:func:`eval_F` / :func:`eval_H` enforce the nonnegative domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import ClassVar

import numpy as np

from .errors import DomainError

__all__ = [
    "Coefficients",
    "Witnesses",
    "ModelSpec",
    "Logistic",
    "LogisticCubic",
    "FoodLimited",
    "Nicholson",
    "NicholsonVariant",
    "Monod",
    "MODELS",
    "make_model",
    "eval_F",
    "eval_H",
    "coefficients",
    "assumption_witnesses",
]

NEG_TOL = 1e-12


@dataclass(frozen=True)
class Coefficients:
    """First and second derivatives of F and H at the origin."""

    a: float  # F_u
    b: float  # F_v
    k: float  # H'
    p: float  # F_uu
    q: float  # F_uv
    r: float  # F_vv
    l: float  # H''

    def as_tuple(self) -> tuple[float, ...]:
        return (self.a, self.b, self.k, self.p, self.q, self.r, self.l)


@dataclass(frozen=True)
class Witnesses:
    """Structural hypotheses a model satisfies, with their constants.

    ``u_star``/``K0`` witness the logistic-type ceiling F(u,v) <= F1(u) u.
    ``K1, K2, K3`` witness F(u,v) <= -K1 u + F2(v), F2(v) <= K2 v, H(u) <= K3 u.
    ``K4`` bounds F2 from above, ``K5`` bounds H from above.  ``A7`` marks the
    consumer-resource form F = u f with f_u, f_v < 0 and H' > 0.
    ``cooperative`` marks cooperative sub-homogeneous systems (monod), which
    also have a unique positive steady state.
    """

    A3: bool
    u_star: float | None = None
    K0: float | None = None
    K1: float | None = None
    K2: float | None = None
    K3: float | None = None
    K4: float | None = None
    K5: float | None = None
    A7: bool = False
    cooperative: bool = False

    @property
    def A4(self) -> bool:
        return self.u_star is not None

    @property
    def A5(self) -> bool:
        return self.K1 is not None

    @property
    def A6a(self) -> bool:
        return self.K4 is not None

    @property
    def A6b(self) -> bool:
        return self.K5 is not None

    def flags(self) -> set[str]:
        names = ("A3", "A4", "A5", "A6a", "A6b", "A7")
        return {n for n in names if getattr(self, n)}


class ModelSpec:
    """Base class; subclasses are frozen dataclasses of their parameters."""

    name: ClassVar[str] = ""

    # vectorized nonlinearities and first derivatives
    def F(self, u, v):
        raise NotImplementedError

    def F_u(self, u, v):
        raise NotImplementedError

    def F_v(self, u, v):
        raise NotImplementedError

    def H(self, u):
        return u

    def dH(self, u):
        return np.ones_like(np.asarray(u, dtype=float))

    def coefficients(self) -> Coefficients:
        raise NotImplementedError

    def witnesses(self) -> Witnesses:
        raise NotImplementedError

    # ceilings used by the a priori bounds
    def h_max(self, upper: float) -> float:
        """max of H over [0, upper]."""
        return upper

    def F1(self, u):
        return None

    def F2(self, v):
        return None

    def f2_max(self, upper: float) -> float:
        """max of F2 over [0, upper]."""
        raise NotImplementedError

    def per_capita(self, u, v):
        """f with F = u f, for consumer-resource type models."""
        return None

    @property
    def params(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def _positive(self, *names: str) -> None:
        for n in names:
            val = getattr(self, n)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{self.name}: parameter {n} must be positive, got {val}")


@dataclass(frozen=True)
class Logistic(ModelSpec):
    kappa: float = 1.0
    A: float = 0.5
    B: float = 0.4
    name: ClassVar[str] = "logistic"

    def __post_init__(self):
        self._positive("kappa", "A", "B")

    def F(self, u, v):
        return self.kappa * u * (1.0 - self.A * u - self.B * v)

    def F_u(self, u, v):
        return self.kappa * (1.0 - 2.0 * self.A * u - self.B * v)

    def F_v(self, u, v):
        return -self.kappa * self.B * u

    def per_capita(self, u, v):
        return self.kappa * (1.0 - self.A * u - self.B * v)

    def F1(self, u):
        return self.kappa * (1.0 - self.A * u)

    def coefficients(self):
        k, A, B = self.kappa, self.A, self.B
        return Coefficients(a=k, b=0.0, k=1.0, p=-2 * A * k, q=-B * k, r=0.0, l=0.0)

    def witnesses(self):
        return Witnesses(A3=True, u_star=1.0 / self.A, K0=self.kappa, A7=True)


@dataclass(frozen=True)
class LogisticCubic(ModelSpec):
    """kappa u (1 + A u - B v - C u^2): weak Allee-type growth, can be subcritical."""

    kappa: float = 1.0
    A: float = 0.5
    B: float = 0.4
    C: float = 1.0
    name: ClassVar[str] = "logistic_cubic"

    def __post_init__(self):
        self._positive("kappa", "A", "B", "C")

    def F(self, u, v):
        return self.kappa * u * (1.0 + self.A * u - self.B * v - self.C * u * u)

    def F_u(self, u, v):
        return self.kappa * (1.0 + 2 * self.A * u - self.B * v - 3 * self.C * u * u)

    def F_v(self, u, v):
        return -self.kappa * self.B * u

    def per_capita(self, u, v):
        return self.kappa * (1.0 + self.A * u - self.B * v - self.C * u * u)

    def F1(self, u):
        return self.kappa * (1.0 + self.A * u - self.C * u * u)

    def coefficients(self):
        k, A, B = self.kappa, self.A, self.B
        return Coefficients(a=k, b=0.0, k=1.0, p=2 * A * k, q=-B * k, r=0.0, l=0.0)

    def witnesses(self):
        A, C = self.A, self.C
        u_star = (A + math.sqrt(A * A + 4 * C)) / (2 * C)
        K0 = self.kappa * (1.0 + A * A / (4 * C))
        return Witnesses(A3=True, u_star=u_star, K0=K0)


@dataclass(frozen=True)
class FoodLimited(ModelSpec):
    kappa: float = 1.0
    A: float = 0.5
    B: float = 0.4
    c: float = 1.0
    name: ClassVar[str] = "food_limited"

    def __post_init__(self):
        self._positive("kappa", "A", "B", "c")

    def _den(self, u, v):
        return 1.0 + self.c * self.A * u + self.c * self.B * v

    def per_capita(self, u, v):
        return self.kappa * (1.0 - self.A * u - self.B * v) / self._den(u, v)

    def F(self, u, v):
        return u * self.per_capita(u, v)

    def F_u(self, u, v):
        # f_u = -kappa A (1 + c) / D^2
        D = self._den(u, v)
        return self.per_capita(u, v) - u * self.kappa * self.A * (1 + self.c) / D**2

    def F_v(self, u, v):
        D = self._den(u, v)
        return -u * self.kappa * self.B * (1 + self.c) / D**2

    def F1(self, u):
        return self.kappa * (1.0 - self.A * u) / (1.0 + self.c * self.A * u)

    def coefficients(self):
        k, A, B, c = self.kappa, self.A, self.B, self.c
        return Coefficients(
            a=k, b=0.0, k=1.0, p=-2 * k * A * (1 + c), q=-k * B * (1 + c), r=0.0, l=0.0
        )

    def witnesses(self):
        return Witnesses(A3=True, u_star=1.0 / self.A, K0=self.kappa, A7=True)


@dataclass(frozen=True)
class Nicholson(ModelSpec):
    """-chi u + theta v e^{-nu v} with H(u) = u."""

    chi: float = 0.8
    theta: float = 1.0
    nu: float = 0.6
    name: ClassVar[str] = "nicholson"

    def __post_init__(self):
        self._positive("chi", "theta", "nu")
        if not self.theta > self.chi:
            raise ValueError(f"nicholson needs theta > chi, got theta={self.theta}, chi={self.chi}")

    def F(self, u, v):
        return -self.chi * u + self.theta * v * np.exp(-self.nu * v)

    def F_u(self, u, v):
        return -self.chi * np.ones_like(np.asarray(u, dtype=float))

    def F_v(self, u, v):
        return self.theta * np.exp(-self.nu * v) * (1.0 - self.nu * v)

    def F2(self, v):
        return self.theta * v * np.exp(-self.nu * v)

    def f2_max(self, upper):
        return float(self.F2(min(upper, 1.0 / self.nu)))

    def coefficients(self):
        th = self.theta
        return Coefficients(a=-self.chi, b=th, k=1.0, p=0.0, q=0.0, r=-2 * th * self.nu, l=0.0)

    def witnesses(self):
        return Witnesses(
            A3=True, K1=self.chi, K2=self.theta, K3=1.0, K4=self.theta / (self.nu * math.e)
        )


@dataclass(frozen=True)
class NicholsonVariant(ModelSpec):
    """-chi u + theta v with H(u) = u e^{-nu u}."""

    chi: float = 0.8
    theta: float = 1.0
    nu: float = 0.6
    name: ClassVar[str] = "nicholson_variant"

    def __post_init__(self):
        self._positive("chi", "theta", "nu")
        if not self.theta > self.chi:
            raise ValueError(f"nicholson_variant needs theta > chi, got theta={self.theta}, chi={self.chi}")

    def F(self, u, v):
        return -self.chi * u + self.theta * v

    def F_u(self, u, v):
        return -self.chi * np.ones_like(np.asarray(u, dtype=float))

    def F_v(self, u, v):
        return self.theta * np.ones_like(np.asarray(u, dtype=float))

    def H(self, u):
        return u * np.exp(-self.nu * u)

    def dH(self, u):
        return np.exp(-self.nu * u) * (1.0 - self.nu * u)

    def h_max(self, upper):
        return float(self.H(min(upper, 1.0 / self.nu)))

    def F2(self, v):
        return self.theta * v

    def f2_max(self, upper):
        return self.theta * upper

    def coefficients(self):
        return Coefficients(
            a=-self.chi, b=self.theta, k=1.0, p=0.0, q=0.0, r=0.0, l=-2 * self.nu
        )

    def witnesses(self):
        return Witnesses(
            A3=True, K1=self.chi, K2=self.theta, K3=1.0, K5=1.0 / (self.nu * math.e)
        )


@dataclass(frozen=True)
class Monod(ModelSpec):
    """-chi u + theta v / (A + v) with H(u) = u."""

    chi: float = 0.8
    theta: float = 1.0
    A: float = 1.0
    name: ClassVar[str] = "monod"

    def __post_init__(self):
        self._positive("chi", "theta", "A")
        if not self.theta / self.A > self.chi:
            raise ValueError(
                f"monod needs theta/A > chi for a bifurcation, got {self.theta / self.A} <= {self.chi}"
            )

    def F(self, u, v):
        return -self.chi * u + self.theta * v / (self.A + v)

    def F_u(self, u, v):
        return -self.chi * np.ones_like(np.asarray(u, dtype=float))

    def F_v(self, u, v):
        return self.theta * self.A / (self.A + v) ** 2

    def F2(self, v):
        return self.theta * v / (self.A + v)

    def f2_max(self, upper):
        return float(self.F2(upper))

    def coefficients(self):
        th, A = self.theta, self.A
        return Coefficients(a=-self.chi, b=th / A, k=1.0, p=0.0, q=0.0, r=-2 * th / A**2, l=0.0)

    def witnesses(self):
        return Witnesses(
            A3=True, K1=self.chi, K2=self.theta / self.A, K3=1.0, K4=self.theta, cooperative=True
        )


MODELS: dict[str, type[ModelSpec]] = {
    cls.name: cls
    for cls in (Logistic, LogisticCubic, FoodLimited, Nicholson, NicholsonVariant, Monod)
}


def make_model(name: str, **params: float) -> ModelSpec:
    try:
        cls = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; known: {', '.join(sorted(MODELS))}") from None
    known = {f.name for f in fields(cls)}
    extra = set(params) - known
    if extra:
        raise ValueError(f"model {name!r} has no parameter(s) {', '.join(sorted(extra))}")
    return cls(**{k: float(v) for k, v in params.items()})


def _domain(x, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < -NEG_TOL):
        raise DomainError(f"{what} has entries below 0 (min {np.min(x):.3e})")
    return np.where(x < 0, 0.0, x)


def eval_F(model: ModelSpec, u, v) -> np.ndarray:
    return model.F(_domain(u, "u"), _domain(v, "v"))


def eval_H(model: ModelSpec, u) -> np.ndarray:
    return model.H(_domain(u, "u"))


def coefficients(model: ModelSpec) -> Coefficients:
    return model.coefficients()


def assumption_witnesses(model: ModelSpec) -> Witnesses:
    return model.witnesses()
