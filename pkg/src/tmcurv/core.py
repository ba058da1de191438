"""Shared data types for the bundle geometry: points, lift vectors, parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr
from .base_geom import ChartMetric


class ParameterError(Exception):
    """Invalid isotropic parameter configuration."""


class NonPositiveAlphaError(ParameterError):
    pass


class SigmaNotZeroError(ParameterError):
    """Operation defined only for vanishing off-diagonal parameter."""


@dataclass(frozen=True)
class TangentPoint:
    """A point (x, u) of the bundle chart: base coordinates plus fiber vector."""

    x: np.ndarray
    u: np.ndarray

    @classmethod
    def of(cls, x, u) -> "TangentPoint":
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if x.shape != u.shape or x.ndim != 1:
            raise ValueError(f"incompatible point shapes {x.shape} and {u.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
            raise ValueError("point coordinates must be finite")
        return cls(x, u)

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])


@dataclass
class LiftVector:
    """Tangent vector to the bundle in the adapted frame: h- and v-components."""

    h: np.ndarray
    v: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "LiftVector":
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def horizontal(cls, X) -> "LiftVector":
        X = np.asarray(X, dtype=float)
        return cls(X.copy(), np.zeros_like(X))

    @classmethod
    def vertical(cls, X) -> "LiftVector":
        X = np.asarray(X, dtype=float)
        return cls(np.zeros_like(X), X.copy())

    @classmethod
    def lift(cls, case: str, X) -> "LiftVector":
        if case == "h":
            return cls.horizontal(X)
        if case == "v":
            return cls.vertical(X)
        raise ValueError(f"lift case must be 'h' or 'v', got {case!r}")

    def __add__(self, other: "LiftVector") -> "LiftVector":
        return LiftVector(self.h + other.h, self.v + other.v)

    def __sub__(self, other: "LiftVector") -> "LiftVector":
        return LiftVector(self.h - other.h, self.v - other.v)

    def __mul__(self, scalar: float) -> "LiftVector":
        return LiftVector(self.h * scalar, self.v * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "LiftVector":
        return LiftVector(-self.h, -self.v)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.h, self.v])

    def h_part(self) -> "LiftVector":
        return LiftVector(self.h.copy(), np.zeros_like(self.v))

    def v_part(self) -> "LiftVector":
        return LiftVector(np.zeros_like(self.h), self.v.copy())


@dataclass(frozen=True)
class IsotropicParams:
    """Scalar parameters of the bundle structure; the third one is derived.

    alpha and sigma are expressions on the chart (x, u); delta is always
    (1 + sigma^2) / alpha, which enforces alpha * delta - sigma^2 = 1 by
    construction.
    """

    alpha: object
    sigma: object

    @classmethod
    def from_strings(cls, alpha_src: str, sigma_src: str, n: int) -> "IsotropicParams":
        return cls(expr.parse(alpha_src, n), expr.parse(sigma_src, n))

    def alpha_at(self, point, n: int) -> float:
        return expr.eval_float(self.alpha, point, n)

    def sigma_at(self, point, n: int) -> float:
        return expr.eval_float(self.sigma, point, n)

    def delta_at(self, point, n: int) -> float:
        a = self.alpha_at(point, n)
        if a <= 0.0:
            raise NonPositiveAlphaError(f"alpha = {a} is not positive")
        s = self.sigma_at(point, n)
        return (1.0 + s * s) / a


@dataclass
class ScenarioGeometry:
    """Immutable bundle of everything a scenario computation needs.

    sigma_is_zero / alpha_is_constant are structural facts established during
    validation probing; the curvature formulas require the former and the
    audit policy keys off the latter.
    """

    metric: ChartMetric
    params: IsotropicParams
    jet_order: int = 3
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    sigma_is_zero: bool = True
    alpha_is_constant: bool = False
    name: str = "adhoc"

    @property
    def n(self) -> int:
        return self.metric.n
