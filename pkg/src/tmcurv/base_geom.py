"""Chart geometry of the base manifold: metric, connection and curvature.

Everything is evaluated pointwise from jets of the metric component
expressions, with derivative tensors packed as plain arrays (derivative axes
first).  Index conventions:

    gamma0[k, i, j]           Christoffel symbol with upper index k
    riemann0[l, k, i, j]      R(d_i, d_j) d_k = riemann0[l, k, i, j] d_l
    lowered[i, j, k, l]       g(R(d_i, d_j) d_k, d_l)
    nabla_riemann[m, ...]     covariant derivative slot first

The curvature sign convention is R(X, Y)Z = [nabla_X, nabla_Y]Z -
nabla_[X,Y] Z, under which the round sphere has positive sectional curvature.
Derivative axes have size 2n (the bundle chart layout) even though the base
metric only depends on x1..xn; the fiber-derivative blocks are identically
zero, which keeps every downstream consumer on a single variable layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr
from .jets import Jet, pack_matrix, packed_inverse

CONDITION_LIMIT = 1e12


class GeometryError(Exception):
    """Base class for geometric evaluation failures."""


class SingularMetricError(GeometryError):
    pass


class DegeneratePlaneError(GeometryError):
    pass


@dataclass(frozen=True)
class ChartMetric:
    """Base metric as an n x n matrix of expression ASTs over a domain box."""

    n: int
    entries: tuple
    domain: tuple

    @classmethod
    def from_strings(cls, rows, domain) -> "ChartMetric":
        n = len(rows)
        parsed = tuple(tuple(expr.parse(src, n) for src in row) for row in rows)
        box = tuple((float(lo), float(hi)) for lo, hi in domain)
        if len(box) != n:
            raise GeometryError(f"domain box has {len(box)} intervals for dimension {n}")
        for lo, hi in box:
            if not lo < hi:
                raise GeometryError(f"degenerate domain interval [{lo}, {hi}]")
        return cls(n, parsed, box)

    def contains(self, x, margin: float = 0.0) -> bool:
        for coord, (lo, hi) in zip(x, self.domain):
            pad = margin * (hi - lo)
            if not lo + pad <= coord <= hi - pad:
                return False
        return True


def gram_schmidt_frame(g0: np.ndarray) -> np.ndarray:
    """Orthonormalize the coordinate frame against g0, in index order.

    Returns frame[:, i] = components of the i-th frame vector.
    """
    n = g0.shape[0]
    cols = []
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for w in cols:
            v = v - (w @ g0 @ v) * w
        norm2 = v @ g0 @ v
        if norm2 <= 0.0:
            raise SingularMetricError("metric not positive definite during orthonormalization")
        cols.append(v / np.sqrt(norm2))
    return np.column_stack(cols)


class BasePointGeometry:
    """Metric, Christoffel, curvature and derived tensors at one chart point.

    Jets are retained as packed derivative tensors: the metric to third
    order, Christoffel symbols to second, the curvature tensor to first.
    """

    def __init__(self, metric: ChartMetric, x, order: int = 3):
        n = metric.n
        self.metric = metric
        self.n = n
        self.m = 2 * n
        self.x = np.asarray(x, dtype=float)
        if self.x.shape != (n,):
            raise GeometryError(f"point has shape {self.x.shape}, expected ({n},)")
        if min(int(order), 3) < 3:
            raise GeometryError("base geometry needs third-order metric jets")

        point = np.concatenate([self.x, np.zeros(n)])
        self.g_jets = [[expr.eval_jet(metric.entries[i][j], point, n, 3)
                        for j in range(n)] for i in range(n)]
        packed = pack_matrix(self.g_jets)
        self.g0, self.g1, self.g2, self.g3 = packed

        sym_err = float(np.max(np.abs(self.g0 - self.g0.T)))
        if sym_err > 1e-12:
            raise GeometryError(f"metric matrix asymmetric at {self.x} (max dev {sym_err:.2e})")
        eigs = np.linalg.eigvalsh(self.g0)
        if eigs[0] <= 0.0:
            raise SingularMetricError(
                f"metric not positive definite at {self.x} (min eigenvalue {eigs[0]:.3e})")
        if eigs[-1] / eigs[0] > CONDITION_LIMIT:
            raise SingularMetricError(
                f"metric condition number {eigs[-1] / eigs[0]:.3e} exceeds {CONDITION_LIMIT:.0e}")

        self.ginv0, self.ginv1, self.ginv2 = packed_inverse(packed[:3])

        # Christoffel symbols from t[d, i, j] = d_i g_jd + d_j g_id - d_d g_ij
        # and its x-derivatives (g has no u-dependence, so the fiber blocks of
        # every derivative axis are zero).
        g1, g2, g3 = self.g1, self.g2, self.g3
        m = self.m
        t0 = np.zeros((m, n, n))
        t1 = np.zeros((m, m, n, n))
        t2 = np.zeros((m, m, m, n, n))
        for d in range(n):
            for i in range(n):
                for j in range(n):
                    t0[d, i, j] = g1[i, j, d] + g1[j, i, d] - g1[d, i, j]
                    for a in range(n):
                        t1[a, d, i, j] = g2[a, i, j, d] + g2[a, j, i, d] - g2[a, d, i, j]
                        for b in range(n):
                            t2[a, b, d, i, j] = (g3[a, b, i, j, d] + g3[a, b, j, i, d]
                                                 - g3[a, b, d, i, j])

        self.gamma0 = 0.5 * np.einsum("kd,dij->kij", self.ginv0, t0[:n])
        self.gamma1 = 0.5 * (np.einsum("akd,dij->akij", self.ginv1, t0[:n])
                             + np.einsum("kd,adij->akij", self.ginv0, t1[:, :n]))
        self.gamma2 = 0.5 * (np.einsum("abkd,dij->abkij", self.ginv2, t0[:n])
                             + np.einsum("akd,bdij->abkij", self.ginv1, t1[:, :n])
                             + np.einsum("bkd,adij->abkij", self.ginv1, t1[:, :n])
                             + np.einsum("kd,abdij->abkij", self.ginv0, t2[:, :, :n]))

        # Curvature: R^l_{kij} = d_i Gam^l_{jk} - d_j Gam^l_{ik}
        #            + Gam^l_{im} Gam^m_{jk} - Gam^l_{jm} Gam^m_{ik}
        gam0, gam1, gam2 = self.gamma0, self.gamma1, self.gamma2
        quad = np.einsum("lim,mjk->lkij", gam0, gam0)
        self.riemann0 = (np.einsum("iljk->lkij", gam1[:n])
                         - np.einsum("jlik->lkij", gam1[:n])
                         + quad - quad.transpose(0, 1, 3, 2))

        dquad = (np.einsum("alim,mjk->alkij", gam1, gam0)
                 + np.einsum("lim,amjk->alkij", gam0, gam1))
        self.riemann1 = (np.einsum("ailjk->alkij", gam2[:, :n])
                         - np.einsum("ajlik->alkij", gam2[:, :n])
                         + dquad - dquad.transpose(0, 1, 2, 4, 3))

        # Covariant derivative (nabla_m R)^l_{kij}.
        r0 = self.riemann0
        self.nabla_riemann = (self.riemann1[:n]
                              + np.einsum("lmq,qkij->mlkij", gam0, r0)
                              - np.einsum("qmk,lqij->mlkij", gam0, r0)
                              - np.einsum("qmi,lkqj->mlkij", gam0, r0)
                              - np.einsum("qmj,lkiq->mlkij", gam0, r0))

        self.lowered = np.einsum("lm,mkij->ijkl", self.g0, r0)
        self.frame = gram_schmidt_frame(self.g0)
        # Ricci operator Q(d_c)^l = sum_i R(d_c, E_i) E_i over the frame.
        self.ricci_q = np.einsum("lkcj,ki,ji->lc", r0, self.frame, self.frame)

    # -- convenience contractions ----------------------------------

    def curvature_vec(self, X, Y, Z) -> np.ndarray:
        """Components of R(X, Y)Z."""
        return np.einsum("lkij,k,i,j->l", self.riemann0, Z, X, Y)

    def nabla_curvature_vec(self, W, X, Y, Z) -> np.ndarray:
        """Components of (nabla_W R)(X, Y)Z."""
        return np.einsum("mlkij,m,k,i,j->l", self.nabla_riemann, W, Z, X, Y)

    def connection_vec(self, X, Y) -> np.ndarray:
        """Components of nabla_X Y for constant-coefficient X, Y."""
        return np.einsum("kij,i,j->k", self.gamma0, X, Y)

    def inner(self, X, Y) -> float:
        return float(X @ self.g0 @ Y)

    def gamma_jet(self, k: int, i: int, j: int, order: int = 2) -> Jet:
        """Christoffel symbol (k, i, j) wrapped as a jet (order <= 2)."""
        terms = [float(self.gamma0[k, i, j])]
        if order >= 1:
            terms.append(self.gamma1[:, k, i, j])
        if order >= 2:
            terms.append(self.gamma2[:, :, k, i, j])
        return Jet(self.m, min(order, 2), terms)

    def g_jet(self, i: int, j: int, order: int = 3) -> Jet:
        return self.g_jets[i][j].truncate(order)

    def ginv_jet(self, i: int, j: int, order: int = 2) -> Jet:
        terms = [float(self.ginv0[i, j])]
        if order >= 1:
            terms.append(self.ginv1[:, i, j])
        if order >= 2:
            terms.append(self.ginv2[:, :, i, j])
        return Jet(self.m, min(order, 2), terms)


def base_geometry(metric: ChartMetric, x, order: int = 3) -> BasePointGeometry:
    return BasePointGeometry(metric, x, order)


def christoffel(metric: ChartMetric, x, geo: BasePointGeometry | None = None) -> np.ndarray:
    geo = geo or base_geometry(metric, x)
    return geo.gamma0


def riemann(metric: ChartMetric, x, geo: BasePointGeometry | None = None):
    """Upper-index curvature and the fully lowered tensor."""
    geo = geo or base_geometry(metric, x)
    return geo.riemann0, geo.lowered


def nabla_riemann(metric: ChartMetric, x, geo: BasePointGeometry | None = None) -> np.ndarray:
    geo = geo or base_geometry(metric, x)
    return geo.nabla_riemann


def ricci_base(metric: ChartMetric, x, geo: BasePointGeometry | None = None) -> np.ndarray:
    geo = geo or base_geometry(metric, x)
    return geo.ricci_q


def sectional_base(metric: ChartMetric, x, X, Y,
                   geo: BasePointGeometry | None = None) -> float:
    geo = geo or base_geometry(metric, x)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    denom = geo.inner(X, X) * geo.inner(Y, Y) - geo.inner(X, Y) ** 2
    if denom < 1e-12:
        raise DegeneratePlaneError(f"plane spanned by {X} and {Y} is degenerate")
    num = geo.inner(geo.curvature_vec(X, Y, Y), X)
    return num / denom
