"""Independent coordinate oracle on the 2n-dimensional bundle chart.

The bundle metric is rebuilt here in plain chart coordinates (x1..xn,
u1..un) directly from its defining values on lifts, using the coordinate
expression of the horizontal lift:

    d/dx^i = (d_i)^h + Gamma^k_{ij} u^j (d_k)^v,      d/du^k = (d_k)^v

Generic Levi-Civita / curvature / Ricci / Laplace-Beltrami machinery then
runs on the 2n x 2n component functions with jets, and the results are
converted back to the adapted frame for comparison.  Lifted fields are
differentiated as genuine fields: their coordinate components carry the
full x- and u-dependence through Gamma.

This module never calls the closed-form code in tm_geom; only the shared
base-geometry and jet machinery.  That independence is the entire value of
the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr
from .base_geom import BasePointGeometry, DegeneratePlaneError, SingularMetricError
from .core import LiftVector, NonPositiveAlphaError, ScenarioGeometry, TangentPoint
from .jets import Jet, pack_matrix, packed_entry, packed_inverse

METRIC_ORDER = 2


@dataclass(frozen=True)
class FrameChange:
    """Basis change between the adapted frame and chart coordinates at a point.

    The adapted-to-coordinate matrix is unit block-triangular (determinant
    one), so the inverse is exact.
    """

    P0: np.ndarray  # P0[k, i] = Gamma^k_{ij} u^j

    @property
    def n(self) -> int:
        return self.P0.shape[0]

    def matrix(self) -> np.ndarray:
        """Columns are the adapted basis vectors in chart coordinates."""
        n = self.n
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = np.eye(n)
        out[n:, :n] = -self.P0
        out[n:, n:] = np.eye(n)
        return out

    def to_coords(self, A: LiftVector) -> np.ndarray:
        return np.concatenate([A.h, A.v - self.P0 @ A.h])

    def to_adapted(self, c: np.ndarray) -> LiftVector:
        n = self.n
        h = np.asarray(c[:n], dtype=float)
        v = np.asarray(c[n:], dtype=float) + self.P0 @ h
        return LiftVector(h.copy(), v)


@dataclass
class TMChartMetric:
    """Coordinate components of the bundle metric as order-2 jets."""

    n: int
    entries: list            # 2n x 2n list of Jets
    packed: list             # [G0, G1, G2] arrays
    frame_change: FrameChange

    @property
    def values(self) -> np.ndarray:
        return self.packed[0]


def _param_jets(sg: ScenarioGeometry, pt: TangentPoint):
    point = pt.coords
    alpha = expr.eval_jet(sg.params.alpha, point, sg.n, METRIC_ORDER)
    if alpha.value <= 0.0:
        raise NonPositiveAlphaError(
            f"alpha = {alpha.value} is not positive at x={pt.x}, u={pt.u}")
    sigma = expr.eval_jet(sg.params.sigma, point, sg.n, METRIC_ORDER)
    delta = (1.0 + sigma * sigma) / alpha
    return alpha, sigma, delta


def _p_jets(geo: BasePointGeometry, u: np.ndarray):
    """P^k_i = Gamma^k_{ij} u^j as order-2 jets (the lift-identity block)."""
    n, m = geo.n, geo.m
    u_jets = [Jet.variable(n + j, u[j], m, METRIC_ORDER) for j in range(n)]
    table = []
    for k in range(n):
        row = []
        for i in range(n):
            acc = Jet.constant(0.0, m, METRIC_ORDER)
            for j in range(n):
                acc = acc + geo.gamma_jet(k, i, j, METRIC_ORDER) * u_jets[j]
            row.append(acc)
        table.append(row)
    return table


def build_tm_metric(sg: ScenarioGeometry, pt: TangentPoint,
                    geo: BasePointGeometry | None = None) -> TMChartMetric:
    """Coordinate components of the bundle metric, with order-2 jets."""
    geo = geo or BasePointGeometry(sg.metric, pt.x, order=sg.jet_order)
    n, m = geo.n, geo.m
    alpha, sigma, delta = _param_jets(sg, pt)
    P = _p_jets(geo, pt.u)
    g = [[geo.g_jet(i, j, METRIC_ORDER) for j in range(n)] for i in range(n)]

    entries = [[None] * m for _ in range(m)]
    for i in range(n):
        for j in range(i, n):
            acc = alpha * g[i][j]
            for k in range(n):
                acc = acc - sigma * (P[k][i] * g[k][j]) - sigma * (P[k][j] * g[i][k])
                for L in range(n):
                    acc = acc + delta * (P[k][i] * P[L][j] * g[k][L])
            entries[i][j] = acc
            entries[j][i] = acc
    for i in range(n):
        for L in range(n):
            acc = -sigma * g[i][L]
            for k in range(n):
                acc = acc + delta * (P[k][i] * g[k][L])
            entries[i][n + L] = acc
            entries[n + L][i] = acc
    for k in range(n):
        for L in range(k, n):
            acc = delta * g[k][L]
            entries[n + k][n + L] = acc
            entries[n + L][n + k] = acc

    packed = pack_matrix(entries)
    P0 = np.array([[P[k][i].value for i in range(n)] for k in range(n)])
    return TMChartMetric(n, entries, list(packed), FrameChange(P0))


class OraclePointContext:
    """Generic Levi-Civita machinery over the bundle chart at one point."""

    def __init__(self, sg: ScenarioGeometry, pt: TangentPoint,
                 need_curvature: bool = True,
                 geo: BasePointGeometry | None = None):
        self.sg = sg
        self.pt = pt
        self.n = sg.n
        self.m = 2 * sg.n
        self.geo = geo or BasePointGeometry(sg.metric, pt.x, order=sg.jet_order)
        self.tm_metric = build_tm_metric(sg, pt, geo=self.geo)
        self.frame_change = self.tm_metric.frame_change
        self._p_jets_cache = _p_jets(self.geo, pt.u)

        G0, G1, G2 = self.tm_metric.packed
        self.G0, self.G1, self.G2 = G0, G1, G2
        try:
            self.H0, self.H1 = packed_inverse([G0, G1])
        except np.linalg.LinAlgError as err:
            raise SingularMetricError(f"bundle metric singular at the point: {err}") from None

        m = self.m
        t0 = np.empty((m, m, m))
        for d in range(m):
            t0[d] = G1[:, :, d] + G1[:, :, d].T - G1[d]
        self.gamma_bar0 = 0.5 * np.einsum("cd,dab->cab", self.H0, t0)

        if need_curvature:
            t1 = np.empty((m, m, m, m))
            for q in range(m):
                for d in range(m):
                    t1[q, d] = G2[q, :, :, d] + G2[q, :, :, d].T - G2[q, d]
            self.gamma_bar1 = 0.5 * (np.einsum("qcd,dab->qcab", self.H1, t0)
                                     + np.einsum("cd,qdab->qcab", self.H0, t1))
            gb0, gb1 = self.gamma_bar0, self.gamma_bar1
            quad = np.einsum("dae,ebc->dcab", gb0, gb0)
            self.riemann_bar = (np.einsum("adbc->dcab", gb1)
                                - np.einsum("bdac->dcab", gb1)
                                + quad - quad.transpose(0, 1, 3, 2))
            self.lowered_bar = np.einsum("ed,dcab->abce", G0, self.riemann_bar)
            self.ricci_bar_op = np.einsum("ac,dcba->db", self.H0, self.riemann_bar)
        else:
            self.gamma_bar1 = None
            self.riemann_bar = None
            self.lowered_bar = None
            self.ricci_bar_op = None

    # -- lifted objects in coordinates --------------------------------

    def lifted_components(self, case: str, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if case == "h":
            return np.concatenate([X, -self.frame_change.P0 @ X])
        if case == "v":
            return np.concatenate([np.zeros(self.n), X])
        raise ValueError(f"lift case must be 'h' or 'v', got {case!r}")

    def lifted_field_jets(self, case: str, Y):
        """Coordinate component functions of a lifted constant-coefficient field."""
        n, m = self.n, self.m
        Y = np.asarray(Y, dtype=float)
        comps = []
        if case == "h":
            for j in range(n):
                comps.append(Jet.constant(Y[j], m, METRIC_ORDER))
            for k in range(n):
                acc = Jet.constant(0.0, m, METRIC_ORDER)
                for i in range(n):
                    acc = acc - self._p_jets_cache[k][i] * Y[i]
                comps.append(acc)
        elif case == "v":
            for j in range(n):
                comps.append(Jet.constant(0.0, m, METRIC_ORDER))
            for k in range(n):
                comps.append(Jet.constant(Y[k], m, METRIC_ORDER))
        else:
            raise ValueError(f"lift case must be 'h' or 'v', got {case!r}")
        return comps

    # -- operations ----------------------------------------------------

    def covderiv_lifted(self, acase: str, bcase: str, X, Y) -> LiftVector:
        """nabla of the lifted field of Y along the lifted direction of X."""
        A = self.lifted_components(acase, X)
        B = self.lifted_field_jets(bcase, Y)
        Bval = np.array([jet.value for jet in B])
        dB = np.column_stack([jet.gradient() for jet in B])  # dB[a, c] = d_a B^c
        out = A @ dB + np.einsum("a,cab,b->c", A, self.gamma_bar0, Bval)
        return self.frame_change.to_adapted(out)

    def riemann_lifted(self, acase: str, bcase: str, ccase: str, X, Y, Z) -> LiftVector:
        """R(A, B)C on lifted vectors; tensorial, so pointwise components suffice."""
        A = self.lifted_components(acase, X)
        B = self.lifted_components(bcase, Y)
        C = self.lifted_components(ccase, Z)
        out = np.einsum("dcab,c,a,b->d", self.riemann_bar, C, A, B)
        return self.frame_change.to_adapted(out)

    def lowered_adapted(self) -> np.ndarray:
        """Fully lowered curvature in the adapted basis: [A, B, C, D] slots."""
        M = self.frame_change.matrix()
        return np.einsum("abce,aA,bB,cC,eE->ABCE", self.lowered_bar, M, M, M, M,
                         optimize=True)

    def gbar_coord(self, A: np.ndarray, B: np.ndarray) -> float:
        return float(A @ self.G0 @ B)

    def ricci_lifted(self, case: str, X) -> LiftVector:
        A = self.lifted_components(case, X)
        return self.frame_change.to_adapted(self.ricci_bar_op @ A)

    def sectional(self, acase: str, bcase: str, X, Y) -> float:
        A = self.lifted_components(acase, X)
        B = self.lifted_components(bcase, Y)
        denom = (self.gbar_coord(A, A) * self.gbar_coord(B, B)
                 - self.gbar_coord(A, B) ** 2)
        if denom < 1e-12:
            raise DegeneratePlaneError("degenerate bundle plane")
        num = float(np.einsum("abce,a,b,c,e->", self.lowered_bar, A, B, B, A))
        return num / denom

    def gradient(self, f_jet: Jet) -> LiftVector:
        gvec = self.H0 @ f_jet.gradient()
        return self.frame_change.to_adapted(gvec)

    def laplace_beltrami(self, f_jet: Jet) -> float:
        hess = f_jet.terms[2]
        grad = f_jet.gradient()
        return float(np.einsum("ab,ab->", self.H0, hess)
                     - np.einsum("ab,cab,c->", self.H0, self.gamma_bar0, grad))

    def hessian_covderiv(self, acase: str, X, f_jet: Jet) -> LiftVector:
        """nabla along the lifted X of the gradient field of f (order-2 jet)."""
        m = self.m
        hjets = [[packed_entry([self.H0, self.H1], c, b) for b in range(m)]
                 for c in range(m)]
        gfield = []
        for c in range(m):
            acc = Jet.constant(0.0, m, f_jet.order - 1)
            for b in range(m):
                acc = acc + hjets[c][b].truncate(f_jet.order - 1) * f_jet.partial(b)
            gfield.append(acc)
        A = self.lifted_components(acase, X)
        Gval = np.array([jet.value for jet in gfield])
        dG = np.column_stack([jet.gradient() for jet in gfield])
        out = A @ dG + np.einsum("a,cab,b->c", A, self.gamma_bar0, Gval)
        return self.frame_change.to_adapted(out)


def oracle_context(sg: ScenarioGeometry, pt: TangentPoint,
                   need_curvature: bool = True) -> OraclePointContext:
    return OraclePointContext(sg, pt, need_curvature=need_curvature)


def oracle_christoffel_tm(sg, pt, octx: OraclePointContext | None = None) -> np.ndarray:
    octx = octx or oracle_context(sg, pt, need_curvature=False)
    return octx.gamma_bar0


def oracle_covderiv_lifted_field(sg, pt, acase, bcase, X, Y,
                                 octx: OraclePointContext | None = None) -> LiftVector:
    octx = octx or oracle_context(sg, pt, need_curvature=False)
    return octx.covderiv_lifted(acase, bcase, X, Y)


def oracle_riemann_tm(sg, pt, octx: OraclePointContext | None = None) -> np.ndarray:
    octx = octx or oracle_context(sg, pt)
    return octx.riemann_bar


def oracle_ricci_tm(sg, pt, octx: OraclePointContext | None = None) -> np.ndarray:
    octx = octx or oracle_context(sg, pt)
    return octx.ricci_bar_op


def oracle_scalar_ops(sg, pt, f, octx: OraclePointContext | None = None):
    """Gradient and Laplace-Beltrami of a scalar (AST or order-2 jet)."""
    octx = octx or oracle_context(sg, pt, need_curvature=False)
    f_jet = f if isinstance(f, Jet) else expr.eval_jet(f, pt.coords, sg.n, METRIC_ORDER)
    return octx.gradient(f_jet), octx.laplace_beltrami(f_jet)
