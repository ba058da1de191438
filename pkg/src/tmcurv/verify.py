"""Sampling, closed-form-vs-oracle comparison suites, and the audit engine.

Every comparison produces CheckResult records keyed by check id and point
index.  Closed-form equations whose displayed terms are ambiguous or under
suspicion are never allowed to hard-fail a run on scenarios where the
ambiguity is active (nonconstant alpha); they are reported as audit records
with per-term residuals and candidate readings side by side, and the oracle
verdict is recorded.  Residuals use the bundle-metric norm for vectors and
absolute values for scalars, normalized by max(|lhs|, |rhs|, 1).
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import expr, tm_geom
from .core import LiftVector, ScenarioGeometry, TangentPoint
from .oracle import OraclePointContext
from .tm_geom import PointContext

# Invariant tolerances, fixed by contract.
TOL_ALGEBRAIC = 1e-12      # J^2 = -Id, Hermitian metric, tensoriality
TOL_CONSTRAINT = 1e-14     # alpha*delta - sigma^2 = 1
TOL_IDENTITY = 1e-9        # curvature symmetries, Bianchi, compatibility, torsion
TOL_DUALITY = 1e-10        # gradient duality, sectional cross-consistency
TOL_FRAME = 1e-14          # frame-change round trip
TOL_CONSTRUCTION = 1e-12   # bundle-metric construction consistency

#: closed-form curvature equations with a flagged/ambiguous displayed term
FLAGGED_CURVATURE = frozenset({"hhv", "vhv"})
FLAGGED_SECTIONAL = frozenset({"hv", "vv"})

AUDIT_EQUATIONS = ("hhh", "hhv", "hvh", "vhv", "vvh", "vvv",
                   "ricci_h", "ricci_v", "K_hh", "K_hv", "K_vv", "laplacian")


class VerificationError(Exception):
    pass


@dataclass(frozen=True)
class SampleSpec:
    count: int = 100
    seed: int = 0
    margin: float = 0.05
    fiber_radius: float = 1.0
    alpha_floor: float = 1e-6


@dataclass
class CheckResult:
    check_id: str
    point_index: int
    abs_res: float
    rel_res: float
    passed: bool
    audit: bool = False


def sample_points(sg: ScenarioGeometry, spec: SampleSpec) -> list[TangentPoint]:
    """Deterministic feasible points: base in the padded box, fiber in a ball."""
    rng = np.random.default_rng(spec.seed)
    n = sg.n
    lows = np.array([lo + spec.margin * (hi - lo) for lo, hi in sg.metric.domain])
    highs = np.array([hi - spec.margin * (hi - lo) for lo, hi in sg.metric.domain])
    points: list[TangentPoint] = []
    attempts = 0
    max_attempts = max(1000, 200 * spec.count)
    while len(points) < spec.count:
        attempts += 1
        if attempts > max_attempts:
            raise VerificationError(
                f"could not sample {spec.count} feasible points in {max_attempts} draws "
                "(empty feasible region?)")
        x = rng.uniform(lows, highs)
        if spec.fiber_radius > 0.0:
            u = rng.uniform(-spec.fiber_radius, spec.fiber_radius, size=n)
            if float(np.linalg.norm(u)) > spec.fiber_radius:
                continue
        else:
            u = np.zeros(n)
        pt = TangentPoint.of(x, u)
        try:
            alpha = sg.params.alpha_at(pt.coords, n)
            sg.params.sigma_at(pt.coords, n)
        except expr.ExprDomainError:
            continue
        if alpha <= spec.alpha_floor:
            continue
        points.append(pt)
    return points


# -- residual helpers -------------------------------------------------------


def _vector_residual(ctx: PointContext, lhs: LiftVector, rhs: LiftVector):
    diff = ctx.gbar_norm(lhs - rhs)
    denom = max(ctx.gbar_norm(lhs), ctx.gbar_norm(rhs), 1.0)
    return diff, diff / denom


def _scalar_residual(lhs: float, rhs: float):
    diff = abs(lhs - rhs)
    denom = max(abs(lhs), abs(rhs), 1.0)
    return diff, diff / denom


def _passes(abs_res: float, rel_res: float, rel_tol: float, abs_tol: float) -> bool:
    return rel_res <= rel_tol or abs_res <= abs_tol


def _coordinate_vectors(n: int):
    return [np.eye(n)[i] for i in range(n)]


# -- comparison suites ------------------------------------------------------


def compare_connection(sg, points, contexts=None, oracles=None,
                       rel_tol=None, abs_tol=None) -> list[CheckResult]:
    """Closed-form connection vs generic Levi-Civita, all cases and pairs."""
    rel_tol = sg.rel_tol if rel_tol is None else rel_tol
    abs_tol = sg.abs_tol if abs_tol is None else abs_tol
    basis = _coordinate_vectors(sg.n)
    out = []
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt, need_curvature=False)
        for case in ("hh", "hv", "vh", "vv"):
            worst = (0.0, 0.0)
            for X, Y in itertools.product(basis, basis):
                closed = ctx.nabla(case[0], case[1], X, Y)
                orac = octx.covderiv_lifted(case[0], case[1], X, Y)
                res = _vector_residual(ctx, closed, orac)
                if res[0] > worst[0]:
                    worst = res
            out.append(CheckResult(f"connection/{case}", idx, worst[0], worst[1],
                                   _passes(*worst, rel_tol, abs_tol)))
    return out


def compare_curvature(sg, points, contexts=None, oracles=None,
                      rel_tol=None, abs_tol=None) -> list[CheckResult]:
    rel_tol = sg.rel_tol if rel_tol is None else rel_tol
    abs_tol = sg.abs_tol if abs_tol is None else abs_tol
    basis = _coordinate_vectors(sg.n)
    out = []
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt)
        for case in tm_geom.CURVATURE_CASES:
            worst = (0.0, 0.0)
            for X, Y, Z in itertools.product(basis, basis, basis):
                closed = tm_geom.riemann_bar(sg, pt, case, X, Y, Z, ctx=ctx)
                orac = octx.riemann_lifted(case[0], case[1], case[2], X, Y, Z)
                res = _vector_residual(ctx, closed, orac)
                if res[0] > worst[0]:
                    worst = res
            audit = case in FLAGGED_CURVATURE and not sg.alpha_is_constant
            out.append(CheckResult(f"curvature/{case}", idx, worst[0], worst[1],
                                   _passes(*worst, rel_tol, abs_tol), audit=audit))
    return out


def compare_ricci(sg, points, contexts=None, oracles=None,
                  rel_tol=None, abs_tol=None) -> list[CheckResult]:
    rel_tol = sg.rel_tol if rel_tol is None else rel_tol
    abs_tol = sg.abs_tol if abs_tol is None else abs_tol
    basis = _coordinate_vectors(sg.n)
    out = []
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt)
        for case in ("h", "v"):
            worst = (0.0, 0.0)
            for X in basis:
                closed = tm_geom.ricci_bar(sg, pt, case, X, ctx=ctx)
                orac = octx.ricci_lifted(case, X)
                res = _vector_residual(ctx, closed, orac)
                if res[0] > worst[0]:
                    worst = res
            audit = not sg.alpha_is_constant  # displayed coefficients unproven
            out.append(CheckResult(f"ricci/{case}", idx, worst[0], worst[1],
                                   _passes(*worst, rel_tol, abs_tol), audit=audit))
    return out


def compare_sectional(sg, points, contexts=None, oracles=None,
                      rel_tol=None, abs_tol=None) -> list[CheckResult]:
    rel_tol = sg.rel_tol if rel_tol is None else rel_tol
    abs_tol = sg.abs_tol if abs_tol is None else abs_tol
    out = []
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt)
        frame = ctx.geo.frame
        pairs = [(frame[:, i], frame[:, j])
                 for i in range(sg.n) for j in range(sg.n) if i != j]
        for case in ("hh", "hv", "vv"):
            worst = (0.0, 0.0)
            for X, Y in pairs:
                closed = tm_geom.sectional_bar(sg, pt, case, X, Y, ctx=ctx)
                orac = octx.sectional(case[0], case[1], X, Y)
                res = _scalar_residual(closed, orac)
                if res[0] > worst[0]:
                    worst = res
            audit = case in FLAGGED_SECTIONAL and not sg.alpha_is_constant
            out.append(CheckResult(f"sectional/{case}", idx, worst[0], worst[1],
                                   _passes(*worst, rel_tol, abs_tol), audit=audit))
    return out


def compare_laplacian(sg, points, contexts=None, oracles=None,
                      rel_tol=None, abs_tol=None) -> list[CheckResult]:
    rel_tol = sg.rel_tol if rel_tol is None else rel_tol
    abs_tol = sg.abs_tol if abs_tol is None else abs_tol
    out = []
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt, need_curvature=False)
        closed = ctx.laplacian_alpha
        orac = octx.laplace_beltrami(ctx.alpha_jet)
        res = _scalar_residual(closed, orac)
        out.append(CheckResult("laplacian", idx, res[0], res[1],
                               _passes(*res, rel_tol, abs_tol)))
    return out


# -- invariants --------------------------------------------------------------


def _lowered_closed(ctx: PointContext) -> np.ndarray:
    """Fully lowered closed-form curvature over the adapted basis."""
    n = ctx.n
    m = 2 * n
    basis = _coordinate_vectors(n)
    r4 = np.zeros((m, m, m, m))
    for (ai, acase), (bi, bcase), (ci, ccase) in itertools.product(
            enumerate("hv"), enumerate("hv"), enumerate("hv")):
        for s, t, r in itertools.product(range(n), range(n), range(n)):
            vec = tm_geom.riemann_bar_any(ctx, acase, bcase, ccase,
                                          basis[s], basis[t], basis[r])
            for (di, dcase), w in itertools.product(enumerate("hv"), range(n)):
                val = ctx.gbar(vec, LiftVector.lift(dcase, basis[w]))
                r4[ai * n + s, bi * n + t, ci * n + r, di * n + w] = val
    return r4


def _curvature_symmetry_checks(r4: np.ndarray, prefix: str):
    scale = max(float(np.abs(r4).max()), 1.0)
    asym_args = float(np.abs(r4 + r4.transpose(1, 0, 2, 3)).max())
    asym_vals = float(np.abs(r4 + r4.transpose(0, 1, 3, 2)).max())
    pair = float(np.abs(r4 - r4.transpose(2, 3, 0, 1)).max())
    bianchi = float(np.abs(r4 + np.einsum("abcd->bcad", r4)
                           + np.einsum("abcd->cabd", r4)).max())
    return [
        (f"{prefix}/antisym_arguments", asym_args, asym_args / scale),
        (f"{prefix}/antisym_values", asym_vals, asym_vals / scale),
        (f"{prefix}/pair_symmetry", pair, pair / scale),
        (f"{prefix}/first_bianchi", bianchi, bianchi / scale),
    ]


def invariant_suite(sg, points, contexts=None, oracles=None,
                    seed: int = 0, index_offset: int = 0) -> list[CheckResult]:
    """Structural identities on both the closed-form and oracle paths."""
    basis = _coordinate_vectors(sg.n)
    out = []
    n = sg.n
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt)
        rng = np.random.default_rng([seed, idx + index_offset])

        def add(check_id, abs_res, rel_res, tol, audit=False):
            out.append(CheckResult(check_id, idx, abs_res, rel_res,
                                   rel_res <= tol, audit=audit))

        # algebraic structure of J and gbar
        worst_j = worst_herm = 0.0
        for _ in range(10):
            A = LiftVector(rng.normal(size=n), rng.normal(size=n))
            B = LiftVector(rng.normal(size=n), rng.normal(size=n))
            JJA = tm_geom.j_apply(sg, pt, tm_geom.j_apply(sg, pt, A, ctx=ctx), ctx=ctx)
            num = ctx.gbar_norm(JJA + A)
            worst_j = max(worst_j, num / max(ctx.gbar_norm(A), 1.0))
            lhs = ctx.gbar(tm_geom.j_apply(sg, pt, A, ctx=ctx),
                           tm_geom.j_apply(sg, pt, B, ctx=ctx))
            rhs = ctx.gbar(A, B)
            worst_herm = max(worst_herm, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))
        add("invariant/j_squared", worst_j, worst_j, TOL_ALGEBRAIC)
        add("invariant/hermitian", worst_herm, worst_herm, TOL_ALGEBRAIC)

        eigs = np.linalg.eigvalsh(ctx.gbar_matrix())
        posdef_res = max(0.0, -float(eigs[0]))
        out.append(CheckResult("invariant/gbar_positive_definite", idx,
                               posdef_res, posdef_res, bool(eigs[0] > 0.0)))

        constraint = abs(ctx.alpha * ctx.delta - ctx.sigma ** 2 - 1.0)
        add("invariant/unit_constraint", constraint, constraint, TOL_CONSTRAINT)

        # metric compatibility of the closed-form connection
        worst_mc = 0.0
        for acase, bcase, ccase in itertools.product("hv", repeat=3):
            for i, j, k in itertools.product(range(n), repeat=3):
                gj = ctx.geo.g_jet(j, k, 2)
                if (bcase, ccase) == ("h", "h"):
                    F = ctx.alpha_jet * gj
                elif (bcase, ccase) == ("v", "v"):
                    F = ctx.delta_jet * gj
                else:
                    F = (ctx.sigma_jet * gj) * (-1.0)
                lhs = ctx.lift_value(acase, basis[i], F)
                nb = ctx.nabla(acase, bcase, basis[i], basis[j])
                nc = ctx.nabla(acase, ccase, basis[i], basis[k])
                rhs = (ctx.gbar(nb, LiftVector.lift(ccase, basis[k]))
                       + ctx.gbar(LiftVector.lift(bcase, basis[j]), nc))
                worst_mc = max(worst_mc, abs(lhs - rhs))
        add("invariant/metric_compatibility", worst_mc, worst_mc, TOL_IDENTITY)

        # torsion-freeness in lift form (coordinate fields commute)
        worst_t = 0.0
        for i, j in itertools.product(range(n), repeat=2):
            X, Y = basis[i], basis[j]
            d = (ctx.nabla("h", "h", X, Y) - ctx.nabla("h", "h", Y, X)
                 + LiftVector.vertical(ctx.geo.curvature_vec(X, Y, ctx.u)))
            worst_t = max(worst_t, ctx.gbar_norm(d))
            d = (ctx.nabla("h", "v", X, Y) - ctx.nabla("v", "h", Y, X)
                 - LiftVector.vertical(ctx.geo.connection_vec(X, Y)))
            worst_t = max(worst_t, ctx.gbar_norm(d))
            d = ctx.nabla("v", "v", X, Y) - ctx.nabla("v", "v", Y, X)
            worst_t = max(worst_t, ctx.gbar_norm(d))
        add("invariant/torsion_free", worst_t, worst_t, TOL_IDENTITY)

        # gradient duality against 20 random directions
        worst_g = 0.0
        ga = ctx.grad_alpha
        for _ in range(20):
            A = LiftVector(rng.normal(size=n), rng.normal(size=n))
            lhs = ctx.gbar(ga, A)
            rhs = (ctx.lift_h_value(A.h, ctx.alpha_jet)
                   + ctx.lift_v_value(A.v, ctx.alpha_jet))
            worst_g = max(worst_g, abs(lhs - rhs))
        add("invariant/grad_duality", worst_g, worst_g, TOL_DUALITY)

        # frame-change round trip and construction consistency
        fc = octx.frame_change
        worst_f = 0.0
        for _ in range(5):
            A = LiftVector(rng.normal(size=n), rng.normal(size=n))
            back = fc.to_adapted(fc.to_coords(A))
            worst_f = max(worst_f, float(np.abs((back - A).as_array()).max()))
        add("invariant/frame_roundtrip", worst_f, worst_f, TOL_FRAME)

        M = fc.matrix()
        gad = M.T @ octx.G0 @ M
        cons = float(np.abs(gad - ctx.gbar_matrix()).max())
        add("invariant/tm_metric_consistency", cons,
            cons / max(float(np.abs(gad).max()), 1.0), TOL_CONSTRUCTION)

        # oracle self-tests
        gb0 = octx.gamma_bar0
        gam_sym = float(np.abs(gb0 - gb0.transpose(0, 2, 1)).max())
        add("invariant/oracle_gamma_symmetric", gam_sym, gam_sym, TOL_ALGEBRAIC)

        nabla_g = (octx.G1
                   - np.einsum("dca,db->cab", gb0, octx.G0)
                   - np.einsum("dcb,ad->cab", gb0, octx.G0))
        mc = float(np.abs(nabla_g).max())
        add("invariant/oracle_metric_compatibility", mc, mc, TOL_IDENTITY)

        if octx.riemann_bar is not None:
            r4o = octx.lowered_adapted()
            for check_id, a_res, r_res in _curvature_symmetry_checks(r4o, "invariant/oracle"):
                add(check_id, a_res, r_res, TOL_IDENTITY)

        # closed-form curvature structure (sigma == 0 only)
        if sg.sigma_is_zero:
            r4c = _lowered_closed(ctx)
            for check_id, a_res, r_res in _curvature_symmetry_checks(r4c, "invariant/closed"):
                add(check_id, a_res, r_res, TOL_IDENTITY)
            if octx.riemann_bar is not None:
                r4o = octx.lowered_adapted()
                dev = float(np.abs(r4c - r4o).max())
                add("invariant/closed_vs_oracle_lowered", dev,
                    dev / max(float(np.abs(r4o).max()), 1.0), sg.rel_tol,
                    audit=not sg.alpha_is_constant)

            # tensoriality of the curvature blocks under scaling
            X, Y, Z = (rng.normal(size=n) for _ in range(3))
            lam = 2.5
            base_v = tm_geom.riemann_bar(sg, pt, "hhh", X, Y, Z, ctx=ctx)
            scaled = tm_geom.riemann_bar(sg, pt, "hhh", lam * X, Y, Z, ctx=ctx)
            dev = ctx.gbar_norm(scaled - lam * base_v)
            rel = dev / max(ctx.gbar_norm(scaled), 1.0)
            add("invariant/tensoriality", dev, rel, TOL_ALGEBRAIC)

            # sectional curvature cross-consistency with the hhh block
            frame = ctx.geo.frame
            worst_s = 0.0
            for i, j in itertools.combinations(range(n), 2):
                Xf, Yf = frame[:, i], frame[:, j]
                k_direct = tm_geom.sectional_bar(sg, pt, "hh", Xf, Yf, ctx=ctx)
                block = tm_geom.riemann_bar(sg, pt, "hhh", Xf, Yf, Yf, ctx=ctx)
                k_block = ctx.gbar(block, LiftVector.horizontal(Xf)) / ctx.alpha ** 2
                dev = abs(k_direct - k_block)
                worst_s = max(worst_s, dev / max(abs(k_direct), abs(k_block), 1.0))
            add("invariant/sectional_consistency", worst_s, worst_s, TOL_DUALITY)

            # Ricci frame-trace self-consistency (completed reading)
            worst_r = 0.0
            for case in ("h", "v"):
                for X in basis:
                    direct = tm_geom.ricci_bar(sg, pt, case, X, ctx=ctx,
                                               reading="completed")
                    trace = tm_geom.ricci_bar_frame_trace(sg, pt, case, X, ctx=ctx)
                    res = _vector_residual(ctx, direct, trace)
                    worst_r = max(worst_r, res[1])
            add("invariant/ricci_frame_trace", worst_r, worst_r, TOL_DUALITY)
    return out


# -- audit engine ------------------------------------------------------------


class _ReadingTally:
    """Worst residual plus the closed/oracle magnitudes where it occurred."""

    def __init__(self):
        self.max_abs = 0.0
        self.max_rel = 0.0
        self.closed = 0.0
        self.oracle = 0.0

    def update(self, abs_res, rel_res, closed, oracle):
        self.max_rel = max(self.max_rel, rel_res)
        if abs_res >= self.max_abs:
            self.max_abs = abs_res
            self.closed = closed
            self.oracle = oracle

    def as_dict(self):
        return {"max_abs": float(self.max_abs), "max_rel": float(self.max_rel),
                "closed_value": float(self.closed), "oracle_value": float(self.oracle)}


def audit_equation(sg, points, equation_id: str, contexts=None, oracles=None):
    """Per-term audit of one closed-form equation against the oracle.

    Returns one record per point with labelled term magnitudes, the total
    closed-form and oracle values at the worst input combination (norms for
    vector equations), residuals for every candidate reading where the
    displayed equation is ambiguous, and the oracle verdict.
    """
    if equation_id not in AUDIT_EQUATIONS:
        raise VerificationError(
            f"unknown equation id {equation_id!r}; expected one of {AUDIT_EQUATIONS}")
    if not sg.sigma_is_zero:
        raise VerificationError("audit equations are defined for sigma == 0 scenarios")
    basis = _coordinate_vectors(sg.n)
    records = []
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt)
        record = {"equation": equation_id, "point_index": idx,
                  "x": [float(c) for c in pt.x], "u": [float(c) for c in pt.u]}
        term_norms: dict[str, float] = {}

        if equation_id in tm_geom.CURVATURE_CASES:
            case = equation_id
            names = tm_geom.DOT_READINGS if case == "hhv" else ("as_stated",)
            readings = {name: _ReadingTally() for name in names}
            for X, Y, Z in itertools.product(basis, basis, basis):
                orac = octx.riemann_lifted(case[0], case[1], case[2], X, Y, Z)
                for name in readings:
                    kw = {"dot_reading": name} if case == "hhv" else {}
                    closed, terms = tm_geom.riemann_bar(sg, pt, case, X, Y, Z,
                                                        ctx=ctx, with_terms=True, **kw)
                    res = _vector_residual(ctx, closed, orac)
                    readings[name].update(*res, ctx.gbar_norm(closed),
                                          ctx.gbar_norm(orac))
                    if name in ("derivation", "as_stated"):
                        for label, vec in terms:
                            term_norms[label] = max(term_norms.get(label, 0.0),
                                                    ctx.gbar_norm(vec))
        elif equation_id in ("ricci_h", "ricci_v"):
            case = equation_id[-1]
            readings = {name: _ReadingTally()
                        for name in ("as_stated", "completed", "frame_trace")}
            for X in basis:
                orac = octx.ricci_lifted(case, X)
                onorm = ctx.gbar_norm(orac)
                for name in ("as_stated", "completed"):
                    closed, terms = tm_geom.ricci_bar(sg, pt, case, X, ctx=ctx,
                                                      with_terms=True, reading=name)
                    res = _vector_residual(ctx, closed, orac)
                    readings[name].update(*res, ctx.gbar_norm(closed), onorm)
                    if name == "as_stated":
                        for label, vec in terms:
                            term_norms[label] = max(term_norms.get(label, 0.0),
                                                    ctx.gbar_norm(vec))
                trace = tm_geom.ricci_bar_frame_trace(sg, pt, case, X, ctx=ctx)
                res = _vector_residual(ctx, trace, orac)
                readings["frame_trace"].update(*res, ctx.gbar_norm(trace), onorm)
        elif equation_id in ("K_hh", "K_hv", "K_vv"):
            case = equation_id[2:]
            frame = ctx.geo.frame
            pairs = [(frame[:, i], frame[:, j])
                     for i in range(sg.n) for j in range(sg.n) if i != j]
            readings = {"as_stated": _ReadingTally()}
            for X, Y in pairs:
                closed, terms = tm_geom.sectional_bar(sg, pt, case, X, Y,
                                                      ctx=ctx, with_terms=True)
                orac = octx.sectional(case[0], case[1], X, Y)
                res = _scalar_residual(closed, orac)
                readings["as_stated"].update(*res, closed, orac)
                for label, val in terms:
                    term_norms[label] = max(term_norms.get(label, 0.0), abs(val))
        else:  # laplacian
            closed = ctx.laplacian_alpha
            orac = octx.laplace_beltrami(ctx.alpha_jet)
            readings = {"as_stated": _ReadingTally()}
            readings["as_stated"].update(*_scalar_residual(closed, orac), closed, orac)
            term_norms = dict(ctx.laplacian_terms())

        record["terms"] = [{"term": k, "max_norm": float(v)}
                           for k, v in term_norms.items()]
        record["readings"] = {k: tally.as_dict() for k, tally in readings.items()}
        passing = sorted(name for name, res in record["readings"].items()
                         if res["max_rel"] <= sg.rel_tol
                         or res["max_abs"] <= sg.abs_tol)
        record["verdict"] = ("confirmed: " + ", ".join(passing)) if passing \
            else "unresolved: no reading matches the oracle"
        records.append(record)
    return records


def connection_reading_audit(sg, points, contexts=None, oracles=None):
    """Audit record comparing the two general-sigma connection readings."""
    basis = _coordinate_vectors(sg.n)
    records = []
    for idx, pt in enumerate(points):
        ctx = contexts[idx] if contexts else tm_geom.point_context(sg, pt)
        octx = oracles[idx] if oracles else OraclePointContext(sg, pt, need_curvature=False)
        readings = {"koszul": _ReadingTally(), "variant": _ReadingTally()}
        for case in ("hh", "hv", "vh", "vv"):
            for X, Y in itertools.product(basis, basis):
                orac = octx.covderiv_lifted(case[0], case[1], X, Y)
                for name in readings:
                    closed = ctx.nabla(case[0], case[1], X, Y, reading=name)
                    res = _vector_residual(ctx, closed, orac)
                    readings[name].update(*res, ctx.gbar_norm(closed),
                                          ctx.gbar_norm(orac))
        rendered = {k: tally.as_dict() for k, tally in readings.items()}
        passing = sorted(name for name, res in rendered.items()
                         if res["max_rel"] <= sg.rel_tol
                         or res["max_abs"] <= sg.abs_tol)
        records.append({
            "equation": "connection",
            "point_index": idx,
            "x": [float(c) for c in pt.x], "u": [float(c) for c in pt.u],
            "readings": rendered,
            "verdict": ("confirmed: " + ", ".join(passing)) if passing
            else "unresolved: no reading matches the oracle",
        })
    return records


# -- orchestration -----------------------------------------------------------

CHECK_NAMES = ("connection", "curvature", "ricci", "sectional", "laplacian",
               "invariants")


def checks_for(sg: ScenarioGeometry, requested=None) -> list[str]:
    """Applicable checks; curvature-family checks need sigma == 0."""
    curvature_family = {"curvature", "ricci", "sectional", "laplacian"}
    if requested is None:
        selected = [c for c in CHECK_NAMES
                    if sg.sigma_is_zero or c not in curvature_family]
    else:
        unknown = set(requested) - set(CHECK_NAMES)
        if unknown:
            raise VerificationError(f"unknown checks: {sorted(unknown)}")
        bad = set(requested) & curvature_family if not sg.sigma_is_zero else set()
        if bad:
            raise VerificationError(
                f"checks {sorted(bad)} require sigma == 0 in the scenario")
        selected = list(requested)
    return selected


def _run_chunk(sg, points, offset, checks, seed, audit_points):
    need_curv = bool({"curvature", "ricci", "sectional", "invariants"} & set(checks))
    contexts = [tm_geom.point_context(sg, pt) for pt in points]
    oracles = [OraclePointContext(sg, pt, need_curvature=need_curv) for pt in points]
    results: list[CheckResult] = []
    audits: list[dict] = []
    if "connection" in checks:
        results += compare_connection(sg, points, contexts, oracles)
        if not sg.sigma_is_zero:
            audits += connection_reading_audit(
                sg, points[:audit_points], contexts[:audit_points], oracles[:audit_points])
    if "curvature" in checks:
        results += compare_curvature(sg, points, contexts, oracles)
        if not sg.alpha_is_constant:
            for eq in sorted(FLAGGED_CURVATURE):
                audits += audit_equation(sg, points[:audit_points], eq,
                                         contexts[:audit_points], oracles[:audit_points])
    if "ricci" in checks:
        results += compare_ricci(sg, points, contexts, oracles)
        if not sg.alpha_is_constant:
            for eq in ("ricci_h", "ricci_v"):
                audits += audit_equation(sg, points[:audit_points], eq,
                                         contexts[:audit_points], oracles[:audit_points])
    if "sectional" in checks:
        results += compare_sectional(sg, points, contexts, oracles)
        if not sg.alpha_is_constant:
            for eq in ("K_hv", "K_vv"):
                audits += audit_equation(sg, points[:audit_points], eq,
                                         contexts[:audit_points], oracles[:audit_points])
    if "laplacian" in checks:
        results += compare_laplacian(sg, points, contexts, oracles)
    if "invariants" in checks:
        results += invariant_suite(sg, points, contexts, oracles, seed=seed,
                                   index_offset=offset)
    for res in results:
        res.point_index += offset
    for rec in audits:
        rec["point_index"] += offset
    return results, audits


def worker_count() -> int:
    raw = os.environ.get("TMCURV_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise VerificationError(f"TMCURV_WORKERS must be an integer, got {raw!r}")
    return max(1, value)


def run_checks(sg: ScenarioGeometry, spec: SampleSpec, checks=None,
               audit_points: int = 3):
    """Run the selected suites over sampled points; returns results + audits.

    Point evaluation is data-parallel when TMCURV_WORKERS > 1; aggregation is
    order-insensitive (results are sorted before emission).
    """
    selected = checks_for(sg, checks)
    points = sample_points(sg, spec)
    workers = worker_count()
    if workers > 1 and len(points) > 1:
        chunks = []
        size = (len(points) + workers - 1) // workers
        for start in range(0, len(points), size):
            chunks.append((points[start:start + size], start))
        results: list[CheckResult] = []
        audits: list[dict] = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, sg, chunk, offset, selected,
                                   spec.seed, audit_points if offset == 0 else 0)
                       for chunk, offset in chunks]
            for fut in futures:
                res, aud = fut.result()
                results += res
                audits += aud
    else:
        results, audits = _run_chunk(sg, points, 0, selected, spec.seed, audit_points)
    results.sort(key=lambda r: (r.check_id, r.point_index))
    audits.sort(key=lambda r: (r["equation"], r["point_index"]))
    return points, results, audits
