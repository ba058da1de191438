"""Closed-form geometry of the induced bundle metric, in the adapted frame.

The bundle metric gbar on the tangent bundle chart (x, u) is defined on lifts
by three scalar parameters alpha, sigma, delta with alpha*delta - sigma^2 = 1:

    gbar(X^h, Y^h) =  alpha g(X, Y)
    gbar(X^h, Y^v) = -sigma g(X, Y)
    gbar(X^v, Y^v) =  delta g(X, Y)

This module evaluates the closed-form connection, curvature blocks, Ricci
operator, sectional curvatures, gradient and rough Laplacian of gbar at a
point, entirely in the adapted frame {(d_i)^h, (d_i)^v}.  Coordinate
representations of the same objects live only in the oracle module, which
never calls anything here.

Derivatives of scalars along lifted fields are evaluated by pushing the lift
identities through jets: X^h acts as the x-part minus (Gamma u) times the
u-part, X^v acts as the u-part.  Second derivatives such as Y^h(Z^h(f))
extend Z as a constant-coefficient coordinate field before lifting, so the
outer derivative sees the Gamma-dependence of the lift.

The connection is implemented for general sigma.  Two readings exist: the
default is re-derived here from the Koszul identity of the defining metric
(and is what the coordinate oracle confirms); a "variant" reading preserves
an alternative form of the sigma-coupling terms that the oracle rejects for
sigma != 0.  The two coincide identically when sigma == 0.  The curvature /
Ricci / sectional / Laplacian closed forms require sigma == 0.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import expr
from .base_geom import BasePointGeometry
from .core import (LiftVector, NonPositiveAlphaError, ScenarioGeometry,
                   SigmaNotZeroError, TangentPoint)
from .jets import Jet

PARAM_ORDER = 2

#: readings of the ambiguous composed-curvature term in the hhv equation
DOT_READINGS = ("derivation", "duplicate")


def _basis(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


class PointContext:
    """Everything the closed-form operations need at one bundle point.

    Construction is cheap; the heavier tables (second derivatives of alpha,
    gradient fields, per-basis connection values, the Laplacian) are built
    lazily and cached, so connection-only workloads never pay for them.
    Instances are read-only after creation and safe to share across threads.
    """

    def __init__(self, sg: ScenarioGeometry, pt: TangentPoint):
        self.sg = sg
        self.pt = pt
        self.n = sg.n
        self.m = 2 * sg.n
        self.geo = BasePointGeometry(sg.metric, pt.x, order=sg.jet_order)
        self.u = pt.u.astype(float)
        point = pt.coords

        self.alpha_jet = expr.eval_jet(sg.params.alpha, point, sg.n, PARAM_ORDER)
        self.sigma_jet = expr.eval_jet(sg.params.sigma, point, sg.n, PARAM_ORDER)
        self.alpha = self.alpha_jet.value
        if self.alpha <= 0.0:
            raise NonPositiveAlphaError(
                f"alpha = {self.alpha} is not positive at x={pt.x}, u={pt.u}")
        self.delta_jet = (1.0 + self.sigma_jet * self.sigma_jet) / self.alpha_jet
        self.sigma = self.sigma_jet.value
        self.delta = self.delta_jet.value

        # P0[k, i] = Gamma^k_{ij} u^j realizes the horizontal lift operator.
        self.P0 = np.einsum("kij,j->ki", self.geo.gamma0, self.u)

    # -- lift derivatives of scalars --------------------------------

    def lift_h_value(self, W, F: Jet) -> float:
        """Value of W^h(F) for constant coefficients W (or a coefficient-jet list)."""
        n = self.n
        grads = F.gradient()
        hvec = grads[:n] - self.P0.T @ grads[n:]
        if isinstance(W, (list, tuple)) and W and isinstance(W[0], Jet):
            W = np.array([w.value for w in W])
        return float(np.asarray(W, dtype=float) @ hvec)

    def lift_v_value(self, W, F: Jet) -> float:
        grads = F.gradient()
        if isinstance(W, (list, tuple)) and W and isinstance(W[0], Jet):
            W = np.array([w.value for w in W])
        return float(np.asarray(W, dtype=float) @ grads[self.n:])

    @cached_property
    def P_jets(self):
        """P^k_i = Gamma^k_{ij} u^j as order-2 jets on the chart."""
        n, m = self.n, self.m
        u_jets = [Jet.variable(n + j, self.u[j], m, PARAM_ORDER) for j in range(n)]
        table = []
        for k in range(n):
            row = []
            for i in range(n):
                acc = Jet.constant(0.0, m, PARAM_ORDER)
                for j in range(n):
                    acc = acc + self.geo.gamma_jet(k, i, j, PARAM_ORDER) * u_jets[j]
                row.append(acc)
            table.append(row)
        return table

    def lift_h_jet(self, W, F: Jet) -> Jet:
        """W^h(F) as a jet of order F.order - 1; W constant or coefficient jets."""
        n = self.n
        out_order = F.order - 1
        total = None
        for i in range(n):
            term = F.partial(i)
            for k in range(n):
                term = term - self.P_jets[k][i].truncate(out_order) * F.partial(n + k)
            w = W[i]
            term = (w.truncate(out_order) * term) if isinstance(w, Jet) else term * float(w)
            total = term if total is None else total + term
        return total

    def lift_v_jet(self, W, F: Jet) -> Jet:
        n = self.n
        out_order = F.order - 1
        total = None
        for k in range(n):
            term = F.partial(n + k)
            w = W[k]
            term = (w.truncate(out_order) * term) if isinstance(w, Jet) else term * float(w)
            total = term if total is None else total + term
        return total

    def lift_value(self, case: str, W, F: Jet) -> float:
        return self.lift_h_value(W, F) if case == "h" else self.lift_v_value(W, F)

    # -- first-derivative tables for alpha, sigma, delta ------------

    def _deriv_tables(self, jet: Jet):
        grads = jet.gradient()
        dh = grads[:self.n] - self.P0.T @ grads[self.n:]
        dv = grads[self.n:].copy()
        return dh, dv

    @cached_property
    def d_alpha(self):
        return self._deriv_tables(self.alpha_jet)

    @cached_property
    def d_sigma(self):
        return self._deriv_tables(self.sigma_jet)

    @cached_property
    def d_delta(self):
        return self._deriv_tables(self.delta_jet)

    def dh_alpha(self, X) -> float:
        return float(np.asarray(X) @ self.d_alpha[0])

    def dv_alpha(self, X) -> float:
        return float(np.asarray(X) @ self.d_alpha[1])

    # -- gradients ----------------------------------------------------

    def _grad_split(self, dh, dv):
        """h/v components of the gbar-gradient from lowered lift-derivatives.

        The adapted-frame Gram matrix is [[alpha, -sigma], [-sigma, delta]]
        (x) g, whose inverse is [[delta, sigma], [sigma, alpha]] (x) g^-1
        because alpha*delta - sigma^2 = 1.
        """
        ah = self.geo.ginv0 @ dh
        av = self.geo.ginv0 @ dv
        gh = self.delta * ah + self.sigma * av
        gv = self.sigma * ah + self.alpha * av
        return LiftVector(gh, gv)

    @cached_property
    def grad_alpha(self) -> LiftVector:
        return self._grad_split(*self.d_alpha)

    @cached_property
    def grad_sigma(self) -> LiftVector:
        return self._grad_split(*self.d_sigma)

    @cached_property
    def grad_delta(self) -> LiftVector:
        return self._grad_split(*self.d_delta)

    def gradient_field_jets(self, f_jet: Jet):
        """Adapted-frame coefficient jets (order f-1) of the gradient field of f."""
        n = self.n
        out_order = f_jet.order - 1
        hvec = []
        for i in range(n):
            term = f_jet.partial(i)
            for k in range(n):
                term = term - self.P_jets[k][i].truncate(out_order) * f_jet.partial(n + k)
            hvec.append(term)
        vvec = [f_jet.partial(n + k) for k in range(n)]
        delta_t = self.delta_jet.truncate(out_order)
        sigma_t = self.sigma_jet.truncate(out_order)
        alpha_t = self.alpha_jet.truncate(out_order)
        gh, gv = [], []
        for c in range(n):
            acc_h = Jet.constant(0.0, self.m, out_order)
            acc_v = Jet.constant(0.0, self.m, out_order)
            for j in range(n):
                ginv_cj = self.geo.ginv_jet(c, j, out_order)
                acc_h = acc_h + ginv_cj * (delta_t * hvec[j] + sigma_t * vvec[j])
                acc_v = acc_v + ginv_cj * (sigma_t * hvec[j] + alpha_t * vvec[j])
            gh.append(acc_h)
            gv.append(acc_v)
        return gh, gv

    @cached_property
    def grad_alpha_field(self):
        return self.gradient_field_jets(self.alpha_jet)

    # -- second-derivative tables for alpha ---------------------------

    @cached_property
    def _inner_h(self):
        """e_j^h(alpha) as order-1 jets, one per coordinate direction."""
        return [self.lift_h_jet(_basis(self.n, j), self.alpha_jet) for j in range(self.n)]

    @cached_property
    def _inner_v(self):
        return [self.alpha_jet.partial(self.n + j) for j in range(self.n)]

    @cached_property
    def ddhh(self):
        """ddhh[i, j] = e_i^h(e_j^h(alpha)) with constant-coefficient extension."""
        n = self.n
        out = np.zeros((n, n))
        for j in range(n):
            inner = self._inner_h[j]
            for i in range(n):
                out[i, j] = self.lift_h_value(_basis(n, i), inner)
        return out

    @cached_property
    def ddhv(self):
        """ddhv[i, j] = e_i^h(e_j^v(alpha))."""
        n = self.n
        out = np.zeros((n, n))
        for j in range(n):
            inner = self._inner_v[j]
            for i in range(n):
                out[i, j] = self.lift_h_value(_basis(n, i), inner)
        return out

    @cached_property
    def ddvh(self):
        """ddvh[i, j] = e_i^v(e_j^h(alpha))."""
        n = self.n
        out = np.zeros((n, n))
        for j in range(n):
            grads = self._inner_h[j].gradient()
            out[:, j] = grads[n:]
        return out

    @cached_property
    def ddvv(self):
        """ddvv[i, j] = e_i^v(e_j^v(alpha)) (the fiber Hessian)."""
        n = self.n
        out = np.zeros((n, n))
        for j in range(n):
            grads = self._inner_v[j].gradient()
            out[:, j] = grads[n:]
        return out

    # -- adapted-frame metric -----------------------------------------

    def gbar(self, A: LiftVector, B: LiftVector) -> float:
        g0 = self.geo.g0
        return float(self.alpha * (A.h @ g0 @ B.h)
                     - self.sigma * (A.h @ g0 @ B.v + A.v @ g0 @ B.h)
                     + self.delta * (A.v @ g0 @ B.v))

    def gbar_norm(self, A: LiftVector) -> float:
        return float(np.sqrt(max(self.gbar(A, A), 0.0)))

    def gbar_matrix(self) -> np.ndarray:
        g0 = self.geo.g0
        return np.block([[self.alpha * g0, -self.sigma * g0],
                         [-self.sigma * g0, self.delta * g0]])

    # -- connection ----------------------------------------------------

    def nabla(self, acase: str, bcase: str, X, Y, reading: str = "koszul") -> LiftVector:
        """Covariant derivative of the lifted constant-coefficient field.

        acase/bcase are 'h' or 'v' for the direction and the field.  The
        default reading is the metric-compatible form obtained from the
        Koszul identity; "variant" keeps the alternative sigma-coupling
        terms (identical when sigma == 0).
        """
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if reading == "koszul":
            return self._nabla_koszul(acase, bcase, X, Y)
        if reading == "variant":
            return self._nabla_variant(acase, bcase, X, Y)
        raise ValueError(f"unknown connection reading {reading!r}")

    def _nabla_koszul(self, acase, bcase, X, Y) -> LiftVector:
        geo = self.geo
        a, s, d = self.alpha, self.sigma, self.delta
        dh_a, dv_a = self.d_alpha
        dh_s, dv_s = self.d_sigma
        dh_d, dv_d = self.d_delta
        gxy = geo.inner(X, Y)
        u = self.u
        h = np.zeros(self.n)
        v = np.zeros(self.n)
        if (acase, bcase) == ("h", "h"):
            h += geo.connection_vec(X, Y)
            ruxy = geo.curvature_vec(u, X, Y)
            ruyx = geo.curvature_vec(u, Y, X)
            h += -(s * d / 2.0) * (ruxy + ruyx)
            h += 0.5 * (d * (X @ dh_a) - s * (X @ dh_s)) * Y
            h += 0.5 * (d * (Y @ dh_a) - s * (Y @ dh_s)) * X
            h += -0.5 * gxy * self.grad_alpha.h
            v += -0.5 * geo.curvature_vec(X, Y, u)
            v += -(s * s / 2.0) * (ruxy + ruyx)
            v += 0.5 * (s * (X @ dh_a) - a * (X @ dh_s)) * Y
            v += 0.5 * (s * (Y @ dh_a) - a * (Y @ dh_s)) * X
            v += -0.5 * gxy * self.grad_alpha.v
        elif (acase, bcase) == ("h", "v"):
            ruyx = geo.curvature_vec(u, Y, X)
            h += (d * d / 2.0) * ruyx
            h += 0.5 * (s * (X @ dh_d) - d * (X @ dh_s)) * Y
            h += 0.5 * (d * (Y @ dv_a) - s * (Y @ dv_s)) * X
            h += 0.5 * gxy * self.grad_sigma.h
            v += geo.connection_vec(X, Y)
            v += (s * d / 2.0) * ruyx
            v += 0.5 * (a * (X @ dh_d) - s * (X @ dh_s)) * Y
            v += 0.5 * (s * (Y @ dv_a) - a * (Y @ dv_s)) * X
            v += 0.5 * gxy * self.grad_sigma.v
        elif (acase, bcase) == ("v", "h"):
            ruxy = geo.curvature_vec(u, X, Y)
            h += (d * d / 2.0) * ruxy
            h += 0.5 * (d * (X @ dv_a) - s * (X @ dv_s)) * Y
            h += 0.5 * (s * (Y @ dh_d) - d * (Y @ dh_s)) * X
            h += 0.5 * gxy * self.grad_sigma.h
            v += (s * d / 2.0) * ruxy
            v += 0.5 * (s * (X @ dv_a) - a * (X @ dv_s)) * Y
            v += 0.5 * (a * (Y @ dh_d) - s * (Y @ dh_s)) * X
            v += 0.5 * gxy * self.grad_sigma.v
        elif (acase, bcase) == ("v", "v"):
            h += 0.5 * (s * (X @ dv_d) - d * (X @ dv_s)) * Y
            h += 0.5 * (s * (Y @ dv_d) - d * (Y @ dv_s)) * X
            h += -0.5 * gxy * self.grad_delta.h
            v += 0.5 * (a * (X @ dv_d) - s * (X @ dv_s)) * Y
            v += 0.5 * (a * (Y @ dv_d) - s * (Y @ dv_s)) * X
            v += -0.5 * gxy * self.grad_delta.v
        else:
            raise ValueError(f"unknown connection case {acase}{bcase}")
        return LiftVector(h, v)

    def _nabla_variant(self, acase, bcase, X, Y) -> LiftVector:
        geo = self.geo
        a, s, d = self.alpha, self.sigma, self.delta
        dh_a, dv_a = self.d_alpha
        dh_s, dv_s = self.d_sigma
        dh_d, dv_d = self.d_delta
        gxy = geo.inner(X, Y)
        u = self.u
        h = np.zeros(self.n)
        v = np.zeros(self.n)
        if (acase, bcase) == ("h", "h"):
            nab = geo.connection_vec(X, Y)
            h += nab - (s / a) * geo.curvature_vec(u, X, Y)
            h += (0.5 / a) * (X @ dh_a) * Y + (0.5 / a) * (Y @ dh_a) * X
            h += -0.5 * gxy * self.grad_alpha.h
            v += -(s / d) * nab - 0.5 * geo.curvature_vec(X, Y, u)
            v += -(0.5 / d) * (X @ dh_s) * Y - (0.5 / d) * (Y @ dh_s) * X
            v += -0.5 * gxy * self.grad_alpha.v
        elif (acase, bcase) == ("h", "v"):
            nab = geo.connection_vec(X, Y)
            h += -(s / a) * nab + (d / (2 * a)) * geo.curvature_vec(u, Y, X)
            h += -(0.5 / a) * (X @ dh_s) * Y + (0.5 / a) * (Y @ dv_a) * X
            h += 0.5 * gxy * self.grad_sigma.h
            v += nab + (0.5 / d) * (X @ dh_d) * Y - (0.5 / d) * (Y @ dv_s) * X
            v += 0.5 * gxy * self.grad_sigma.v
        elif (acase, bcase) == ("v", "h"):
            h += (d / (2 * a)) * geo.curvature_vec(u, X, Y)
            h += (0.5 / a) * (X @ dv_a) * Y - (0.5 / a) * (Y @ dh_s) * X
            h += 0.5 * gxy * self.grad_sigma.h
            v += -(0.5 / d) * (X @ dv_s) * Y + (0.5 / d) * (Y @ dh_d) * X
            v += 0.5 * gxy * self.grad_sigma.v
        elif (acase, bcase) == ("v", "v"):
            h += -(0.5 / a) * (X @ dv_s) * Y - (0.5 / a) * (Y @ dv_s) * X
            v += (0.5 / d) * (X @ dv_d) * Y + (0.5 / d) * (Y @ dv_d) * X
            h += -0.5 * gxy * self.grad_delta.h
            v += -0.5 * gxy * self.grad_delta.v
        else:
            raise ValueError(f"unknown connection case {acase}{bcase}")
        return LiftVector(h, v)

    @cached_property
    def _nabla_basis_memo(self):
        return {}

    def nabla_basis(self, acase: str, bcase: str, i: int, k: int) -> LiftVector:
        key = (acase, bcase, i, k)
        memo = self._nabla_basis_memo
        if key not in memo:
            memo[key] = self._nabla_koszul(acase, bcase, _basis(self.n, i), _basis(self.n, k))
        return memo[key]

    # -- covariant derivatives of gradient fields ---------------------

    def covderiv_field(self, acase: str, X, hcoeff, vcoeff) -> LiftVector:
        """nabla along the lifted X of a field given by frame-coefficient jets.

        hcoeff/vcoeff are lists of order->=1 jets (either may be None); the
        coefficients are differentiated along the lift and the frame fields
        corrected with the closed-form connection.
        """
        n = self.n
        X = np.asarray(X, dtype=float)
        out = LiftVector.zero(n)
        for k in range(n):
            if hcoeff is not None:
                jet = hcoeff[k]
                out.h[k] += self.lift_value(acase, X, jet)
                out = out + jet.value * self._nabla_koszul(acase, "h", X, _basis(n, k))
            if vcoeff is not None:
                jet = vcoeff[k]
                out.v[k] += self.lift_value(acase, X, jet)
                out = out + jet.value * self._nabla_koszul(acase, "v", X, _basis(n, k))
        return out

    @cached_property
    def _sg_tables(self):
        """Per-basis covariant derivatives of the h- and v-parts of grad alpha.

        sg[acase][i] = (deriv of h-part field, deriv of v-part field) along
        the basis direction e_i lifted as acase.
        """
        gh, gv = self.grad_alpha_field
        n = self.n
        out = {}
        for acase in ("h", "v"):
            rows = []
            for i in range(n):
                e = _basis(n, i)
                rows.append((self.covderiv_field(acase, e, gh, None),
                             self.covderiv_field(acase, e, None, gv)))
            out[acase] = rows
        return out

    def second_grad_alpha(self, acase: str, X) -> LiftVector:
        """nabla_{X-lift} of the gradient field of alpha."""
        X = np.asarray(X, dtype=float)
        total = LiftVector.zero(self.n)
        for i in range(self.n):
            if X[i] == 0.0:
                continue
            dh_part, dv_part = self._sg_tables[acase][i]
            total = total + X[i] * (dh_part + dv_part)
        return total

    def second_grad_alpha_split(self, acase: str, X):
        """(h nabla (h grad), v nabla (v grad)) pieces used by the Ricci forms."""
        X = np.asarray(X, dtype=float)
        from_h = LiftVector.zero(self.n)
        from_v = LiftVector.zero(self.n)
        for i in range(self.n):
            if X[i] == 0.0:
                continue
            dh_part, dv_part = self._sg_tables[acase][i]
            from_h = from_h + X[i] * dh_part
            from_v = from_v + X[i] * dv_part
        return from_h, from_v

    # -- normal frame and Laplacian ------------------------------------

    @cached_property
    def normal_frame_jets(self):
        """Frame fields, orthonormal at the point with vanishing connection.

        Each field is returned as coefficient jets whose value is the
        orthonormalized frame vector and whose x-gradient realizes the
        first-order normal-coordinate correction.
        """
        n, m = self.n, self.m
        frame = self.geo.frame
        gamma0 = self.geo.gamma0
        fields = []
        for i in range(n):
            coeffs = []
            for k in range(n):
                grad = np.zeros(m)
                grad[:n] = -np.einsum("mj,j->m", gamma0[k], frame[:, i])
                coeffs.append(Jet(m, 1, [float(frame[k, i]), grad]))
            fields.append(coeffs)
        return fields

    @cached_property
    def laplacian_alpha(self) -> float:
        """Rough Laplacian of alpha over the orthonormal bundle frame.

        Evaluates sum_i { (1/a) E_i^h(E_i^h(a)) + a E_i^v(E_i^v(a))
        - (1/a^2) E_i^h(a)^2 + E_i^v(a)^2 } in a frame corrected to first
        order so the base connection vanishes at the point.  Defined only
        for sigma == 0.
        """
        if not self.sg.sigma_is_zero:
            raise SigmaNotZeroError("the Laplacian closed form requires sigma == 0")
        a = self.alpha
        total = 0.0
        for coeffs in self.normal_frame_jets:
            inner_h = self.lift_h_jet(coeffs, self.alpha_jet)
            inner_v = self.lift_v_jet(coeffs, self.alpha_jet)
            hh = self.lift_h_value(coeffs, inner_h)
            vv = self.lift_v_value(coeffs, inner_v)
            total += hh / a + a * vv - (inner_h.value / a) ** 2 + inner_v.value ** 2
        return total

    def laplacian_terms(self):
        """Per-family contributions of the Laplacian closed form (audit view)."""
        if not self.sg.sigma_is_zero:
            raise SigmaNotZeroError("the Laplacian closed form requires sigma == 0")
        a = self.alpha
        fams = {"(1/a) E^h(E^h(a))": 0.0, "a E^v(E^v(a))": 0.0,
                "-(1/a^2) E^h(a)^2": 0.0, "E^v(a)^2": 0.0}
        for coeffs in self.normal_frame_jets:
            inner_h = self.lift_h_jet(coeffs, self.alpha_jet)
            inner_v = self.lift_v_jet(coeffs, self.alpha_jet)
            fams["(1/a) E^h(E^h(a))"] += self.lift_h_value(coeffs, inner_h) / a
            fams["a E^v(E^v(a))"] += a * self.lift_v_value(coeffs, inner_v)
            fams["-(1/a^2) E^h(a)^2"] += -(inner_h.value / a) ** 2
            fams["E^v(a)^2"] += inner_v.value ** 2
        return fams

    def require_sigma_zero(self, what: str):
        if not self.sg.sigma_is_zero:
            raise SigmaNotZeroError(f"{what} requires sigma == 0")


def point_context(sg: ScenarioGeometry, pt: TangentPoint) -> PointContext:
    return PointContext(sg, pt)


# -- basic algebraic operations ------------------------------------------


def j_apply(sg, pt, A: LiftVector, ctx: PointContext | None = None) -> LiftVector:
    """Apply the compatible almost complex structure to a lift vector."""
    ctx = ctx or point_context(sg, pt)
    a, s, d = ctx.alpha, ctx.sigma, ctx.delta
    return LiftVector(s * A.h - d * A.v, a * A.h - s * A.v)


def gbar_eval(sg, pt, A: LiftVector, B: LiftVector,
              ctx: PointContext | None = None) -> float:
    ctx = ctx or point_context(sg, pt)
    return ctx.gbar(A, B)


def nabla_bar(sg, pt, case: str, X, Y, ctx: PointContext | None = None,
              reading: str = "koszul") -> LiftVector:
    """Closed-form connection on constant-coefficient lifted fields.

    case is one of 'hh', 'hv', 'vh', 'vv' (direction lift, field lift).
    """
    if case not in ("hh", "hv", "vh", "vv"):
        raise ValueError(f"connection case must be hh|hv|vh|vv, got {case!r}")
    ctx = ctx or point_context(sg, pt)
    return ctx.nabla(case[0], case[1], X, Y, reading=reading)


def grad_bar(sg, pt, f, ctx: PointContext | None = None) -> LiftVector:
    """gbar-gradient of a scalar (expression AST or evaluated jet)."""
    ctx = ctx or point_context(sg, pt)
    if isinstance(f, Jet):
        f_jet = f
    else:
        f_jet = expr.eval_jet(f, pt.coords, sg.n, 1)
    dh, dv = ctx._deriv_tables(f_jet)
    return ctx._grad_split(dh, dv)


def second_grad_bar(sg, pt, case: str, X, f,
                    ctx: PointContext | None = None) -> LiftVector:
    """nabla_{X-lift}(grad f), differentiating the gradient as a field."""
    if case not in ("h", "v"):
        raise ValueError(f"direction case must be 'h' or 'v', got {case!r}")
    ctx = ctx or point_context(sg, pt)
    if isinstance(f, Jet):
        f_jet = f
    else:
        f_jet = expr.eval_jet(f, pt.coords, sg.n, PARAM_ORDER)
    gh, gv = ctx.gradient_field_jets(f_jet)
    return ctx.covderiv_field(case, np.asarray(X, dtype=float), gh, gv)


def laplacian_bar(sg, pt, ctx: PointContext | None = None) -> float:
    ctx = ctx or point_context(sg, pt)
    return ctx.laplacian_alpha


# -- curvature equations ---------------------------------------------------
#
# Each equation is a list of (label, function) pairs so audit mode can report
# every displayed term separately.  Functions return LiftVectors.


def _hhh_terms(ctx: PointContext, X, Y, Z):
    geo = ctx.geo
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    nab = geo.connection_vec
    gg = geo.inner
    ddhh = lambda A, B: float(A @ ctx.ddhh @ B)
    H, V = LiftVector.horizontal, LiftVector.vertical
    ga = ctx.grad_alpha
    return [
        ("(R(X,Y)Z)^h", H(rv(X, Y, Z))),
        ("-1/(4a^2) (R(u,R(Y,Z)u)X)^h", H(-rv(u, rv(Y, Z, u), X) / (4 * a**2))),
        ("+1/(4a^2) (R(u,R(X,Z)u)Y)^h", H(rv(u, rv(X, Z, u), Y) / (4 * a**2))),
        ("+1/(2a^2) (R(u,R(X,Y)u)Z)^h", H(rv(u, rv(X, Y, u), Z) / (2 * a**2))),
        ("+1/(2a) (nab_Y Z)^h(a) X^h", H(dh(nab(Y, Z)) / (2 * a) * X)),
        ("+3/(4a^2) Y^h(a) Z^h(a) X^h", H(3 * dh(Y) * dh(Z) / (4 * a**2) * X)),
        ("-1/(2a) Y^h(Z^h(a)) X^h", H(-ddhh(Y, Z) / (2 * a) * X)),
        ("-1/(4a) (R(Y,Z)u)^v(a) X^h", H(-dv(rv(Y, Z, u)) / (4 * a) * X)),
        ("-1/(2a) (nab_X Z)^h(a) Y^h", H(-dh(nab(X, Z)) / (2 * a) * Y)),
        ("-3/(4a^2) X^h(a) Z^h(a) Y^h", H(-3 * dh(X) * dh(Z) / (4 * a**2) * Y)),
        ("+1/(2a) X^h(Z^h(a)) Y^h", H(ddhh(X, Z) / (2 * a) * Y)),
        ("+1/(4a) (R(X,Z)u)^v(a) Y^h", H(dv(rv(X, Z, u)) / (4 * a) * Y)),
        ("+1/2 ((nabla_Z R)(X,Y)u)^v", V(0.5 * geo.nabla_curvature_vec(Z, X, Y, u))),
        ("-1/(2a) Y^h(a) (R(X,Z)u)^v", V(-dh(Y) / (2 * a) * rv(X, Z, u))),
        ("+1/(2a) X^h(a) (R(Y,Z)u)^v", V(dh(X) / (2 * a) * rv(Y, Z, u))),
        ("-1/a Z^h(a) (R(X,Y)u)^v", V(-dh(Z) / a * rv(X, Y, u))),
        ("+1/(4a) X^h(a) g(Y,Z) grad(a)", (dh(X) * gg(Y, Z) / (4 * a)) * ga),
        ("-1/(4a) Y^h(a) g(X,Z) grad(a)", (-dh(Y) * gg(X, Z) / (4 * a)) * ga),
        ("+1/2 g(X,Z) nabla_{Y^h} grad(a)", 0.5 * gg(X, Z) * ctx.second_grad_alpha("h", Y)),
        ("-1/2 g(Y,Z) nabla_{X^h} grad(a)", -0.5 * gg(Y, Z) * ctx.second_grad_alpha("h", X)),
    ]


def _dot_term_vertical(ctx: PointContext, X, Y, Z, reading: str) -> np.ndarray:
    """The ambiguous composed-curvature vector of the hhv equation.

    reading "derivation": the first curvature operator acts as a derivation
    of the curvature tensor; reading "duplicate": plain operator composition
    (a repeat of the adjacent displayed term).
    """
    rv = ctx.geo.curvature_vec
    u = ctx.u
    if reading == "duplicate":
        return rv(u, Z, rv(X, Y, u))
    if reading == "derivation":
        return (rv(u, Z, rv(X, Y, u))
                - rv(rv(u, Z, X), Y, u)
                - rv(X, rv(u, Z, Y), u)
                - rv(X, Y, rv(u, Z, u)))
    raise ValueError(f"unknown dot-term reading {reading!r}")


def _hhv_terms(ctx: PointContext, X, Y, Z, dot_reading: str = "derivation"):
    geo = ctx.geo
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    nrv = geo.nabla_curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    nab = geo.connection_vec
    gg = geo.inner
    ddhv = lambda A, B: float(A @ ctx.ddhv @ B)
    H, V = LiftVector.horizontal, LiftVector.vertical
    ga = ctx.grad_alpha
    zero = np.zeros(ctx.n)
    return [
        ("+1/(2a^2) ((nabla_X R)(u,Z)Y)^h", H(nrv(X, u, Z, Y) / (2 * a**2))),
        ("-1/(2a^2) ((nabla_Y R)(u,Z)X)^h", H(-nrv(Y, u, Z, X) / (2 * a**2))),
        ("+1/(2a^3) Y^h(a) (R(u,Z)X)^h", H(dh(Y) / (2 * a**3) * rv(u, Z, X))),
        ("-1/(2a^3) X^h(a) (R(u,Z)Y)^h", H(-dh(X) / (2 * a**3) * rv(u, Z, Y))),
        ("+1/(4a^3) (R(u,Z)Y)^h(a) X^h", H(dh(rv(u, Z, Y)) / (4 * a**3) * X)),
        ("+1/(2a) (nab_Y Z)^v(a) X^h", H(dv(nab(Y, Z)) / (2 * a) * X)),
        ("+1/(4a^2) Y^h(a) Z^v(a) X^h", H(dh(Y) * dv(Z) / (4 * a**2) * X)),
        ("-1/(2a) Y^h(Z^v(a)) X^h", H(-ddhv(Y, Z) / (2 * a) * X)),
        ("-1/(4a^3) (R(u,Z)X)^h(a) Y^h", H(-dh(rv(u, Z, X)) / (4 * a**3) * Y)),
        ("-1/(2a) (nab_X Z)^v(a) Y^h", H(-dv(nab(X, Z)) / (2 * a) * Y)),
        ("-1/(4a^2) X^h(a) Z^v(a) Y^h", H(-dh(X) * dv(Z) / (4 * a**2) * Y)),
        ("+1/(2a) X^h(Z^v(a)) Y^h", H(ddhv(X, Z) / (2 * a) * Y)),
        ("(R(X,Y)Z)^v", V(rv(X, Y, Z))),
        (f"+1/(4a^2) ((R(u,Z).R)(X,Y)u)^v [{dot_reading}]",
         V(_dot_term_vertical(ctx, X, Y, Z, dot_reading) / (4 * a**2))),
        ("-1/(4a^2) (R(u,Z)R(X,Y)u)^v", V(-rv(u, Z, rv(X, Y, u)) / (4 * a**2))),
        ("+1/(4a^2) (R(X,Y)R(u,Z)u)^v", V(rv(X, Y, rv(u, Z, u)) / (4 * a**2))),
        ("+1/a Z^v(a) (R(Y,X)u)^v", V(dv(Z) / a * rv(Y, X, u))),
        ("-1/(2a) Z^v(a) [X,Y]^v (zero for coordinate fields)", V(zero.copy())),
        ("+1/a^2 R4(X,Y,u,Z) grad(a)", (gg(rv(X, Y, u), Z) / a**2) * ga),
    ]


def _hvh_terms(ctx: PointContext, X, Y, Z):
    geo = ctx.geo
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    nrv = geo.nabla_curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    nab = geo.connection_vec
    gg = geo.inner
    ddhh = lambda A, B: float(A @ ctx.ddhh @ B)
    ddvh = lambda A, B: float(A @ ctx.ddvh @ B)
    H, V = LiftVector.horizontal, LiftVector.vertical
    ga = ctx.grad_alpha
    return [
        ("+1/(2a^2) ((nabla_X R)(u,Y)Z)^h", H(nrv(X, u, Y, Z) / (2 * a**2))),
        ("-1/a^3 X^h(a) (R(u,Y)Z)^h", H(-dh(X) / a**3 * rv(u, Y, Z))),
        ("-1/(2a^3) Z^h(a) (R(u,Y)X)^h", H(-dh(Z) / (2 * a**3) * rv(u, Y, X))),
        ("+1/(4a^3) (R(u,Y)Z)^h(a) X^h", H(dh(rv(u, Y, Z)) / (4 * a**3) * X)),
        ("+1/(4a^2) Z^h(a) Y^v(a) X^h", H(dh(Z) * dv(Y) / (4 * a**2) * X)),
        ("-1/(2a) Y^v(Z^h(a)) X^h", H(-ddvh(Y, Z) / (2 * a) * X)),
        ("+1/2 (R(X,Z)Y)^v", V(0.5 * rv(X, Z, Y))),
        ("-1/(4a^2) (R(X,R(u,Y)Z)u)^v", V(-rv(X, rv(u, Y, Z), u) / (4 * a**2))),
        ("-1/(2a) Y^v(a) (R(X,Z)u)^v", V(-dv(Y) / (2 * a) * rv(X, Z, u))),
        ("-1/(2a) X^h(Z^h(a)) Y^v", V(-ddhh(X, Z) / (2 * a) * Y)),
        ("+1/(2a) (nab_X Z)^h(a) Y^v", V(dh(nab(X, Z)) / (2 * a) * Y)),
        ("+5/(4a^2) Z^h(a) X^h(a) Y^v", V(5 * dh(Z) * dh(X) / (4 * a**2) * Y)),
        ("-1/(4a) (R(X,Z)u)^v(a) Y^v", V(-dv(rv(X, Z, u)) / (4 * a) * Y)),
        ("-1/(2a^2) R4(u,Y,Z,X) grad(a)", (-gg(rv(u, Y, Z), X) / (2 * a**2)) * ga),
        ("-1/(4a) Y^v(a) g(X,Z) grad(a)", (-dv(Y) * gg(X, Z) / (4 * a)) * ga),
        ("+1/2 g(X,Z) nabla_{Y^v} grad(a)", 0.5 * gg(X, Z) * ctx.second_grad_alpha("v", Y)),
    ]


def _vhv_terms(ctx: PointContext, X, Y, Z):
    geo = ctx.geo
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    nab = geo.connection_vec
    gg = geo.inner
    ddvv = lambda A, B: float(A @ ctx.ddvv @ B)
    ddhv = lambda A, B: float(A @ ctx.ddhv @ B)
    H, V = LiftVector.horizontal, LiftVector.vertical
    ga = ctx.grad_alpha
    return [
        ("+1/(2a^2) (R(X,Z)Y)^h", H(rv(X, Z, Y) / (2 * a**2))),
        ("+1/(4a^4) (R(u,X)R(u,Z)Y)^h", H(rv(u, X, rv(u, Z, Y)) / (4 * a**4))),
        ("-1/(2a^3) X^v(a) (R(u,Z)Y)^h", H(-dv(X) / (2 * a**3) * rv(u, Z, Y))),
        ("+1/(2a^3) Z^v(a) (R(u,X)Y)^h", H(dv(Z) / (2 * a**3) * rv(u, X, Y))),
        ("+1/(4a^2) X^v(a) Z^v(a) Y^h", H(dv(X) * dv(Z) / (4 * a**2) * Y)),
        ("+1/(2a) X^v(Z^v(a)) Y^h", H(ddvv(X, Z) / (2 * a) * Y)),
        ("-1/(4a^3) (R(u,Z)Y)^h(a) X^v", V(-dh(rv(u, Z, Y)) / (4 * a**3) * X)),
        ("-1/(2a) (nab_Y Z)^v(a) X^v", V(-dv(nab(Y, Z)) / (2 * a) * X)),
        ("-3/(4a^2) Y^h(a) Z^v(a) X^v", V(-3 * dh(Y) * dv(Z) / (4 * a**2) * X)),
        ("+1/(2a) Y^h(Z^v(a)) X^v", V(ddhv(Y, Z) / (2 * a) * X)),
        ("+3/(4a^3) g(X,Z) Y^h(a) grad(a)", (3 * gg(X, Z) * dh(Y) / (4 * a**3)) * ga),
        ("-1/(2a^2) g(X,Z) nabla_{Y^h} grad(a)",
         (-gg(X, Z) / (2 * a**2)) * ctx.second_grad_alpha("h", Y)),
    ]


def _vvh_terms(ctx: PointContext, X, Y, Z):
    geo = ctx.geo
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    ddvh = lambda A, B: float(A @ ctx.ddvh @ B)
    H, V = LiftVector.horizontal, LiftVector.vertical
    return [
        ("+1/a^2 (R(X,Y)Z)^h", H(rv(X, Y, Z) / a**2)),
        ("-1/a^3 X^v(a) (R(u,Y)Z)^h", H(-dv(X) / a**3 * rv(u, Y, Z))),
        ("+1/a^3 Y^v(a) (R(u,X)Z)^h", H(dv(Y) / a**3 * rv(u, X, Z))),
        ("+1/(4a^4) (R(u,X)R(u,Y)Z)^h", H(rv(u, X, rv(u, Y, Z)) / (4 * a**4))),
        ("-1/(4a^4) (R(u,Y)R(u,X)Z)^h", H(-rv(u, Y, rv(u, X, Z)) / (4 * a**4))),
        ("-1/(4a^3) (R(u,Y)Z)^h(a) X^v", V(-dh(rv(u, Y, Z)) / (4 * a**3) * X)),
        ("+1/(2a) Y^v(Z^h(a)) X^v", V(ddvh(Y, Z) / (2 * a) * X)),
        ("-3/(4a^2) Y^v(a) Z^h(a) X^v", V(-3 * dv(Y) * dh(Z) / (4 * a**2) * X)),
        ("+1/(4a^3) (R(u,X)Z)^h(a) Y^v", V(dh(rv(u, X, Z)) / (4 * a**3) * Y)),
        ("-1/(2a) X^v(Z^h(a)) Y^v", V(-ddvh(X, Z) / (2 * a) * Y)),
        ("+3/(4a^2) X^v(a) Z^h(a) Y^v", V(3 * dv(X) * dh(Z) / (4 * a**2) * Y)),
    ]


def _vvv_terms(ctx: PointContext, X, Y, Z):
    a = ctx.alpha
    dv = ctx.dv_alpha
    gg = ctx.geo.inner
    ddvv = lambda A, B: float(A @ ctx.ddvv @ B)
    V = LiftVector.vertical
    ga = ctx.grad_alpha
    return [
        ("+1/(2a) Y^v(Z^v(a)) X^v", V(ddvv(Y, Z) / (2 * a) * X)),
        ("-1/(4a^2) Y^v(a) Z^v(a) X^v", V(-dv(Y) * dv(Z) / (4 * a**2) * X)),
        ("-1/(2a) X^v(Z^v(a)) Y^v", V(-ddvv(X, Z) / (2 * a) * Y)),
        ("+1/(4a^2) X^v(a) Z^v(a) Y^v", V(dv(X) * dv(Z) / (4 * a**2) * Y)),
        ("+3/(4a^3) Y^v(a) g(X,Z) grad(a)", (3 * dv(Y) * gg(X, Z) / (4 * a**3)) * ga),
        ("-3/(4a^3) X^v(a) g(Y,Z) grad(a)", (-3 * dv(X) * gg(Y, Z) / (4 * a**3)) * ga),
        ("+1/(2a^2) g(Y,Z) nabla_{X^v} grad(a)",
         (gg(Y, Z) / (2 * a**2)) * ctx.second_grad_alpha("v", X)),
        ("-1/(2a^2) g(X,Z) nabla_{Y^v} grad(a)",
         (-gg(X, Z) / (2 * a**2)) * ctx.second_grad_alpha("v", Y)),
    ]


_CURVATURE_EQUATIONS = {
    "hhh": _hhh_terms,
    "hvh": _hvh_terms,
    "vhv": _vhv_terms,
    "vvh": _vvh_terms,
    "vvv": _vvv_terms,
}

CURVATURE_CASES = ("hhh", "hhv", "hvh", "vhv", "vvh", "vvv")


def riemann_bar(sg, pt, case: str, X, Y, Z, ctx: PointContext | None = None,
                dot_reading: str = "derivation", with_terms: bool = False):
    """One closed-form curvature block R(A, B)C on lifted coordinate vectors.

    case names the lift types of (A, B, C); X, Y, Z are base vectors.  With
    with_terms=True also returns the labelled per-term contributions.
    """
    if case not in CURVATURE_CASES:
        raise ValueError(f"curvature case must be one of {CURVATURE_CASES}, got {case!r}")
    ctx = ctx or point_context(sg, pt)
    ctx.require_sigma_zero("the closed-form curvature")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if case == "hhv":
        terms = _hhv_terms(ctx, X, Y, Z, dot_reading=dot_reading)
    else:
        terms = _CURVATURE_EQUATIONS[case](ctx, X, Y, Z)
    total = LiftVector.zero(ctx.n)
    for _, vec in terms:
        total = total + vec
    if with_terms:
        return total, terms
    return total


def riemann_bar_any(ctx: PointContext, acase: str, bcase: str, ccase: str,
                    X, Y, Z, dot_reading: str = "derivation") -> LiftVector:
    """Dispatch any lift-type triple to the six equations via antisymmetry."""
    triple = acase + bcase + ccase
    if triple in ("hhh", "hhv", "hvh", "vhv", "vvh", "vvv"):
        return riemann_bar(ctx.sg, ctx.pt, triple, X, Y, Z, ctx=ctx,
                           dot_reading=dot_reading)
    if triple == "vhh":
        return -riemann_bar(ctx.sg, ctx.pt, "hvh", Y, X, Z, ctx=ctx)
    if triple == "hvv":
        return -riemann_bar(ctx.sg, ctx.pt, "vhv", Y, X, Z, ctx=ctx)
    raise ValueError(f"unknown lift-type triple {triple!r}")


# -- Ricci operator ---------------------------------------------------------


def _ricci_h_terms(ctx: PointContext, X):
    geo = ctx.geo
    n = ctx.n
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    nrv = geo.nabla_curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    H, V = LiftVector.horizontal, LiftVector.vertical
    ga = ctx.grad_alpha
    nva2 = ctx.gbar(ga.v_part(), ga.v_part())
    lap = ctx.laplacian_alpha
    from_h, from_v = ctx.second_grad_alpha_split("h", X)
    sg_full = from_h + from_v
    frame = geo.frame
    sum_a = np.zeros(n)
    sum_b = LiftVector.zero(n)
    sum_c = np.zeros(n)
    sum_d = np.zeros(n)
    sum_e = np.zeros(n)
    sum_f = LiftVector.zero(n)
    for i in range(n):
        E = frame[:, i]
        rxe = rv(X, E, u)
        ruex = rv(u, E, X)
        sum_a += rv(u, rv(X, E, u), E)
        sum_b = sum_b + (dv(rxe) * LiftVector.horizontal(E))
        sum_c += rv(u, E, ruex)
        sum_d += nrv(E, X, E, u)
        sum_e += dh(E) * rxe
        sum_f = sum_f + (dh(ruex) * LiftVector.vertical(E))
    return [
        ("+1/a Q(X)^h", H(np.einsum("lc,c->l", geo.ricci_q, X) / a)),
        ("(+1/(4a^2) |v grad a|^2 - 1/(2a) Lap(a)) X^h",
         H((nva2 / (4 * a**2) - lap / (2 * a)) * X)),
        ("+1/(2a) (h nabla_{X^h} h-grad - v nabla_{X^h} v-grad)",
         (1 / (2 * a)) * (from_h.h_part() - from_v.v_part())),
        ("+1/(2a) nabla_{X^h} grad(a)", (1 / (2 * a)) * sg_full),
        ("-(2n+1)/(4a^2) X^h(a) grad(a)", (-(2 * n + 1) * dh(X) / (4 * a**2)) * ga),
        ("-1/(4a^2) X^h(a) h-grad(a)", (-dh(X) / (4 * a**2)) * ga.h_part()),
        ("+1/a^2 X^h(a) v-grad(a)", (dh(X) / a**2) * ga.v_part()),
        ("+3/(4a^3) sum (R(u,R(X,E)u)E)^h", H(3 * sum_a / (4 * a**3))),
        ("+1/(4a^2) sum (R(X,E)u)^v(a) E^h", (1 / (4 * a**2)) * sum_b),
        ("-1/(4a^3) sum (R(u,E)R(u,E)X)^h", H(-sum_c / (4 * a**3))),
        ("+1/(2a) sum ((nabla_E R)(X,E)u)^v", V(sum_d / (2 * a))),
        ("-3/(2a^2) sum E^h(a) (R(X,E)u)^v", V(-3 * sum_e / (2 * a**2))),
        ("+1/(4a^2) sum (R(u,E)X)^h(a) E^v", (1 / (4 * a**2)) * sum_f),
    ]


def _ricci_v_terms(ctx: PointContext, X):
    geo = ctx.geo
    n = ctx.n
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    nrv = geo.nabla_curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    H, V = LiftVector.horizontal, LiftVector.vertical
    ga = ctx.grad_alpha
    nva2 = ctx.gbar(ga.v_part(), ga.v_part())
    na2 = ctx.gbar(ga, ga)
    lap = ctx.laplacian_alpha
    from_h, from_v = ctx.second_grad_alpha_split("v", X)
    sg_full = from_h + from_v
    frame = geo.frame
    sum_a = np.zeros(n)
    sum_b = np.zeros(n)
    sum_c = LiftVector.zero(n)
    sum_d = np.zeros(n)
    for i in range(n):
        E = frame[:, i]
        ruxe = rv(u, X, E)
        sum_a += nrv(E, u, X, E)
        sum_b += dh(E) * ruxe
        sum_c = sum_c + (dh(ruxe) * LiftVector.horizontal(E))
        sum_d += rv(E, ruxe, u)
    return [
        ("(-1/(4a^2) |v grad a|^2 - 3/(4a^2) |grad a|^2 + 1/(2a) Lap(a)) X^v",
         V((-nva2 / (4 * a**2) - 3 * na2 / (4 * a**2) + lap / (2 * a)) * X)),
        ("+1/(2a) (h nabla_{X^v} h-grad - v nabla_{X^v} v-grad)",
         (1 / (2 * a)) * (from_h.h_part() - from_v.v_part())),
        ("-1/(2a) nabla_{X^v} grad(a)", (-1 / (2 * a)) * sg_full),
        ("+(3-2n)/(4a^2) X^v(a) grad(a)", ((3 - 2 * n) * dv(X) / (4 * a**2)) * ga),
        ("+3/(4a^2) X^v(a) v-grad(a)", (3 * dv(X) / (4 * a**2)) * ga.v_part()),
        ("-1/(2a^3) sum ((nabla_E R)(u,X)E)^h", H(-sum_a / (2 * a**3))),
        ("+3/(2a^4) sum E^h(a) (R(u,X)E)^h", H(3 * sum_b / (2 * a**4))),
        ("-1/(4a^4) sum (R(u,X)E)^h(a) E^h", (-1 / (4 * a**4)) * sum_c),
        ("+1/(4a^3) sum (R(E,R(u,X)E)u)^v", V(sum_d / (4 * a**3))),
    ]


#: readings of the v-case Ricci equation.  "as_stated" evaluates the displayed
#: formula; "completed" appends the curvature-gradient cross term that the
#: frame-trace assembly of the (oracle-confirmed) curvature blocks produces
#: and the displayed formula lacks.  The readings coincide when the base is
#: flat or alpha is constant.
RICCI_READINGS = ("as_stated", "completed")


def _ricci_v_missing_term(ctx: PointContext, X):
    a = ctx.alpha
    raised_h = ctx.geo.ginv0 @ ctx.d_alpha[0]
    return ("-1/(4a^4) (R(u,X) g^-1 d^h(a))^h [completed reading only]",
            LiftVector.horizontal(-ctx.geo.curvature_vec(ctx.u, X, raised_h) / (4 * a**4)))


def ricci_bar(sg, pt, case: str, X, ctx: PointContext | None = None,
              with_terms: bool = False, reading: str = "as_stated"):
    """Closed-form Ricci operator on a lifted base vector (case 'h' or 'v')."""
    if case not in ("h", "v"):
        raise ValueError(f"Ricci case must be 'h' or 'v', got {case!r}")
    if reading not in RICCI_READINGS:
        raise ValueError(f"Ricci reading must be one of {RICCI_READINGS}, got {reading!r}")
    ctx = ctx or point_context(sg, pt)
    ctx.require_sigma_zero("the closed-form Ricci operator")
    X = np.asarray(X, dtype=float)
    terms = _ricci_h_terms(ctx, X) if case == "h" else _ricci_v_terms(ctx, X)
    if case == "v" and reading == "completed":
        terms = terms + [_ricci_v_missing_term(ctx, X)]
    total = LiftVector.zero(ctx.n)
    for _, vec in terms:
        total = total + vec
    if with_terms:
        return total, terms
    return total


def ricci_bar_frame_trace(sg, pt, case: str, X,
                          ctx: PointContext | None = None) -> LiftVector:
    """Ricci operator assembled directly as the frame trace of the curvature.

    Self-consistency path: sums the closed-form curvature blocks over the
    orthonormal base frame instead of using the displayed Ricci formulas.
    """
    ctx = ctx or point_context(sg, pt)
    ctx.require_sigma_zero("the closed-form Ricci operator")
    a = ctx.alpha
    frame = ctx.geo.frame
    X = np.asarray(X, dtype=float)
    total = LiftVector.zero(ctx.n)
    for i in range(ctx.n):
        E = frame[:, i]
        total = total + (1 / a) * riemann_bar_any(ctx, case, "h", "h", X, E, E)
        total = total + a * riemann_bar_any(ctx, case, "v", "v", X, E, E)
    return total


# -- sectional curvature ----------------------------------------------------


def _check_orthonormal(ctx: PointContext, X, Y):
    gg = ctx.geo.inner
    dev = max(abs(gg(X, X) - 1.0), abs(gg(Y, Y) - 1.0), abs(gg(X, Y)))
    if dev > 1e-10:
        raise ValueError(f"X, Y must be g-orthonormal (deviation {dev:.2e})")


def _sectional_terms(ctx: PointContext, case: str, X, Y):
    geo = ctx.geo
    a = ctx.alpha
    u = ctx.u
    rv = geo.curvature_vec
    dh, dv = ctx.dh_alpha, ctx.dv_alpha
    if case == "hh":
        # Second derivative of alpha along Y^h uses the normal extension of Y
        # (the constant-coefficient value minus the connection correction).
        ddn = float(Y @ ctx.ddhh @ Y) - dh(geo.connection_vec(Y, Y))
        w = rv(X, Y, u)
        sgx = ctx.gbar(ctx.second_grad_alpha("h", X), LiftVector.horizontal(X))
        kbase = geo.inner(rv(X, Y, Y), X)
        return [
            ("+1/a K(X,Y)", kbase / a),
            ("-3/(4a^3) |R(X,Y)u|^2", -3 * geo.inner(w, w) / (4 * a**3)),
            ("+3/(4a^3) Y^h(a)^2", 3 * dh(Y) ** 2 / (4 * a**3)),
            ("-1/(2a^2) Y^h(Y^h(a)) (normal extension)", -ddn / (2 * a**2)),
            ("+1/(4a^3) X^h(a)^2", dh(X) ** 2 / (4 * a**3)),
            ("-1/(2a^2) gbar(nabla_{X^h} grad(a), X^h)", -sgx / (2 * a**2)),
        ]
    if case == "hv":
        w = rv(u, Y, X)
        ddn = float(Y @ ctx.ddvv @ Y)
        sgx = ctx.gbar(ctx.second_grad_alpha("h", X), LiftVector.horizontal(X))
        return [
            ("+1/(4a^3) |R(u,Y)X|^2", geo.inner(w, w) / (4 * a**3)),
            ("-1/(4a) Y^v(a)^2", -dv(Y) ** 2 / (4 * a)),
            ("-1/2 Y^v(Y^v(a))", -ddn / 2),
            ("-3/(4a^3) X^h(a)^2", -3 * dh(X) ** 2 / (4 * a**3)),
            ("+1/(2a^2) gbar(nabla_{X^h} grad(a), X^h)", sgx / (2 * a**2)),
        ]
    if case == "vv":
        ddn = float(Y @ ctx.ddvv @ Y)
        sgx = ctx.gbar(ctx.second_grad_alpha("v", X), LiftVector.vertical(X))
        return [
            ("+1/2 Y^v(Y^v(a))", ddn / 2),
            ("-1/(4a) Y^v(a)^2", -dv(Y) ** 2 / (4 * a)),
            ("-3/(4a) X^v(a)^2", -3 * dv(X) ** 2 / (4 * a)),
            ("+1/2 gbar(nabla_{X^v} grad(a), X^v)", sgx / 2),
        ]
    raise ValueError(f"sectional case must be hh|hv|vv, got {case!r}")


def sectional_bar(sg, pt, case: str, X, Y, ctx: PointContext | None = None,
                  with_terms: bool = False):
    """Closed-form sectional curvature of the plane of two lifted vectors.

    X, Y must be g-orthonormal base vectors at the point.
    """
    ctx = ctx or point_context(sg, pt)
    ctx.require_sigma_zero("the closed-form sectional curvature")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _check_orthonormal(ctx, X, Y)
    terms = _sectional_terms(ctx, case, X, Y)
    total = float(sum(val for _, val in terms))
    if with_terms:
        return total, terms
    return total
