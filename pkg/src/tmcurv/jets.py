"""Truncated multivariate Taylor arithmetic (jets) up to third order.

A Jet carries the value and the full (symmetric, redundant) partial-derivative
tensors of a smooth function at a point: value, gradient (m,), Hessian (m, m)
and third-order tensor (m, m, m) for m variables.  All arithmetic propagates
derivatives exactly (Leibniz / quotient / Faa di Bruno rules), so there is no
step-size error of any kind; results are exact up to floating-point rounding.

Jets are immutable by convention: no operation mutates its operands, and the
arrays inside a Jet must never be written to after construction.
"""

from __future__ import annotations

import math

import numpy as np

MAX_ORDER = 3


class JetError(Exception):
    """Base class for jet failures."""


class JetUsageError(JetError):
    """Structural misuse: mismatched sizes/orders, bad indices."""


class JetDomainError(JetError):
    """Evaluation outside the domain of an operation (log <= 0, x/0, ...)."""


def _sym3(t2: np.ndarray, t1: np.ndarray) -> np.ndarray:
    """Distribute T2_{ij} t1_k over the three index slots.

    Returns S_{ijk} = T2_{ij} t1_k + T2_{ik} t1_j + T2_{jk} t1_i.
    """
    b = np.multiply.outer(t2, t1)
    return b + b.transpose(0, 2, 1) + b.transpose(2, 0, 1)


class Jet:
    __slots__ = ("nvars", "order", "terms")

    def __init__(self, nvars: int, order: int, terms: list):
        # Trusted fast constructor; use constant()/variable()/from_terms()
        # when the inputs are not already known to be well-formed.
        self.nvars = nvars
        self.order = order
        self.terms = terms

    # -- construction -------------------------------------------------

    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> "Jet":
        if not 0 <= order <= MAX_ORDER:
            raise JetUsageError(f"order must be in 0..{MAX_ORDER}, got {order}")
        if nvars < 1:
            raise JetUsageError(f"nvars must be >= 1, got {nvars}")
        terms = [float(value)]
        for k in range(1, order + 1):
            terms.append(np.zeros((nvars,) * k))
        return cls(nvars, order, terms)

    @classmethod
    def variable(cls, index: int, value: float, nvars: int, order: int) -> "Jet":
        jet = cls.constant(value, nvars, order)
        if not 0 <= index < nvars:
            raise JetUsageError(f"variable index {index} out of range for {nvars} variables")
        if order >= 1:
            jet.terms[1][index] = 1.0
        return jet

    @classmethod
    def from_terms(cls, nvars: int, terms: list) -> "Jet":
        order = len(terms) - 1
        if not 0 <= order <= MAX_ORDER:
            raise JetUsageError(f"terms must have length 1..{MAX_ORDER + 1}")
        clean = [float(terms[0])]
        for k in range(1, order + 1):
            arr = np.asarray(terms[k], dtype=float)
            if arr.shape != (nvars,) * k:
                raise JetUsageError(f"order-{k} term has shape {arr.shape}, expected {(nvars,) * k}")
            clean.append(arr)
        return cls(nvars, order, clean)

    # -- accessors ----------------------------------------------------

    @property
    def value(self) -> float:
        return self.terms[0]

    def gradient(self) -> np.ndarray:
        if self.order >= 1:
            return self.terms[1]
        return np.zeros(self.nvars)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetUsageError(f"cannot extend jet of order {self.order} to order {order}")
        if order == self.order:
            return self
        return Jet(self.nvars, order, self.terms[: order + 1])

    def partial(self, index: int) -> "Jet":
        """Jet of the partial derivative along variable `index` (order drops by 1)."""
        if not 0 <= index < self.nvars:
            raise JetUsageError(f"variable index {index} out of range for {self.nvars} variables")
        if self.order < 1:
            raise JetUsageError("cannot differentiate an order-0 jet")
        terms = [float(self.terms[1][index])]
        for k in range(2, self.order + 1):
            terms.append(self.terms[k][index])
        return Jet(self.nvars, self.order - 1, terms)

    def extract(self, multi_index) -> float:
        """Plain partial derivative for a multi-index of per-variable powers."""
        mi = tuple(int(p) for p in multi_index)
        if len(mi) != self.nvars:
            raise JetUsageError(f"multi-index length {len(mi)} != nvars {self.nvars}")
        if any(p < 0 for p in mi):
            raise JetUsageError(f"multi-index powers must be >= 0, got {mi}")
        total = sum(mi)
        if total > self.order:
            raise JetUsageError(f"multi-index order {total} exceeds jet order {self.order}")
        if total == 0:
            return float(self.terms[0])
        slots: list[int] = []
        for var, power in enumerate(mi):
            slots.extend([var] * power)
        return float(self.terms[total][tuple(slots)])

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars or other.order != self.order:
                raise JetUsageError(
                    f"jet mismatch: ({self.nvars} vars, order {self.order}) vs "
                    f"({other.nvars} vars, order {other.order})"
                )
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet.constant(float(other), self.nvars, self.order)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.nvars, self.order, [a + b for a, b in zip(self.terms, o.terms)])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.nvars, self.order, [a - b for a, b in zip(self.terms, o.terms)])

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__sub__(self)

    def __neg__(self):
        return Jet(self.nvars, self.order, [-t for t in self.terms])

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            c = float(other)
            return Jet(self.nvars, self.order, [t * c for t in self.terms])
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = self.terms, o.terms
        out = [a[0] * b[0]]
        if self.order >= 1:
            out.append(a[1] * b[0] + a[0] * b[1])
        if self.order >= 2:
            out.append(a[2] * b[0] + np.multiply.outer(a[1], b[1])
                       + np.multiply.outer(b[1], a[1]) + a[0] * b[2])
        if self.order >= 3:
            out.append(a[3] * b[0] + _sym3(a[2], b[1]) + _sym3(b[2], a[1]) + a[0] * b[3])
        return Jet(self.nvars, self.order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.terms[0] == 0.0:
            raise JetDomainError("division by zero")
        a, b = self.terms, o.terms
        c0 = a[0] / b[0]
        out = [c0]
        if self.order >= 1:
            out.append((a[1] - c0 * b[1]) / b[0])
        if self.order >= 2:
            c1 = out[1]
            out.append((a[2] - c0 * b[2] - np.multiply.outer(c1, b[1])
                        - np.multiply.outer(b[1], c1)) / b[0])
        if self.order >= 3:
            c1, c2 = out[1], out[2]
            out.append((a[3] - c0 * b[3] - _sym3(c2, b[1]) - _sym3(b[2], c1)) / b[0])
        return Jet(self.nvars, self.order, out)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def power(self, exponent: int) -> "Jet":
        """Integer power x**k, exact through the jet order (k may be negative)."""
        k = int(exponent)
        x = self.terms[0]
        if x == 0.0 and k < 0:
            raise JetDomainError(f"zero raised to negative power {k}")
        derivs = []
        coeff = 1.0
        for j in range(self.order + 1):
            if j > 0:
                coeff *= (k - j + 1)
            if coeff == 0.0:
                derivs.append(0.0)
            else:
                derivs.append(coeff * x ** (k - j))
        return compose(derivs, self)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.terms[0]!r})"


def compose(derivs, inner: Jet) -> Jet:
    """Chain rule for f(inner) given derivatives of f at inner.value.

    `derivs` lists f, f', f'', f''' at the inner value; only the first
    inner.order + 1 entries are used.
    """
    u = inner.terms
    out = [float(derivs[0])]
    if inner.order >= 1:
        out.append(derivs[1] * u[1])
    if inner.order >= 2:
        out.append(derivs[2] * np.multiply.outer(u[1], u[1]) + derivs[1] * u[2])
    if inner.order >= 3:
        out.append(derivs[3] * np.multiply.outer(np.multiply.outer(u[1], u[1]), u[1])
                   + derivs[2] * _sym3(u[2], u[1]) + derivs[1] * u[3])
    return Jet(inner.nvars, inner.order, out)


def _derivs_sin(x):
    s, c = math.sin(x), math.cos(x)
    return (s, c, -s, -c)


def _derivs_cos(x):
    s, c = math.sin(x), math.cos(x)
    return (c, -s, -c, s)


def _derivs_tan(x):
    t = math.tan(x)
    s = 1.0 + t * t
    return (t, s, 2.0 * t * s, s * (2.0 + 6.0 * t * t))


def _derivs_exp(x):
    e = math.exp(x)
    return (e, e, e, e)


def _derivs_log(x):
    if x <= 0.0:
        raise JetDomainError(f"log of non-positive value {x}")
    return (math.log(x), 1.0 / x, -1.0 / x**2, 2.0 / x**3)


def _derivs_sqrt(x):
    if x < 0.0:
        raise JetDomainError(f"sqrt of negative value {x}")
    if x == 0.0:
        raise JetDomainError("sqrt is not differentiable at zero")
    r = math.sqrt(x)
    return (r, 0.5 / r, -0.25 / (x * r), 0.375 / (x * x * r))


def _derivs_sinh(x):
    s, c = math.sinh(x), math.cosh(x)
    return (s, c, s, c)


def _derivs_cosh(x):
    s, c = math.sinh(x), math.cosh(x)
    return (c, s, c, s)


def _derivs_tanh(x):
    t = math.tanh(x)
    s = 1.0 - t * t
    return (t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0))


FUNCTION_DERIVS = {
    "sin": _derivs_sin,
    "cos": _derivs_cos,
    "tan": _derivs_tan,
    "exp": _derivs_exp,
    "log": _derivs_log,
    "sqrt": _derivs_sqrt,
    "sinh": _derivs_sinh,
    "cosh": _derivs_cosh,
    "tanh": _derivs_tanh,
}


def apply_function(name: str, jet: Jet) -> Jet:
    """Elementary function of a jet (Faa di Bruno through the jet order)."""
    try:
        table = FUNCTION_DERIVS[name]
    except KeyError:
        raise JetUsageError(f"unknown elementary function '{name}'") from None
    return compose(table(jet.value), jet)


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Named binary arithmetic; thin functional front end over the operators."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise JetUsageError(f"unknown jet operation '{op}'")


# -- packed matrices of jets -------------------------------------------
#
# A "packed" matrix jet stores a matrix-valued function and its derivative
# tensors as plain arrays with derivative axes first:
#   packed[0]          (r, s)             values
#   packed[1][a]       (m, r, s)          d_a M
#   packed[2][a, b]    (m, m, r, s)       d_a d_b M
# which keeps heavy linear algebra in vectorized einsum instead of per-entry
# Jet objects.


def pack_matrix(rows) -> list[np.ndarray]:
    """Pack a rectangular list-of-lists of same-shape Jets."""
    r = len(rows)
    s = len(rows[0])
    first = rows[0][0]
    m, order = first.nvars, first.order
    packed = []
    for k in range(order + 1):
        shape = (m,) * k + (r, s)
        arr = np.zeros(shape)
        for i in range(r):
            for j in range(s):
                jet = rows[i][j]
                if jet.nvars != m or jet.order != order:
                    raise JetUsageError("pack_matrix requires uniform nvars and order")
                arr[..., i, j] = jet.terms[k]
        packed.append(arr)
    return packed


def packed_entry(packed: list[np.ndarray], i: int, j: int) -> Jet:
    """Wrap the (i, j) entry of a packed matrix back into a Jet."""
    m = packed[1].shape[0] if len(packed) > 1 else 1
    terms = [float(packed[0][i, j])]
    for k in range(1, len(packed)):
        terms.append(packed[k][..., i, j])
    return Jet(m, len(packed) - 1, terms)


def packed_inverse(packed: list[np.ndarray]) -> list[np.ndarray]:
    """Inverse of a packed matrix jet through order 2.

    Uses d(M^-1) = -M^-1 (dM) M^-1 and its derivative; raises
    numpy.linalg.LinAlgError if the value matrix is singular.
    """
    order = len(packed) - 1
    if order > 2:
        raise JetUsageError("packed_inverse supports orders 0..2")
    h0 = np.linalg.inv(packed[0])
    out = [h0]
    if order >= 1:
        out.append(-np.einsum("ij,ajk,kl->ail", h0, packed[1], h0))
    if order >= 2:
        t = np.einsum("ij,abjk,kl->abil", h0, packed[2], h0)
        s = np.einsum("ij,ajk,kl,blm,mn->abin", h0, packed[1], h0, packed[1], h0,
                      optimize=True)
        out.append(-t + s + s.transpose(1, 0, 2, 3))
    return out
