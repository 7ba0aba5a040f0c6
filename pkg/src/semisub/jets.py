"""Truncated Taylor-jet arithmetic in three chart variables.

Two jet flavours live here:

* ``Poly``, a dense truncated Taylor polynomial of a scalar field at a batch
  of points.  Order 2 realizes the public ``ScalarJet2`` currency
  (value/gradient/Hessian); chart pipelines evaluate at order 3 because
  quantities extracted from a frame (which already cost one derivative)
  still need two more derivative levels downstream.

* ``FrameJet``, a scalar together with its first and second derivatives
  along the three frame legs.  The legs are arbitrary derivations, so the
  second-derivative table ``dd[a, b] = e_a(e_b(u))`` need not be symmetric.
  All downstream geometric formulas are derivation-algebraic and consume
  this type regardless of whether the model is given by a chart or by
  integrability data directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NVARS = 3
MAX_ORDER = 4


class DomainError(ValueError):
    """Evaluation left the domain of a function (log of a non-positive
    number, division by zero, ...).  ``detail`` names the offending
    subexpression when raised from expression evaluation."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        msg = reason if not detail else f"{reason} in '{detail}'"
        super().__init__(msg)


def _build_monomials(order):
    mons = []
    for total in range(order + 1):
        for i in range(total, -1, -1):
            for j in range(total - i, -1, -1):
                mons.append((i, j, total - i - j))
    return mons


_MONS = [_build_monomials(n) for n in range(MAX_ORDER + 1)]
_INDEX = [{m: k for k, m in enumerate(mons)} for mons in _MONS]
_SIZE = [len(mons) for mons in _MONS]


def _build_mul_table(order):
    ti, tj, tk = [], [], []
    mons = _MONS[order]
    index = _INDEX[order]
    for i, mi in enumerate(mons):
        di = sum(mi)
        for j, mj in enumerate(mons):
            if di + sum(mj) > order:
                continue
            mk = (mi[0] + mj[0], mi[1] + mj[1], mi[2] + mj[2])
            ti.append(i)
            tj.append(j)
            tk.append(index[mk])
    return np.array(ti), np.array(tj), np.array(tk)


_MUL = [_build_mul_table(n) for n in range(MAX_ORDER + 1)]


def _build_diff_table(order, axis):
    # maps coefficients of an order-n poly to those of its order-(n-1) partial
    src, dst, fac = [], [], []
    for i, m in enumerate(_MONS[order]):
        if m[axis] == 0:
            continue
        m2 = list(m)
        m2[axis] -= 1
        src.append(i)
        dst.append(_INDEX[order - 1][tuple(m2)])
        fac.append(float(m[axis]))
    return np.array(src), np.array(dst), np.array(fac)


_DIFF = [
    [_build_diff_table(n, a) for a in range(NVARS)] if n >= 1 else None
    for n in range(MAX_ORDER + 1)
]

_GRAD_POS = [_INDEX[2][m] for m in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
# packed Hessian order: xx, xy, xz, yy, yz, zz
_HESS6_MONS = ((2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2))
_HESS6_POS = [_INDEX[2][m] for m in _HESS6_MONS]
_HESS6_FAC = np.array([2.0, 1.0, 1.0, 2.0, 1.0, 2.0])


class Poly:
    """Taylor polynomial of total degree <= order, coefficients shaped
    (n_monomials, B) for a batch of B evaluation points.  Coefficient of the
    monomial m is the mixed partial divided by m!."""

    __slots__ = ("order", "c")

    def __init__(self, order: int, c: np.ndarray):
        self.order = order
        self.c = c

    @classmethod
    def const(cls, value, order: int, nb: int) -> "Poly":
        c = np.zeros((_SIZE[order], nb))
        c[0] = value
        return cls(order, c)

    @classmethod
    def coordinate(cls, axis: int, values: np.ndarray, order: int) -> "Poly":
        c = np.zeros((_SIZE[order], len(values)))
        c[0] = values
        if order >= 1:
            c[_INDEX[order][tuple(1 if a == axis else 0 for a in range(NVARS))]] = 1.0
        return cls(order, c)

    @property
    def nb(self) -> int:
        return self.c.shape[1]

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    @property
    def grad(self) -> np.ndarray:
        if self.order < 1:
            return np.zeros((NVARS, self.nb))
        idx = [_INDEX[self.order][tuple(1 if a == ax else 0 for a in range(NVARS))]
               for ax in range(NVARS)]
        return self.c[idx]

    @property
    def hess6(self) -> np.ndarray:
        if self.order < 2:
            return np.zeros((6, self.nb))
        idx = [_INDEX[self.order][m] for m in _HESS6_MONS]
        return self.c[idx] * _HESS6_FAC[:, None]

    @property
    def hess(self) -> np.ndarray:
        return unpack_hess6(self.hess6)

    def truncate(self, order: int) -> "Poly":
        if order == self.order:
            return self
        if order > self.order:
            c = np.zeros((_SIZE[order], self.nb))
            c[: _SIZE[self.order]] = self.c
            return Poly(order, c)
        return Poly(order, self.c[: _SIZE[order]].copy())

    def partial(self, axis: int) -> "Poly":
        """Partial derivative, one order lower."""
        if self.order == 0:
            return Poly(0, np.zeros_like(self.c))
        src, dst, fac = _DIFF[self.order][axis]
        out = np.zeros((_SIZE[self.order - 1], self.nb))
        out[dst] = self.c[src] * fac[:, None]
        return Poly(self.order - 1, out)

    def __neg__(self):
        return Poly(self.order, -self.c)

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.order != self.order:
                n = min(self.order, other.order)
                return self.truncate(n), other.truncate(n)
            return self, other
        return self, Poly.const(other, self.order, self.nb)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Poly(a.order, a.c + b.c)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Poly(a.order, a.c - b.c)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Poly(a.order, b.c - a.c)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.order, self.c * other)
        a, b = self._coerce(other)
        ti, tj, tk = _MUL[a.order]
        prod = a.c[ti] * b.c[tj]
        if a.c.shape[1] == 1:
            out = np.bincount(tk, weights=prod[:, 0], minlength=_SIZE[a.order])
            return Poly(a.order, out[:, None])
        out = np.zeros((_SIZE[a.order], a.c.shape[1]))
        np.add.at(out, tk, prod)
        return Poly(a.order, out)

    __rmul__ = __mul__

    def nilpotent(self) -> "Poly":
        c = self.c.copy()
        c[0] = 0.0
        return Poly(self.order, c)

    def compose(self, coeffs) -> "Poly":
        """Horner evaluation of sum_k coeffs[k] * (self - self0)^k.
        coeffs[k] must be phi^(k)(value)/k! as (B,) arrays."""
        w = self.nilpotent()
        out = Poly.const(coeffs[-1], self.order, self.nb)
        for k in range(len(coeffs) - 2, -1, -1):
            out = out * w + Poly.const(coeffs[k], self.order, self.nb)
        return out

    def recip(self) -> "Poly":
        v0 = self.value
        if np.any(v0 == 0.0):
            raise DomainError("division by zero")
        inv = 1.0 / v0
        coeffs = [inv * (-inv) ** k for k in range(self.order + 1)]
        return self.compose(coeffs)

    def __truediv__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.order, self.c / other)
        a, b = self._coerce(other)
        return a * b.recip()

    def __rtruediv__(self, other):
        return self.recip() * other

    def pow_int(self, n: int) -> "Poly":
        """Integer power by repeated multiplication; negative powers go
        through the reciprocal."""
        if n < 0:
            return self.pow_int(-n).recip()
        out = Poly.const(1.0, self.order, self.nb)
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out


def _factorials(order):
    return [math.factorial(k) for k in range(order + 1)]


def taylor_exp(p: Poly) -> Poly:
    e = np.exp(p.value)
    return p.compose([e / math.factorial(k) for k in range(p.order + 1)])


def taylor_log(p: Poly) -> Poly:
    u = p.value
    if np.any(u <= 0.0):
        raise DomainError("log of a non-positive value")
    coeffs = [np.log(u)]
    for k in range(1, p.order + 1):
        coeffs.append((-1.0) ** (k + 1) / (k * u**k))
    return p.compose(coeffs)


def taylor_sqrt(p: Poly) -> Poly:
    u = p.value
    if np.any(u < 0.0):
        raise DomainError("sqrt of a negative value")
    if p.order >= 1 and np.any(u == 0.0):
        raise DomainError("sqrt is not differentiable at zero")
    s = np.sqrt(u)
    coeffs = [s]
    if p.order >= 1:
        coeffs.append(0.5 / s)
    if p.order >= 2:
        coeffs.append(-1.0 / (8.0 * u * s))
    if p.order >= 3:
        coeffs.append(1.0 / (16.0 * u**2 * s))
    if p.order >= 4:
        coeffs.append(-5.0 / (128.0 * u**3 * s))
    return p.compose(coeffs)


def taylor_sin(p: Poly) -> Poly:
    s, c = np.sin(p.value), np.cos(p.value)
    cycle = [s, c, -s, -c]
    fact = _factorials(p.order)
    return p.compose([cycle[k % 4] / fact[k] for k in range(p.order + 1)])


def taylor_cos(p: Poly) -> Poly:
    s, c = np.sin(p.value), np.cos(p.value)
    cycle = [c, -s, -c, s]
    fact = _factorials(p.order)
    return p.compose([cycle[k % 4] / fact[k] for k in range(p.order + 1)])


def taylor_sinh(p: Poly) -> Poly:
    sh, ch = np.sinh(p.value), np.cosh(p.value)
    cycle = [sh, ch]
    fact = _factorials(p.order)
    return p.compose([cycle[k % 2] / fact[k] for k in range(p.order + 1)])


def taylor_cosh(p: Poly) -> Poly:
    sh, ch = np.sinh(p.value), np.cosh(p.value)
    cycle = [ch, sh]
    fact = _factorials(p.order)
    return p.compose([cycle[k % 2] / fact[k] for k in range(p.order + 1)])


def taylor_tanh(p: Poly) -> Poly:
    t = np.tanh(p.value)
    s = 1.0 - t * t
    coeffs = [t]
    if p.order >= 1:
        coeffs.append(s)
    if p.order >= 2:
        coeffs.append(-t * s)
    if p.order >= 3:
        coeffs.append(s * (3.0 * t * t - 1.0) / 3.0)
    if p.order >= 4:
        coeffs.append(t * s * (2.0 - 3.0 * t * t) / 3.0)
    return p.compose(coeffs)


TAYLOR_FUNCTIONS = {
    "exp": taylor_exp,
    "log": taylor_log,
    "sqrt": taylor_sqrt,
    "sin": taylor_sin,
    "cos": taylor_cos,
    "sinh": taylor_sinh,
    "cosh": taylor_cosh,
    "tanh": taylor_tanh,
}


def pack_hess6(h: np.ndarray) -> np.ndarray:
    """Symmetric 3x3 (possibly batched as (3,3,B)) to packed 6-vector."""
    return np.stack([h[0, 0], h[0, 1], h[0, 2], h[1, 1], h[1, 2], h[2, 2]])


def unpack_hess6(h6: np.ndarray) -> np.ndarray:
    shape = (NVARS, NVARS) + h6.shape[1:]
    h = np.zeros(shape)
    h[0, 0], h[0, 1], h[0, 2] = h6[0], h6[1], h6[2]
    h[1, 1], h[1, 2], h[2, 2] = h6[3], h6[4], h6[5]
    h[1, 0], h[2, 0], h[2, 1] = h6[1], h6[2], h6[4]
    return h


def _sym_outer6(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Packed form of outer(a,b) + outer(b,a) for 3-vectors."""
    return np.array(
        [
            2.0 * a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[2] * b[0],
            2.0 * a[1] * b[1],
            a[1] * b[2] + a[2] * b[1],
            2.0 * a[2] * b[2],
        ]
    )


@dataclass(frozen=True, eq=False)
class ScalarJet2:
    """Second-order Taylor data of a scalar field at a chart point.

    The Hessian is stored packed as 6 entries (xx, xy, xz, yy, yz, zz), so it
    is exactly symmetric by construction; ``hess`` rebuilds the matrix.
    """

    value: float
    grad: np.ndarray
    hess6: np.ndarray

    @property
    def hess(self) -> np.ndarray:
        return unpack_hess6(self.hess6)

    @classmethod
    def from_poly(cls, p: Poly, i: int = 0) -> "ScalarJet2":
        q = p.truncate(2) if p.order > 2 else p.truncate(2)
        return cls(float(q.value[i]), q.grad[:, i].copy(), q.hess6[:, i].copy())

    @classmethod
    def constant(cls, value: float) -> "ScalarJet2":
        return cls(float(value), np.zeros(NVARS), np.zeros(6))

    def _lift(self, other):
        if isinstance(other, ScalarJet2):
            return other
        return ScalarJet2.constant(other)

    def __add__(self, other):
        o = self._lift(other)
        return ScalarJet2(self.value + o.value, self.grad + o.grad, self.hess6 + o.hess6)

    __radd__ = __add__

    def __neg__(self):
        return ScalarJet2(-self.value, -self.grad, -self.hess6)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        # Leibniz in both slots: this form is what the product rule tests pin.
        grad = self.value * o.grad + o.value * self.grad
        hess6 = (
            self.value * o.hess6
            + o.value * self.hess6
            + _sym_outer6(self.grad, o.grad)
        )
        return ScalarJet2(self.value * o.value, grad, hess6)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o.value == 0.0:
            raise DomainError("division by zero")
        w0 = self.value / o.value
        gw = (self.grad - w0 * o.grad) / o.value
        hw = (self.hess6 - w0 * o.hess6 - _sym_outer6(gw, o.grad)) / o.value
        return ScalarJet2(w0, gw, hw)

    def __rtruediv__(self, other):
        return self._lift(other) / self


class FrameJet:
    """A scalar with first and second derivatives along the frame legs.

    ``d`` has shape (3, B); ``dd`` has shape (3, 3, B) with the convention
    ``dd[a, b] = e_a(e_b(u))`` (outer derivative first index).  ``dd`` may be
    None for quantities whose second frame derivatives are unavailable, e.g.
    after a frame rotation; arithmetic propagates the loss.
    """

    __slots__ = ("value", "d", "dd")

    def __init__(self, value, d, dd):
        self.value = np.asarray(value, dtype=float)
        self.d = np.asarray(d, dtype=float)
        self.dd = None if dd is None else np.asarray(dd, dtype=float)

    @classmethod
    def constant(cls, value: float, nb: int) -> "FrameJet":
        return cls(
            np.full(nb, float(value)),
            np.zeros((NVARS, nb)),
            np.zeros((NVARS, NVARS, nb)),
        )

    @classmethod
    def from_values(cls, values) -> "FrameJet":
        """Constant-in-space data given numerically per point."""
        v = np.atleast_1d(np.asarray(values, dtype=float))
        nb = v.shape[0]
        return cls(v, np.zeros((NVARS, nb)), np.zeros((NVARS, NVARS, nb)))

    @classmethod
    def from_scalarjet(cls, value, grad, hess) -> "FrameJet":
        """Data mode: the frame legs act as the chart partials."""
        return cls(value, grad, hess)

    @property
    def nb(self) -> int:
        return self.value.shape[0]

    def deriv(self, a: int) -> "FrameJet":
        """The scalar e_a(u) with its first frame derivatives; second
        derivatives of the result would need third derivatives of u."""
        d = self.dd[:, a] if self.dd is not None else np.zeros((NVARS, self.nb))
        if self.dd is None:
            raise DomainError("second frame derivatives unavailable")
        return FrameJet(self.d[a], d, None)

    def _lift(self, other):
        if isinstance(other, FrameJet):
            return other
        return FrameJet.constant(float(other), self.nb)

    def _both_dd(self, o):
        return self.dd is not None and o.dd is not None

    def __add__(self, other):
        o = self._lift(other)
        dd = self.dd + o.dd if self._both_dd(o) else None
        return FrameJet(self.value + o.value, self.d + o.d, dd)

    __radd__ = __add__

    def __neg__(self):
        return FrameJet(-self.value, -self.d, None if self.dd is None else -self.dd)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        d = self.value * o.d + o.value * self.d
        dd = None
        if self._both_dd(o):
            dd = (
                self.dd * o.value
                + o.dd * self.value
                + self.d[None, :, :] * o.d[:, None, :]
                + o.d[None, :, :] * self.d[:, None, :]
            )
        return FrameJet(self.value * o.value, d, dd)

    __rmul__ = __mul__

    def recip(self) -> "FrameJet":
        if np.any(self.value == 0.0):
            raise DomainError("division by zero")
        v = self.value
        inv = 1.0 / v
        d = -self.d * inv**2
        dd = None
        if self.dd is not None:
            dd = (
                -self.dd * inv**2
                + 2.0 * self.d[None, :, :] * self.d[:, None, :] * inv**3
            )
        return FrameJet(inv, d, dd)

    def __truediv__(self, other):
        return self * self._lift(other).recip()

    def __rtruediv__(self, other):
        return self.recip() * other

    def pow_int(self, n: int) -> "FrameJet":
        if n < 0:
            return self.pow_int(-n).recip()
        out = FrameJet.constant(1.0, self.nb)
        base, k = self, n
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out


def fj_sqrt(u: FrameJet) -> FrameJet:
    if np.any(u.value <= 0.0):
        raise DomainError("sqrt of a non-positive value")
    s = np.sqrt(u.value)
    d = u.d / (2.0 * s)
    dd = None
    if u.dd is not None:
        dd = u.dd / (2.0 * s) - u.d[None, :, :] * u.d[:, None, :] / (
            4.0 * u.value * s
        )
    return FrameJet(s, d, dd)


def fj_atan2(y: FrameJet, x: FrameJet) -> FrameJet:
    """atan2(y, x) of two frame scalars; defined away from x = y = 0."""
    r2 = x.value**2 + y.value**2
    if np.any(r2 == 0.0):
        raise DomainError("atan2 at the origin")
    val = np.arctan2(y.value, x.value)
    num = x.value * y.d - y.value * x.d  # (3, B)
    d = num / r2
    dd = None
    if x.dd is not None and y.dd is not None:
        # e_a(num_b) and e_a(r2), then the quotient rule
        d_num = (
            x.d[:, None, :] * y.d[None, :, :]
            + x.value * y.dd
            - y.d[:, None, :] * x.d[None, :, :]
            - y.value * x.dd
        )
        d_r2 = 2.0 * (x.value * x.d + y.value * y.d)  # (3, B)
        dd = d_num / r2 - num[None, :, :] * d_r2[:, None, :] / r2**2
    return FrameJet(val, d, dd)
