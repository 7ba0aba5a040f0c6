"""Levi-Civita connection, curvature, and the fundamental submersion tensors.

Frame-mode quantities are computed from the integrability data alone: the
connection comes from the closed-form table, curvature from the table and
its frame derivatives (structure constants included).  Chart-mode models
additionally admit two independent oracles, the Koszul formula on the frame
and the coordinate-Christoffel curvature, which the tests play against the
closed forms.

Sign conventions (see docs/conventions.md): R(E,F) = ∇_E∇_F - ∇_F∇_E -
∇_[E,F], R_ijkl = g(R(e_i,e_j)e_k, e_l), and sectional curvature
K = R_ijji / (g_ii g_jj - g_ij^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import EPSILON, FrameModel, ModelError
from .submersion import (
    IntegrabilityData,
    _frame_polys,
    _poly_bracket,
    _poly_inner,
    integrability_jets,
)

NAMED_COMPONENT_INDICES = {
    "R1312": (0, 2, 0, 1),
    "R1313": (0, 2, 0, 2),
    "R1323": (0, 2, 1, 2),
    "R1212": (0, 1, 0, 1),
    "R1223": (0, 1, 1, 2),
    "R2313": (1, 2, 0, 2),
    "R2323": (1, 2, 1, 2),
}


class DegeneratePlane(ValueError):
    """Sectional curvature requested for a degenerate tangent plane."""


class ModeUnsupported(ModelError):
    """An operation that needs a chart-mode model got a data-mode one."""


@dataclass(frozen=True)
class ConnectionTable:
    """Frame connection coefficients, gamma[i, j, k] meaning
    nabla_{e_i} e_j = sum_k gamma[i, j, k] e_k.  Batched as (3, 3, 3, B)."""

    gamma: np.ndarray

    def compatibility_residual(self) -> float:
        """Metric compatibility: eps_k gamma[i,j,k] + eps_j gamma[i,k,j] = 0
        for all i, j, k (the diagonal j = k case gives eps_j gamma[i,j,j] = 0)."""
        g = self.gamma
        r = EPSILON[None, None, :, None] * g + EPSILON[None, :, None, None] * np.swapaxes(
            g, 1, 2
        )
        return float(np.max(np.abs(r)))


def _gamma_table(f1, f2, k1, k2, sigma) -> np.ndarray:
    """The closed-form connection table for given (arrays of) data values."""
    f1, f2, k1, k2, sigma = np.broadcast_arrays(
        np.atleast_1d(f1),
        np.atleast_1d(f2),
        np.atleast_1d(k1),
        np.atleast_1d(k2),
        np.atleast_1d(sigma),
    )
    g = np.zeros((3, 3, 3) + f1.shape)
    g[0, 0, 1] = -f1
    g[0, 1, 0] = f1
    g[0, 1, 2] = -sigma
    g[0, 2, 1] = -sigma
    g[1, 0, 1] = -f2
    g[1, 0, 2] = sigma
    g[1, 1, 0] = f2
    g[1, 2, 0] = sigma
    g[2, 0, 1] = -sigma
    g[2, 0, 2] = -k1
    g[2, 1, 0] = sigma
    g[2, 1, 2] = -k2
    g[2, 2, 0] = -k1
    g[2, 2, 1] = -k2
    return g


def _structure_constants(data: IntegrabilityData) -> np.ndarray:
    """c[i, j, m] with [e_i, e_j] = sum_m c[i,j,m] e_m."""
    nb = data.nb
    c = np.zeros((3, 3, 3, nb))
    c[0, 1, 0] = data.f1.value
    c[0, 1, 1] = data.f2.value
    c[0, 1, 2] = -2.0 * data.sigma.value
    c[0, 2, 2] = data.k1.value
    c[1, 2, 2] = data.k2.value
    c -= np.swapaxes(c, 0, 1)
    return c


def connection_closed_form(data: IntegrabilityData) -> ConnectionTable:
    """The adapted-frame connection table evaluated from the data values."""
    return ConnectionTable(
        _gamma_table(
            data.f1.value,
            data.f2.value,
            data.k1.value,
            data.k2.value,
            data.sigma.value,
        )
    )


def gram_derivative_terms(model: FrameModel, points=None) -> np.ndarray:
    """e_i(g(e_j, e_k)) on the grid, shape (3,3,3,B).  For an orthonormal
    frame these vanish; the Koszul oracle keeps them anyway and the tests
    assert they are numerically zero."""
    if model.mode != "chart":
        raise ModeUnsupported("frame metric derivatives need a chart-mode model")
    pts = model.chart.sample_grid() if points is None else np.atleast_2d(
        np.asarray(points, dtype=float)
    )
    X, G = _frame_polys(model, pts, order=2)
    out = np.zeros((3, 3, 3, pts.shape[0]))
    xv = np.stack([[X[i][a].value for a in range(3)] for i in range(3)])
    for j in range(3):
        for k in range(j, 3):
            gjk = _poly_inner(G, X[j], X[k])
            grad = gjk.grad  # (3, B) chart gradient
            for i in range(3):
                out[i, j, k] = np.einsum("ap,ap->p", xv[i], grad)
                out[i, k, j] = out[i, j, k]
    return out


def connection_koszul_oracle(model: FrameModel, points=None) -> ConnectionTable:
    """Connection coefficients from the full Koszul formula

        2 g(nabla_{e_i} e_j, e_k) = e_i g(e_j,e_k) + e_j g(e_i,e_k)
                                  - e_k g(e_i,e_j) + g([e_i,e_j], e_k)
                                  - g([e_i,e_k], e_j) - g([e_j,e_k], e_i)

    solved against the frame Gram matrix.  Chart mode only; this is the
    independent check of the closed-form table."""
    if model.mode != "chart":
        raise ModeUnsupported("the Koszul oracle needs a chart-mode model")
    pts = model.chart.sample_grid() if points is None else np.atleast_2d(
        np.asarray(points, dtype=float)
    )
    nb = pts.shape[0]
    X, G = _frame_polys(model, pts, order=2)
    xv = np.stack([[X[i][a].value for a in range(3)] for i in range(3)])

    gram = np.zeros((3, 3, nb))
    dgram = np.zeros((3, 3, 3, nb))  # dgram[i,j,k] = e_i(g(e_j,e_k))
    for j in range(3):
        for k in range(j, 3):
            gjk = _poly_inner(G, X[j], X[k])
            gram[j, k] = gram[k, j] = gjk.value
            d = np.einsum("iap,ap->ip", xv, gjk.grad)
            dgram[:, j, k] = d
            dgram[:, k, j] = d

    brk = np.zeros((3, 3, 3, nb))  # g([e_i,e_j], e_k)
    for i in range(3):
        for j in range(i + 1, 3):
            bij = _poly_bracket(X, i, j)
            for k in range(3):
                val = _poly_inner(G, bij, X[k]).value
                brk[i, j, k] = val
                brk[j, i, k] = -val

    gamma = np.zeros((3, 3, 3, nb))
    for i in range(3):
        for j in range(3):
            rhs = np.zeros((3, nb))
            for k in range(3):
                rhs[k] = 0.5 * (
                    dgram[i, j, k]
                    + dgram[j, i, k]
                    - dgram[k, i, j]
                    + brk[i, j, k]
                    - brk[i, k, j]
                    - brk[j, k, i]
                )
            # solve gram . gamma_vec = rhs pointwise
            gamma[i, j] = np.linalg.solve(
                gram.transpose(2, 0, 1), rhs.T[:, :, None]
            )[:, :, 0].T
    return ConnectionTable(gamma)


@dataclass(frozen=True)
class CurvatureComponents:
    """The (0,4) curvature tensor in the frame, R[i,j,k,l,B] = R_ijkl."""

    R: np.ndarray

    def named(self) -> dict:
        return {name: self.R[idx] for name, idx in NAMED_COMPONENT_INDICES.items()}

    def antisymmetry_residual(self) -> float:
        r1 = self.R + np.swapaxes(self.R, 0, 1)
        r2 = self.R + np.swapaxes(self.R, 2, 3)
        return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))

    def pair_symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.R - self.R.transpose(2, 3, 0, 1, 4))))

    def first_bianchi_residual(self) -> float:
        s = (
            self.R
            + self.R.transpose(1, 2, 0, 3, 4)
            + self.R.transpose(2, 0, 1, 3, 4)
        )
        return float(np.max(np.abs(s)))


def curvature_components(data) -> CurvatureComponents:
    """Frame curvature from the connection table, its frame derivatives and
    the structure constants:

        R(e_i,e_j)e_k = e_i(gamma[j,k,m]) e_m - e_j(gamma[i,k,m]) e_m
                      + gamma[j,k,m] gamma[i,m,l] e_l
                      - gamma[i,k,m] gamma[j,m,l] e_l
                      - c[i,j,m] gamma[m,k,l] e_l.
    """
    if isinstance(data, FrameModel):
        data = integrability_jets(data)
    gamma = _gamma_table(
        data.f1.value, data.f2.value, data.k1.value, data.k2.value, data.sigma.value
    )
    # e_l(gamma): the table is linear in the data
    dgamma = np.stack(
        [
            _gamma_table(
                data.f1.d[l], data.f2.d[l], data.k1.d[l], data.k2.d[l], data.sigma.d[l]
            )
            for l in range(3)
        ]
    )
    c = _structure_constants(data)
    nb = gamma.shape[-1]
    comp = np.zeros((3, 3, 3, 3, nb))  # comp[i,j,k,l]: e_l component of R(e_i,e_j)e_k
    for i in range(3):
        for j in range(3):
            term = dgamma[i, j] - dgamma[j, i]  # e_i(gamma[j,k,l]) - e_j(gamma[i,k,l])
            term = term + np.einsum("kmp,mlp->klp", gamma[j], gamma[i]) - np.einsum(
                "kmp,mlp->klp", gamma[i], gamma[j]
            )
            term = term - np.einsum("mp,mklp->klp", c[i, j], gamma)
            comp[i, j] = term
    R = comp * EPSILON[None, None, None, :, None]
    return CurvatureComponents(R)


def named_curvature(data) -> dict:
    """The seven closed-form curvature combinations, written exactly as the
    adapted-frame calculus gives them.  A second code path from
    :func:`curvature_components`; the two are tested to agree."""
    if isinstance(data, FrameModel):
        data = integrability_jets(data)
    f1, f2, k1, k2, s = data.f1, data.f2, data.k1, data.k2, data.sigma
    f1v, f2v, k1v, k2v, sv = (u.value for u in (f1, f2, k1, k2, s))
    return {
        "R1312": -s.d[0] + 2.0 * k1v * sv,
        "R1313": k1.d[0] - sv**2 - k1v**2 + k2v * f1v,
        "R1323": k2.d[0] - s.d[2] - k1v * f1v - k1v * k2v,
        "R1212": f1.d[1] - f2.d[0] + f1v**2 + f2v**2 - 3.0 * sv**2,
        "R1223": -s.d[1] + 2.0 * k2v * sv,
        "R2313": k1.d[1] + s.d[2] + k2v * f2v - k1v * k2v,
        "R2323": -(sv**2) + k2.d[1] - k1v * f2v - k2v**2,
    }


def space_form_residual_pointwise(components: CurvatureComponents, c: float) -> np.ndarray:
    """max_ijkl |R_ijkl - c (g_jk g_il - g_ik g_jl)| per point, with g the
    frame metric diag(+1, +1, -1)."""
    eta = np.diag(EPSILON)
    target = c * (
        np.einsum("jk,il->ijkl", eta, eta) - np.einsum("ik,jl->ijkl", eta, eta)
    )
    diff = components.R - target[:, :, :, :, None]
    return np.max(np.abs(diff), axis=(0, 1, 2, 3))


def space_form_residual(components: CurvatureComponents, c: float) -> float:
    return float(np.max(space_form_residual_pointwise(components, c)))


def sectional_curvature(components: CurvatureComponents, plane, g=None):
    """K = R_ijji / (g_ii g_jj - g_ij^2) for the coordinate plane spanned by
    frame legs i, j (1-based indices as in the component names)."""
    i, j = plane[0] - 1, plane[1] - 1
    if i == j:
        raise DegeneratePlane("plane needs two distinct legs")
    if g is None:
        g = np.diag(EPSILON)
    denom = g[i, i] * g[j, j] - g[i, j] ** 2
    if abs(denom) < 1e-14:
        raise DegeneratePlane(f"plane ({plane[0]},{plane[1]}) is degenerate")
    return components.R[i, j, j, i] / denom


@dataclass(frozen=True)
class ONeillTensors:
    """Fundamental tensors of the submersion in frame components:
    T[i,j] = T_{e_i} e_j and A[i,j] = A_{e_i} e_j, each a frame vector,
    shapes (3, 3, 3, B).  T is the second fundamental form of the fibers,
    A the obstruction to integrability of the horizontal distribution."""

    T: np.ndarray
    A: np.ndarray

    def max_T(self) -> float:
        return float(np.max(np.abs(self.T)))

    def max_A(self) -> float:
        return float(np.max(np.abs(self.A)))


def oneill_tensors(data) -> ONeillTensors:
    """T_E F = h grad_{vE} vF + v grad_{vE} hF and
    A_E F = v grad_{hE} hF + h grad_{hE} vF, evaluated on the frame legs
    through the connection table (h spans legs 1, 2; v spans leg 3)."""
    if isinstance(data, FrameModel):
        data = integrability_jets(data)
    gamma = connection_closed_form(data).gamma
    nb = gamma.shape[-1]
    h = np.array([1.0, 1.0, 0.0])
    v = np.array([0.0, 0.0, 1.0])
    T = np.zeros((3, 3, 3, nb))
    A = np.zeros((3, 3, 3, nb))
    for i in range(3):
        for j in range(3):
            # vertical part of e_i acting on vertical / horizontal parts of e_j
            if v[i]:
                T[i, j] += v[j] * (h[:, None] * gamma[i, j])
                T[i, j] += h[j] * (v[:, None] * gamma[i, j])
            if h[i]:
                A[i, j] += h[j] * (v[:, None] * gamma[i, j])
                A[i, j] += v[j] * (h[:, None] * gamma[i, j])
    return ONeillTensors(T=T, A=A)


def base_gauss_curvature(data) -> np.ndarray:
    """Gauss curvature of the base surface in the projected frame:
    K^B = -(-e1(f2) + e2(f1) + f1^2 + f2^2)."""
    if isinstance(data, FrameModel):
        data = integrability_jets(data)
    return -(
        -data.f2.d[0]
        + data.f1.d[1]
        + data.f1.value**2
        + data.f2.value**2
    )


def check_oneill_equation(data) -> np.ndarray:
    """Residual of the horizontal curvature equation
    |K^B - K_{e1^e2} - 3 g(A_12, A_12) / (g11 g22 - g12^2)| per point."""
    if isinstance(data, FrameModel):
        data = integrability_jets(data)
    comps = curvature_components(data)
    K12 = sectional_curvature(comps, (1, 2))
    tensors = oneill_tensors(data)
    A12 = tensors.A[0, 1]  # frame components of A_{e1} e2
    gA = np.einsum("a,ap->p", EPSILON, A12**2)
    KB = base_gauss_curvature(data)
    return np.abs(KB - K12 - 3.0 * gA)


def curvature_chart_oracle(model: FrameModel, points=None) -> np.ndarray:
    """Frame curvature components computed the entirely different way:
    coordinate Christoffel symbols of the chart metric, coordinate curvature,
    then contraction with the frame.  Shape (3,3,3,3,B)."""
    if model.mode != "chart":
        raise ModeUnsupported("the chart curvature oracle needs a chart-mode model")
    pts = model.chart.sample_grid() if points is None else np.atleast_2d(
        np.asarray(points, dtype=float)
    )
    nb = pts.shape[0]
    X, G = _frame_polys(model, pts, order=2)

    # inverse metric as order-1 polynomials through the adjugate
    def minor(r, c):
        (r0, r1), (c0, c1) = r, c
        return G[r0][c0] * G[r1][c1] - G[r0][c1] * G[r1][c0]

    det = (
        G[0][0] * minor((1, 2), (1, 2))
        - G[0][1] * minor((1, 2), (0, 2))
        + G[0][2] * minor((1, 2), (0, 1))
    )
    others = [(1, 2), (0, 2), (0, 1)]
    ginv = [[None] * 3 for _ in range(3)]
    for a in range(3):
        for b in range(3):
            cof = minor(others[b], others[a])
            ginv[a][b] = (cof if (a + b) % 2 == 0 else -cof) / det

    dG = [[[G[a][b].partial(c) for c in range(3)] for b in range(3)] for a in range(3)]
    # Christoffels as order-1 polynomials
    Gam = [[[None] * 3 for _ in range(3)] for _ in range(3)]
    for cidx in range(3):
        for a in range(3):
            for b in range(a, 3):
                acc = None
                for d in range(3):
                    term = ginv[cidx][d] * (dG[d][b][a] + dG[d][a][b] - dG[a][b][d])
                    acc = term if acc is None else acc + term
                Gam[cidx][a][b] = acc * 0.5
                Gam[cidx][b][a] = Gam[cidx][a][b]

    gv = np.zeros((3, 3, nb))
    for a in range(3):
        for b in range(3):
            gv[a, b] = G[a][b].value
    gamv = np.zeros((3, 3, 3, nb))
    gamg = np.zeros((3, 3, 3, 3, nb))  # gamg[c,a,b,e] = d_e Gam^c_ab
    for cidx in range(3):
        for a in range(3):
            for b in range(3):
                gamv[cidx, a, b] = Gam[cidx][a][b].value
                gamg[cidx, a, b] = Gam[cidx][a][b].grad

    # R(d_a, d_b) d_c = (d_a Gam^d_bc - d_b Gam^d_ac
    #                    + Gam^e_bc Gam^d_ae - Gam^e_ac Gam^d_be) d_d
    comp = np.zeros((3, 3, 3, 3, nb))  # comp[a,b,c,d]
    for a in range(3):
        for b in range(3):
            comp[a, b] = (
                gamg[:, b, :, a].transpose(1, 0, 2)
                - gamg[:, a, :, b].transpose(1, 0, 2)
                + np.einsum("ecp,dep->cdp", gamv[:, b], gamv[:, a])
                - np.einsum("ecp,dep->cdp", gamv[:, a], gamv[:, b])
            )
    R4 = np.einsum("abcdp,dlp->abclp", comp, gv)
    xv = np.stack([[X[i][a].value for a in range(3)] for i in range(3)])
    return np.einsum("abclp,iap,jbp,kcp,mlp->ijkmp", R4, xv, xv, xv, xv)
