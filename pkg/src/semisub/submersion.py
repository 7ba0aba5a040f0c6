"""Integrability data of an adapted frame.

For an adapted frame the brackets have the shape

    [e1, e3] = k1 e3,   [e2, e3] = k2 e3,
    [e1, e2] = f1 e1 + f2 e2 - 2 sigma e3,

and the five functions f1, f2, k1, k2, sigma drive every formula
downstream.  Chart-mode models get their data extracted numerically from
the frame (with bracket residuals as an adaptedness diagnostic); data-mode
models declare them directly.  Either way the result is an
:class:`IntegrabilityData` of frame jets, so consumers never care which
route produced it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import eval_poly
from .geometry import DATA_NAMES, FrameModel, ModelError
from .jets import FrameJet, Poly, fj_atan2, fj_sqrt

CHART_ORDER = 3          # raw jet order for chart pipelines
ADAPTED_TOL = 1e-6       # bracket residual above which a frame is rejected
CONSTANCY_TOL = 1e-8
DEGENERATE_ROTATION_TOL = 1e-14


class NotAdaptedFrame(ModelError):
    """The frame brackets do not have the adapted shape: [e1,e3] or [e2,e3]
    has horizontal components beyond tolerance."""


@dataclass(frozen=True)
class IntegrabilityData:
    """The five data as frame jets at a batch of points."""

    f1: FrameJet
    f2: FrameJet
    k1: FrameJet
    k2: FrameJet
    sigma: FrameJet
    points: np.ndarray
    provenance: str  # "declared" | "extracted" (+ "+rotated")
    bracket_residuals: np.ndarray | None = None  # (4, B), chart mode only

    @property
    def nb(self) -> int:
        return self.points.shape[0]

    def datum(self, name: str) -> FrameJet:
        return getattr(self, name)

    def values(self) -> dict:
        return {n: self.datum(n).value for n in DATA_NAMES}

    def max_bracket_residual(self) -> float:
        if self.bracket_residuals is None:
            return 0.0
        return float(np.max(np.abs(self.bracket_residuals)))


# ---------------------------------------------------------------------------
# chart-mode extraction

def _frame_polys(model: FrameModel, points, order: int):
    X = [
        [eval_poly(c, points, model.constants, order) for c in vf.coeffs]
        for vf in model.frame
    ]
    G = [[None] * 3 for _ in range(3)]
    for a in range(3):
        for b in range(a, 3):
            G[a][b] = eval_poly(model.metric[a][b], points, model.constants, order)
            G[b][a] = G[a][b]
    return X, G


def _poly_bracket(X, i, j):
    """[e_i, e_j] components as polynomials, one order lower."""
    comps = []
    for a in range(3):
        acc = None
        for b in range(3):
            term = X[i][b] * X[j][a].partial(b) - X[j][b] * X[i][a].partial(b)
            acc = term if acc is None else acc + term
        comps.append(acc)
    return comps


def _poly_inner(G, V, W):
    acc = None
    for a in range(3):
        for b in range(3):
            term = G[a][b] * V[a] * W[b]
            acc = term if acc is None else acc + term
    return acc


def _poly_frame_component(G, X, V, i):
    """Component of V along e_i for an orthonormal frame:
    g(V, e_i) / g(e_i, e_i)."""
    return _poly_inner(G, V, X[i]) / _poly_inner(G, X[i], X[i])


def _extract_data_polys(X, G):
    """Data polynomials and the four adaptedness residual values."""
    b13 = _poly_bracket(X, 0, 2)
    b23 = _poly_bracket(X, 1, 2)
    b12 = _poly_bracket(X, 0, 1)
    k1 = _poly_frame_component(G, X, b13, 2)
    k2 = _poly_frame_component(G, X, b23, 2)
    f1 = _poly_frame_component(G, X, b12, 0)
    f2 = _poly_frame_component(G, X, b12, 1)
    sigma = _poly_frame_component(G, X, b12, 2) * (-0.5)
    residuals = np.stack(
        [
            _poly_frame_component(G, X, b13, 0).value,
            _poly_frame_component(G, X, b13, 1).value,
            _poly_frame_component(G, X, b23, 0).value,
            _poly_frame_component(G, X, b23, 1).value,
        ]
    )
    return {"f1": f1, "f2": f2, "k1": k1, "k2": k2, "sigma": sigma}, residuals


def _frame_value_tables(X):
    """Values XV[i,a] and first partials XG[i,a,b] = d_b X_i^a of the frame
    coefficients, for converting chart jets to frame jets."""
    xv = np.stack([[X[i][a].value for a in range(3)] for i in range(3)])
    xg = np.stack([[X[i][a].grad for a in range(3)] for i in range(3)])
    return xv, xg


def _framejet_from_poly(p: Poly, xv, xg) -> FrameJet:
    value = p.value
    grad = p.grad
    d = np.einsum("iap,ap->ip", xv, grad)
    dd = None
    if p.order >= 2:
        hess = p.hess
        dd = np.einsum("iap,jbap,bp->ijp", xv, xg, grad) + np.einsum(
            "iap,jbp,abp->ijp", xv, xv, hess
        )
    return FrameJet(value, d, dd)


def integrability_jets(model: FrameModel, points=None) -> IntegrabilityData:
    """Integrability data as frame jets at the given points (defaults to the
    chart sample grid)."""
    pts = model.chart.sample_grid() if points is None else np.atleast_2d(
        np.asarray(points, dtype=float)
    )
    if model.mode == "data":
        jets = {}
        for n in DATA_NAMES:
            p = eval_poly(model.data[n], pts, model.constants, order=2)
            jets[n] = FrameJet.from_scalarjet(p.value, p.grad, p.hess)
        return IntegrabilityData(points=pts, provenance="declared", **jets)

    X, G = _frame_polys(model, pts, CHART_ORDER)
    polys, residuals = _extract_data_polys(X, G)
    worst = float(np.max(np.abs(residuals)))
    if worst > ADAPTED_TOL:
        raise NotAdaptedFrame(
            f"bracket components of [e1,e3], [e2,e3] along the horizontal legs "
            f"reach {worst:.3e}; the frame is not adapted"
        )
    xv, xg = _frame_value_tables(X)
    jets = {n: _framejet_from_poly(polys[n], xv, xg) for n in DATA_NAMES}
    return IntegrabilityData(
        points=pts, provenance="extracted", bracket_residuals=residuals, **jets
    )


def extract_data(model: FrameModel, p) -> IntegrabilityData:
    """Single-point extraction; chart mode only."""
    if model.mode != "chart":
        raise ModelError("extraction needs a chart-mode model")
    model.chart.require_interior(p)
    return integrability_jets(model, np.atleast_2d(np.asarray(p, dtype=float)))


def adaptedness_residuals(model: FrameModel, points=None) -> np.ndarray:
    """The four horizontal bracket components that vanish for an adapted
    frame, shape (4, B).  Unlike extraction this never raises; it is the
    diagnostic used by verification reports."""
    if model.mode != "chart":
        raise ModelError("adaptedness residuals need a chart-mode model")
    pts = model.chart.sample_grid() if points is None else np.atleast_2d(
        np.asarray(points, dtype=float)
    )
    X, G = _frame_polys(model, pts, order=1)
    _, residuals = _extract_data_polys(X, G)
    return residuals


def scalar_frame_jet(model: FrameModel, e, points) -> FrameJet:
    """An arbitrary scalar field as a frame jet in the model's frame."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p = eval_poly(e, pts, model.constants, order=2)
    if model.mode == "data":
        return FrameJet.from_scalarjet(p.value, p.grad, p.hess)
    X = [
        [eval_poly(c, pts, model.constants, order=1) for c in vf.coeffs]
        for vf in model.frame
    ]
    xv, xg = _frame_value_tables(X)
    return _framejet_from_poly(p, xv, xg)


# ---------------------------------------------------------------------------
# fiber constancy and the frame Jacobi relation

@dataclass(frozen=True)
class ConstancyReport:
    """Vertical derivatives e3(f1), e3(f2), e3(k1), e3(k2), e3(sigma) at the
    sample points; data constant along fibers have all five near zero."""

    names: tuple
    table: np.ndarray  # (5, B)
    tol: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.table)))

    @property
    def ok(self) -> bool:
        return self.max_abs < self.tol


def check_vertical_constancy(data, model=None) -> ConstancyReport:
    """Report e3 of each datum.  Accepts IntegrabilityData or a FrameModel."""
    if isinstance(data, FrameModel):
        data = integrability_jets(data)
    table = np.stack([data.datum(n).d[2] for n in DATA_NAMES])
    return ConstancyReport(names=DATA_NAMES, table=table, tol=CONSTANCY_TOL)


def jacobi_residual(data) -> np.ndarray:
    """2 e3(sigma) + k1 f1 + k2 f2 + e2(k1) - e1(k2) per point.  This
    vanishes identically for data extracted from a genuine frame and
    diagnoses non-realizable declared data."""
    if isinstance(data, FrameModel):
        data = integrability_jets(data)
    return (
        2.0 * data.sigma.d[2]
        + data.k1.value * data.f1.value
        + data.k2.value * data.f2.value
        + data.k1.d[1]
        - data.k2.d[0]
    )


# ---------------------------------------------------------------------------
# frame rotation: align the mean-curvature direction with the first leg

@dataclass(frozen=True)
class RotationResult:
    data: IntegrabilityData
    degenerate: bool
    theta: np.ndarray | None = None


def _reframe(u: FrameJet, rv: np.ndarray, rd: np.ndarray | None) -> FrameJet:
    """Re-express the derivatives of u along rotated legs e_i' = R[i,j] e_j.
    rv[i,j] are the rotation entries, rd[i,j,l] = e_l(R[i,j]) their old-frame
    derivatives."""
    d = np.einsum("ikp,kp->ip", rv, u.d)
    dd = None
    if u.dd is not None and rd is not None:
        dd = np.einsum("ikp,jlkp,lp->ijp", rv, rd, u.d) + np.einsum(
            "ikp,jlp,klp->ijp", rv, rv, u.dd
        )
    return FrameJet(u.value, d, dd)


def rotate_frame(data: IntegrabilityData) -> RotationResult:
    """Rotate the horizontal legs by theta = atan2(k2, k1) pointwise so that
    k1' = sqrt(k1^2 + k2^2) and k2' = 0.  sigma is unchanged; f1', f2' pick
    up the rotation of (f1, f2) minus the derivative terms of theta.  The
    returned jets carry derivatives along the rotated legs.

    Where k1^2 + k2^2 is below tolerance the rotation is undefined and the
    input is returned unchanged with the degenerate flag set.
    """
    k1, k2 = data.k1, data.k2
    rho2 = k1 * k1 + k2 * k2
    if np.any(rho2.value < DEGENERATE_ROTATION_TOL):
        return RotationResult(data, degenerate=True)
    rho = fj_sqrt(rho2)
    ca = k1 / rho  # cos(theta)
    sa = k2 / rho  # sin(theta)
    theta = fj_atan2(k2, k1)
    th1, th2 = theta.deriv(0), theta.deriv(1)

    k1p = ca * k1 + sa * k2
    k2p = ca * k2 - sa * k1
    f1p = ca * data.f1 + sa * data.f2 - (ca * th1 + sa * th2)
    f2p = ca * data.f2 - sa * data.f1 - (ca * th2 - sa * th1)
    sigmap = data.sigma

    nb = data.nb
    zeros = np.zeros(nb)
    ones = np.ones(nb)
    rv = np.array(
        [
            [ca.value, sa.value, zeros],
            [-sa.value, ca.value, zeros],
            [zeros, zeros, ones],
        ]
    )
    zeros3 = np.zeros((3, nb))
    rd = np.array(
        [
            [ca.d, sa.d, zeros3],
            [-sa.d, ca.d, zeros3],
            [zeros3, zeros3, zeros3],
        ]
    )  # rd[i,j,l,p] = e_l(R[i,j])
    out = {
        "f1": _reframe(f1p, rv, rd),
        "f2": _reframe(f2p, rv, rd),
        "k1": _reframe(k1p, rv, rd),
        "k2": _reframe(k2p, rv, rd),
        "sigma": _reframe(sigmap, rv, rd),
    }
    rotated = IntegrabilityData(
        points=data.points,
        provenance=data.provenance + "+rotated",
        **out,
    )
    return RotationResult(rotated, degenerate=False, theta=theta.value)


def rotate_and_reextract(model: FrameModel, points=None) -> IntegrabilityData:
    """Chart-mode twin of :func:`rotate_frame`: realize the rotated frame as
    genuine vector fields and extract its data afresh.  Valid when k1, k2 are
    constant along fibers (otherwise the rotated frame is no longer adapted
    and extraction reports it)."""
    if model.mode != "chart":
        raise ModelError("re-extraction needs a chart-mode model")
    pts = model.chart.sample_grid() if points is None else np.atleast_2d(
        np.asarray(points, dtype=float)
    )
    X, G = _frame_polys(model, pts, CHART_ORDER)
    polys, _ = _extract_data_polys(X, G)
    k1, k2 = polys["k1"], polys["k2"]
    rho2 = k1 * k1 + k2 * k2
    if np.any(rho2.value < DEGENERATE_ROTATION_TOL):
        raise ModelError("rotation is degenerate somewhere on the grid")
    from .jets import taylor_sqrt

    rho = taylor_sqrt(rho2)
    ca, sa = k1 / rho, k2 / rho
    order = ca.order
    Xr = [
        [ca * X[0][a].truncate(order) + sa * X[1][a].truncate(order) for a in range(3)],
        [ca * X[1][a].truncate(order) - sa * X[0][a].truncate(order) for a in range(3)],
        [X[2][a].truncate(order) for a in range(3)],
    ]
    Gr = [[G[a][b].truncate(order) for b in range(3)] for a in range(3)]
    rpolys, residuals = _extract_data_polys(Xr, Gr)
    worst = float(np.max(np.abs(residuals)))
    if worst > ADAPTED_TOL:
        raise NotAdaptedFrame(
            f"rotated frame is not adapted (residual {worst:.3e}); "
            f"k1, k2 must be constant along fibers for the rotation to stay adapted"
        )
    xv, xg = _frame_value_tables(Xr)
    jets = {n: _framejet_from_poly(rpolys[n], xv, xg) for n in DATA_NAMES}
    return IntegrabilityData(
        points=pts,
        provenance="extracted+rotated",
        bracket_residuals=residuals,
        **jets,
    )
