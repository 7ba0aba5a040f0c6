"""Charts, orthonormal frames and metric models on a Lorentzian 3-manifold.

A model is either given by a chart (three coordinate vector fields forming an
orthonormal frame of signature (+, +, -), third leg timelike and vertical)
or directly by integrability data.  The vertical leg is always the third
one; this is fixed, not configurable, to remove a whole class of sign
errors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .expr import Expr, eval_jet, eval_poly, eval_value, eval_values
from .jets import NVARS

# frame signature: g(e1,e1) = g(e2,e2) = +1, g(e3,e3) = -1
EPSILON = np.array([1.0, 1.0, -1.0])

ORTHONORMALITY_TOL = 1e-10
DATA_NAMES = ("f1", "f2", "k1", "k2", "sigma")


class ModelError(ValueError):
    """A chart or frame model that violates its construction contract."""


@dataclass(frozen=True)
class Chart:
    """A coordinate box with a deterministic grid of interior sample points.

    The default grid places points at interior fractions (i+1)/(n+1) of each
    axis, so a 3x3x3 grid samples the quarter points.
    """

    coords: tuple
    domain: tuple
    grid_shape: tuple = (3, 3, 3)

    def __post_init__(self):
        if len(self.coords) != NVARS or len(set(self.coords)) != NVARS:
            raise ModelError("chart needs three distinct coordinate names")
        if len(self.domain) != NVARS:
            raise ModelError("chart needs one interval per coordinate")
        for lo, hi in self.domain:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ModelError(f"degenerate interval [{lo}, {hi}]")
        if len(self.grid_shape) != NVARS or any(n < 1 for n in self.grid_shape):
            raise ModelError("grid shape must be three positive counts")

    def axis_points(self, axis: int) -> np.ndarray:
        lo, hi = self.domain[axis]
        n = self.grid_shape[axis]
        fr = (np.arange(n) + 1.0) / (n + 1.0)
        return lo + fr * (hi - lo)

    def sample_grid(self) -> np.ndarray:
        """All grid points, shape (B, 3), axis 0 slowest."""
        axes = [self.axis_points(a) for a in range(NVARS)]
        return np.array(list(itertools.product(*axes)))

    def contains(self, points, strict=True) -> bool:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        for a, (lo, hi) in enumerate(self.domain):
            if strict:
                if np.any(pts[:, a] <= lo) or np.any(pts[:, a] >= hi):
                    return False
            else:
                if np.any(pts[:, a] < lo) or np.any(pts[:, a] > hi):
                    return False
        return True

    def require_interior(self, points):
        if not self.contains(points, strict=True):
            raise ModelError("point outside the open chart domain")


@dataclass(frozen=True)
class VectorField:
    """A vector field given by its three components in the coordinate basis."""

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != NVARS:
            raise ModelError("vector field needs three components")

    def free_symbols(self) -> set:
        out = set()
        for c in self.coeffs:
            out |= c.free_symbols()
        return out

    def values(self, points, constants=None) -> np.ndarray:
        """Component values, shape (3, B)."""
        return np.stack([eval_values(c, points, constants) for c in self.coeffs])


def directional_derivative(X: VectorField, f: Expr, p, constants=None) -> float:
    """X(f) at p: contraction of X with the gradient of f."""
    xv = X.values(p, constants)[:, 0]
    return float(xv @ eval_jet(f, p, constants).grad)


def directional_derivative_jet(X: VectorField, f: Expr, p, constants=None):
    """X(f) at p together with the chart gradient of the scalar field X(f),
    so nested derivatives like X(X(f)) remain available.

    Returns (value, grad) with grad of shape (3,).
    """
    fp = eval_poly(f, p, constants, order=2)
    xp = [eval_poly(c, p, constants, order=1) for c in X.coeffs]
    grad_f = fp.grad[:, 0]
    hess_f = fp.hess[:, :, 0]
    xv = np.array([q.value[0] for q in xp])
    xg = np.stack([q.grad[:, 0] for q in xp])  # xg[a, b] = d_b X^a
    value = float(xv @ grad_f)
    grad = xg.T @ grad_f + hess_f @ xv
    return value, grad


def lie_bracket(X: VectorField, Y: VectorField, p, constants=None) -> np.ndarray:
    """[X, Y] at p in coordinate components."""
    xp = [eval_poly(c, p, constants, order=1) for c in X.coeffs]
    yp = [eval_poly(c, p, constants, order=1) for c in Y.coeffs]
    xv = np.array([q.value[0] for q in xp])
    yv = np.array([q.value[0] for q in yp])
    xg = np.stack([q.grad[:, 0] for q in xp])  # xg[a, b] = d_b X^a
    yg = np.stack([q.grad[:, 0] for q in yp])
    return yg @ xv - xg @ yv


def orthonormalizing_metric(frame) -> tuple:
    """The unique metric expressions that make the given frame orthonormal
    with signature (+, +, -).  g = F^{-T} eta F^{-1} where F has the frame
    components as columns; the inverse is built symbolically through the
    adjugate, so the result is exact wherever the frame is non-degenerate."""
    F = [[frame[i].coeffs[a] for i in range(3)] for a in range(3)]  # F[a][i]

    def minor(rows, cols):
        (r0, r1), (c0, c1) = rows, cols
        return F[r0][c0] * F[r1][c1] - F[r0][c1] * F[r1][c0]

    det = (
        F[0][0] * minor((1, 2), (1, 2))
        - F[0][1] * minor((1, 2), (0, 2))
        + F[0][2] * minor((1, 2), (0, 1))
    )
    others = [(1, 2), (0, 2), (0, 1)]
    # inv[i][a] = cofactor(a, i) / det
    inv = []
    for i in range(3):
        row = []
        for a in range(3):
            cof = minor(others[a], others[i])
            row.append((cof if (a + i) % 2 == 0 else -cof) / det)
        inv.append(row)
    g = []
    for a in range(3):
        row = []
        for b in range(3):
            s = None
            for i in range(3):
                term = inv[i][a] * inv[i][b]
                term = term if EPSILON[i] > 0 else -term
                s = term if s is None else s + term
            row.append(s)
        g.append(tuple(row))
    return tuple(g)


@dataclass(frozen=True)
class FrameModel:
    """A chart together with either an adapted orthonormal frame and its
    metric (chart mode) or the five integrability data as expressions over
    the chart coordinates (data mode).

    In data mode the frame legs act as the chart partial derivatives, so
    e_i(h) is the i-th partial of h.  When ``space_form_c`` is set the data
    must not involve the vertical coordinate (they are constant along
    fibers); this is checked symbolically at construction.
    """

    chart: Chart
    constants: dict = field(default_factory=dict)
    frame: tuple | None = None
    metric: tuple | None = None
    data: dict | None = None
    space_form_c: float | None = None
    name: str = ""

    def __post_init__(self):
        if (self.frame is None) == (self.data is None):
            raise ModelError("model needs exactly one of: frame, data")
        if self.mode == "chart":
            if len(self.frame) != 3:
                raise ModelError("frame needs three vector fields")
            if self.metric is None:
                object.__setattr__(self, "metric", orthonormalizing_metric(self.frame))
            self._check_symbols(
                [c for vf in self.frame for c in vf.coeffs]
                + [e for row in self.metric for e in row]
            )
            self._check_orthonormal()
        else:
            missing = [n for n in DATA_NAMES if n not in self.data]
            if missing:
                raise ModelError(f"data mode is missing {missing}")
            self._check_symbols([self.data[n] for n in DATA_NAMES])
            if self.space_form_c is not None:
                zname = self.chart.coords[2]
                for n in DATA_NAMES:
                    if zname in self.data[n].free_symbols():
                        raise ModelError(
                            f"space-form data must be constant along fibers, "
                            f"but {n} depends on '{zname}'"
                        )

    @property
    def mode(self) -> str:
        return "chart" if self.frame is not None else "data"

    def _check_symbols(self, exprs):
        allowed = set(self.chart.coords) | set(self.constants)
        for e in exprs:
            extra = e.free_symbols() - allowed
            if extra:
                raise ModelError(f"undeclared symbols {sorted(extra)} in '{e}'")

    def _check_orthonormal(self):
        pts = self.chart.sample_grid()
        gram = frame_gram(self, pts)
        target = np.zeros_like(gram)
        for i in range(3):
            target[i, i] = EPSILON[i]
        worst = float(np.max(np.abs(gram - target)))
        if worst > ORTHONORMALITY_TOL:
            raise ModelError(
                f"frame is not orthonormal for the given metric "
                f"(worst Gram deviation {worst:.3e})"
            )

    def with_constants(self, **overrides) -> "FrameModel":
        merged = dict(self.constants)
        unknown = [k for k in overrides if k not in merged]
        if unknown:
            raise ModelError(f"unknown constants {unknown}")
        merged.update(overrides)
        return FrameModel(
            chart=self.chart,
            constants=merged,
            frame=self.frame,
            metric=self.metric,
            data=self.data,
            space_form_c=self.space_form_c,
            name=self.name,
        )


def metric_at(model: FrameModel, p) -> np.ndarray:
    """Coordinate metric at p (chart mode) or the abstract frame metric
    diag(+1, +1, -1) (data mode)."""
    if model.mode == "data":
        return np.diag(EPSILON.copy())
    g = np.zeros((3, 3))
    for a in range(3):
        for b in range(a, 3):
            g[a, b] = g[b, a] = eval_value(model.metric[a][b], p, model.constants)
    return g


def frame_gram(model: FrameModel, points) -> np.ndarray:
    """Gram matrix g(e_i, e_j) at a batch of points, shape (3, 3, B)."""
    if model.mode != "chart":
        raise ModelError("frame Gram matrix needs a chart-mode model")
    xv = np.stack([vf.values(points, model.constants) for vf in model.frame])
    gv = np.zeros((3, 3, xv.shape[2]))
    for a in range(3):
        for b in range(a, 3):
            gv[a, b] = eval_values(model.metric[a][b], points, model.constants)
            gv[b, a] = gv[a, b]
    return np.einsum("abp,iap,jbp->ijp", gv, xv, xv)
