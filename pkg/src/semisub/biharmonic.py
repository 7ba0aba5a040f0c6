"""Tension and bitension of the submersion, by two independent routes.

The closed-form route evaluates the reduced system in the integrability
data.  The generic route runs the trace definition of the bitension with
the pullback connection of the base frame and the base curvature, term by
term.  The two share nothing beyond the raw frame derivatives of the data,
and their agreement on random data is the central correctness property of
this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import base_gauss_curvature, connection_closed_form
from .geometry import EPSILON, FrameModel
from .jets import FrameJet
from .submersion import IntegrabilityData, integrability_jets

K2_ZERO_TOL = 1e-12


class PreconditionViolation(ValueError):
    """An operation's stated precondition does not hold for the input."""


@dataclass(frozen=True)
class TensionVector:
    """Components of the tension field along the base frame; the trace
    computation collapses to (-k1, -k2)."""

    t1: np.ndarray
    t2: np.ndarray

    def norm(self) -> np.ndarray:
        return np.hypot(self.t1, self.t2)

    def max_norm(self) -> float:
        return float(np.max(self.norm()))


@dataclass(frozen=True)
class BitensionVector:
    """Components of the bitension field along the base frame; both vanish
    exactly where the submersion is biharmonic."""

    b1: np.ndarray
    b2: np.ndarray

    def max_norm(self) -> float:
        return float(np.max(np.abs(np.stack([self.b1, self.b2]))))


def _as_data(data) -> IntegrabilityData:
    if isinstance(data, FrameModel):
        return integrability_jets(data)
    return data


def _pullback_step(data, i, s1, s2):
    """One pullback covariant derivative along e_i of s1 eps1 + s2 eps2.
    The base connection rotates the frame with speed f1 (along e1) and f2
    (along e2); the vertical leg projects to zero, so only the coefficient
    derivatives survive there."""
    if i == 0:
        w = data.f1
    elif i == 1:
        w = data.f2
    else:
        w = FrameJet.constant(0.0, data.nb)
    u1 = s1.deriv(i) + w * s2
    u2 = s2.deriv(i) - w * s1
    return u1, u2


def tension(data) -> TensionVector:
    """trace(nabla dpi) summed over the frame with its signature weights.
    The horizontal terms cancel against the base connection and the vertical
    leg contributes d(pi)(nabla_{e3} e3); nothing here is hard-coded."""
    data = _as_data(data)
    gamma = connection_closed_form(data).gamma
    nb = data.nb
    wv = np.stack([data.f1.value, data.f2.value, np.zeros(nb)])
    t1 = np.zeros(nb)
    t2 = np.zeros(nb)
    for i in range(3):
        if i == 0:
            # nabla^pi_{e1} eps1 = -f1 eps2
            c1, c2 = np.zeros(nb), -wv[0]
        elif i == 1:
            # nabla^pi_{e2} eps2 = +f2 eps1
            c1, c2 = wv[1], np.zeros(nb)
        else:
            c1, c2 = np.zeros(nb), np.zeros(nb)  # dpi(e3) = 0
        t1 += EPSILON[i] * (c1 - gamma[i, i, 0])
        t2 += EPSILON[i] * (c2 - gamma[i, i, 1])
    return TensionVector(t1=t1, t2=t2)


def frame_laplacian(k: FrameJet, data) -> np.ndarray:
    """Laplacian of a scalar in the adapted frame,

        e1(e1 k) + e2(e2 k) - e3(e3 k) + e2(k) f1 - e1(k) f2
        - e1(k) k1 - e2(k) k2,

    the expansion of div(grad k) with grad k = e1(k) e1 + e2(k) e2 - e3(k) e3.
    """
    data = _as_data(data)
    if k.dd is None:
        raise PreconditionViolation("second frame derivatives of k are required")
    return (
        k.dd[0, 0]
        + k.dd[1, 1]
        - k.dd[2, 2]
        + k.d[1] * data.f1.value
        - k.d[0] * data.f2.value
        - k.d[0] * data.k1.value
        - k.d[1] * data.k2.value
    )


def bitension_closed_form(data) -> BitensionVector:
    """The closed-form bitension components.  Product terms such as
    e1(k2 f1) are taken of the product field, exactly as the closed system
    groups them; the generic oracle arbitrates the grouping."""
    data = _as_data(data)
    f1, f2, k1, k2 = data.f1, data.f2, data.k1, data.k2
    f1v, f2v, k1v, k2v = f1.value, f2.value, k1.value, k2.value
    KB = base_gauss_curvature(data)
    lap1 = frame_laplacian(k1, data)
    lap2 = frame_laplacian(k2, data)
    b1 = (
        -lap1
        - f1v * k2.d[0]
        - (k2 * f1).d[0]
        - f2v * k2.d[1]
        - (k2 * f2).d[1]
        + k1v * k2v * f1v
        + k2v**2 * f2v
        + k1v * (f1v**2 + f2v**2 - KB)
    )
    b2 = (
        -lap2
        + f1v * k1.d[0]
        + (k1 * f1).d[0]
        + f2v * k1.d[1]
        + (k1 * f2).d[1]
        - k1v * k2v * f2v
        - k1v**2 * f1v
        + k2v * (f1v**2 + f2v**2 - KB)
    )
    return BitensionVector(b1=b1, b2=b2)


def bitension_generic_oracle(data) -> BitensionVector:
    """The trace definition of the bitension, evaluated term by term:

        sum_i g(e_i,e_i) { nabla^pi_{e_i} nabla^pi_{e_i} tau
                           - nabla^pi_{nabla_{e_i} e_i} tau
                           - R^B(dpi(e_i), tau) dpi(e_i) }

    with tau = -k1 eps1 - k2 eps2, the pullback connection of the base frame
    and R^B(eps1, eps2) eps2 = K^B eps1.  This path never assumes the data
    are constant along fibers; the e3 terms are computed, not dropped."""
    data = _as_data(data)
    nb = data.nb
    t1 = -data.k1
    t2 = -data.k2
    gamma = connection_closed_form(data).gamma
    KB = base_gauss_curvature(data)
    wv = np.stack([data.f1.value, data.f2.value, np.zeros(nb)])

    # first pullback derivatives as frame jets (their own first derivatives
    # are needed for the second application)
    first = [_pullback_step(data, i, t1, t2) for i in range(3)]

    b1 = np.zeros(nb)
    b2 = np.zeros(nb)
    for i in range(3):
        u1, u2 = first[i]
        # second pullback derivative along the same leg, values only
        v1 = u1.d[i] + wv[i] * u2.value
        v2 = u2.d[i] - wv[i] * u1.value
        # derivative along nabla_{e_i} e_i, expanded over the frame
        c1 = np.zeros(nb)
        c2 = np.zeros(nb)
        for m in range(3):
            c1 += gamma[i, i, m] * first[m][0].value
            c2 += gamma[i, i, m] * first[m][1].value
        # base curvature term
        r1 = np.zeros(nb)
        r2 = np.zeros(nb)
        if i == 0:
            r2 = -t2.value * KB  # R^B(eps1, tau) eps1 = t2 R^B(eps1,eps2) eps1
        elif i == 1:
            r1 = -t1.value * KB  # R^B(eps2, tau) eps2 = t1 R^B(eps2,eps1) eps2
        b1 += EPSILON[i] * (v1 - c1 - r1)
        b2 += EPSILON[i] * (v2 - c2 - r2)
    return BitensionVector(b1=b1, b2=b2)


def reduced_residual(data):
    """The two biharmonicity residuals for data with k2 identically zero:

        r1 = -lap(k1) + k1 (f1^2 + f2^2 - K^B)
        r2 = f1 e1(k1) + e1(k1 f1) + f2 e2(k1) + e2(k1 f2) - k1^2 f1

    The submersion is biharmonic exactly when both vanish."""
    data = _as_data(data)
    if float(np.max(np.abs(data.k2.value))) >= K2_ZERO_TOL:
        raise PreconditionViolation(
            f"reduced residuals need k2 = 0 "
            f"(max |k2| = {float(np.max(np.abs(data.k2.value))):.3e})"
        )
    f1, f2, k1 = data.f1, data.f2, data.k1
    f1v, f2v, k1v = f1.value, f2.value, k1.value
    KB = base_gauss_curvature(data)
    r1 = -frame_laplacian(k1, data) + k1v * (f1v**2 + f2v**2 - KB)
    r2 = (
        f1v * k1.d[0]
        + (k1 * f1).d[0]
        + f2v * k1.d[1]
        + (k1 * f2).d[1]
        - k1v**2 * f1v
    )
    return r1, r2
