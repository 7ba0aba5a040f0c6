"""Decision procedure for submersions from a space form of curvature c.

After rotating the frame so that k2 = 0, a space form pins the seven
curvature combinations to fixed values of c; their residuals a1..a7 gate
everything.  Consistent inputs then branch:

* k1 = 0 everywhere: the tension vanishes, the map is harmonic (and so
  biharmonic).  For c < 0 the base is the complex hyperbolic line CH1(4c);
  for c = 0 with sigma = 0 the total space splits off a timelike factor.
* k1 != 0: biharmonicity is impossible.  With f2 = 0 the constraints force
  sigma = c = 0 and the reduced system collapses to k1^3 = 0 (case I); with
  f2 != 0 the derived chain k1^2 + 3 sigma^2 + 3c = k1^2 + 7 sigma^2 + c =
  k1^2 + 15 sigma^2 + c = 0 has no nonzero solution (case II).

The dichotomies are exact but floating point is not, so branch decisions
use a zero band (|.| < 1e-10) and a violation band (|.| > 1e-6); inputs in
between are reported as indeterminate rather than silently branched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .biharmonic import tension
from .curvature import oneill_tensors
from .geometry import FrameModel, ModelError
from .jets import DomainError
from .submersion import (
    ConstancyReport,
    IntegrabilityData,
    NotAdaptedFrame,
    check_vertical_constancy,
    integrability_jets,
    jacobi_residual,
    rotate_frame,
)

VERDICT_SCHEMA_VERSION = 1

GATE_TOL = 1e-8        # space-form residual gate
ZERO_TOL = 1e-10       # "is zero" for branch decisions
VIOLATION_TOL = 1e-6   # "is definitely nonzero"
FLAG_TOL = 1e-8        # vanishing of the fundamental tensors

KIND_HARMONIC = "Harmonic"
KIND_NO_BIHARMONIC = "NoBiharmonicPossible"
KIND_INCONSISTENT = "InconsistentData"

CONSTRAINT_NAMES = ("a1", "a2", "a3", "a4", "a5", "a6", "a7")


@dataclass(frozen=True)
class SpaceFormInput:
    """Integrability data with k2 = 0 on a space form of curvature c,
    with the fiber-constancy report attached."""

    c: float
    data: IntegrabilityData
    constancy: ConstancyReport

    def __post_init__(self):
        k2max = float(np.max(np.abs(self.data.k2.value)))
        if k2max > ZERO_TOL:
            raise ModelError(
                f"space-form input needs k2 = 0 (max |k2| = {k2max:.3e}); "
                f"rotate the frame first"
            )


def prepare_space_form_input(model_or_data, c: float | None = None) -> SpaceFormInput:
    """Build a classifier input, rotating the frame when k2 is not yet zero."""
    if isinstance(model_or_data, FrameModel):
        if c is None:
            c = model_or_data.space_form_c
        data = integrability_jets(model_or_data)
    else:
        data = model_or_data
    if c is None:
        raise ModelError("a space-form curvature c is required")
    if float(np.max(np.abs(data.k2.value))) > ZERO_TOL:
        rot = rotate_frame(data)
        if rot.degenerate:
            raise ModelError(
                "cannot rotate: k1^2 + k2^2 is degenerate somewhere on the grid"
            )
        data = rot.data
    return SpaceFormInput(c=float(c), data=data, constancy=check_vertical_constancy(data))


def space_form_residuals(inp: SpaceFormInput) -> dict:
    """The seven constraint residuals a1..a7 per point, for data with
    k2 = 0 on a claimed space form of curvature c."""
    d = inp.data
    c = inp.c
    f1v, f2v, k1v, sv = d.f1.value, d.f2.value, d.k1.value, d.sigma.value
    return {
        "a1": -d.sigma.d[0] + 2.0 * k1v * sv,
        "a2": d.k1.d[0] - sv**2 - k1v**2 - c,
        "a3": k1v * f1v,
        "a4": d.f1.d[1] - d.f2.d[0] + f1v**2 + f2v**2 - 3.0 * sv**2 + c,
        "a5": d.sigma.d[1],
        "a6": d.k1.d[1],
        "a7": -(sv**2) - k1v * f2v - c,
    }


def harmonic_constraints_check(inp: SpaceFormInput) -> dict:
    """For k = 0 the space-form constraints reduce to

        b1: e1(sigma) = 0          b2: sigma^2 = -c
        b3: e2(f1) - e1(f2) + f1^2 + f2^2 - 3 sigma^2 = -c
        b4: e2(sigma) = 0

    b2 forces c <= 0; for c > 0 it is unsatisfiable over the reals."""
    d = inp.data
    c = inp.c
    kmax = max(
        float(np.max(np.abs(d.k1.value))), float(np.max(np.abs(d.k2.value)))
    )
    if kmax > GATE_TOL:
        raise ModelError(f"harmonic constraints need k = 0 (max |k| = {kmax:.3e})")
    f1v, f2v, sv = d.f1.value, d.f2.value, d.sigma.value
    b1 = float(np.max(np.abs(d.sigma.d[0])))
    b2 = float(np.max(np.abs(sv**2 + c)))
    b3 = float(
        np.max(np.abs(d.f1.d[1] - d.f2.d[0] + f1v**2 + f2v**2 - 3.0 * sv**2 + c))
    )
    b4 = float(np.max(np.abs(d.sigma.d[1])))
    c_admissible = c <= ZERO_TOL
    return {
        "b1_max": b1,
        "b2_max": b2,
        "b3_max": b3,
        "b4_max": b4,
        "requires_c_nonpositive": True,
        "c_admissible": bool(c_admissible),
        "all_satisfied": bool(
            c_admissible and max(b1, b2, b3, b4) < GATE_TOL
        ),
    }


@dataclass(frozen=True)
class VerdictFlags:
    fibers_totally_geodesic: bool
    horizontal_integrable: bool
    base_identification: str | None  # "CH1(4c)" | "E2-product" | None


@dataclass(frozen=True)
class Verdict:
    kind: str
    case: str | None
    evidence: dict
    flags: VerdictFlags

    def to_dict(self) -> dict:
        return {
            "schema_version": VERDICT_SCHEMA_VERSION,
            "kind": self.kind,
            "case": self.case,
            "evidence": dict(sorted(self.evidence.items())),
            "flags": {
                "fibers_totally_geodesic": self.flags.fibers_totally_geodesic,
                "horizontal_integrable": self.flags.horizontal_integrable,
                "base_identification": self.flags.base_identification,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def _finite(evidence: dict) -> dict:
    for k, v in evidence.items():
        if isinstance(v, float) and not np.isfinite(v):
            raise ModelError(f"non-finite evidence value for {k}")
    return evidence


def classify(model_or_input, c: float | None = None) -> Verdict:
    """Run the space-form decision procedure and return the verdict with its
    numerical evidence."""
    if isinstance(model_or_input, SpaceFormInput):
        inp = model_or_input
    else:
        inp = prepare_space_form_input(model_or_input, c)
    data = inp.data
    res = space_form_residuals(inp)
    res_max = {f"{n}_max": float(np.max(np.abs(r))) for n, r in res.items()}
    k1max = float(np.max(np.abs(data.k1.value)))
    f1max = float(np.max(np.abs(data.f1.value)))
    f2max = float(np.max(np.abs(data.f2.value)))
    sigmamax = float(np.max(np.abs(data.sigma.value)))
    tens = tension(data)
    tensors = oneill_tensors(data)

    evidence = dict(res_max)
    evidence.update(
        {
            "c": float(inp.c),
            "k1_max": k1max,
            "f1_max": f1max,
            "f2_max": f2max,
            "sigma_max": sigmamax,
            "sigma_sq_plus_c_max": float(np.max(np.abs(data.sigma.value**2 + inp.c))),
            "tension_max": tens.max_norm(),
            "e3_constancy_max": inp.constancy.max_abs,
            "jacobi_max": float(np.max(np.abs(jacobi_residual(data)))),
        }
    )
    flags = VerdictFlags(
        fibers_totally_geodesic=tensors.max_T() < FLAG_TOL,
        horizontal_integrable=tensors.max_A() < FLAG_TOL,
        base_identification=None,
    )

    worst_name = max(res_max, key=lambda n: res_max[n])
    if res_max[worst_name] >= GATE_TOL:
        evidence["worst_constraint"] = worst_name.removesuffix("_max")
        evidence["worst_residual"] = res_max[worst_name]
        return Verdict(KIND_INCONSISTENT, None, _finite(evidence), flags)

    if k1max < ZERO_TOL:
        base = None
        if inp.c < -ZERO_TOL:
            base = "CH1(4c)"
        elif abs(inp.c) <= ZERO_TOL and sigmamax < ZERO_TOL:
            base = "E2-product"
        flags = VerdictFlags(
            fibers_totally_geodesic=flags.fibers_totally_geodesic,
            horizontal_integrable=flags.horizontal_integrable,
            base_identification=base,
        )
        evidence.update(
            {f"harmonic_{k}": v for k, v in harmonic_constraints_check(inp).items()}
        )
        return Verdict(KIND_HARMONIC, None, _finite(evidence), flags)

    if k1max <= VIOLATION_TOL:
        evidence["indeterminate"] = "k1"
        return Verdict(KIND_INCONSISTENT, None, _finite(evidence), flags)

    # k1 is definitely nonzero; consistency (a3) then keeps f1 at zero
    if f1max > VIOLATION_TOL:
        evidence["worst_constraint"] = "a3"
        evidence["worst_residual"] = res_max["a3_max"]
        return Verdict(KIND_INCONSISTENT, None, _finite(evidence), flags)

    if f2max < ZERO_TOL:
        # case I: f1 = f2 = 0 forces sigma = c = 0, and the reduced system
        # collapses to k1^3 = 0, contradicting k1 != 0
        evidence.update(
            {
                "caseI_sigma_max": sigmamax,
                "caseI_c": float(inp.c),
                "k1_cubed_max": float(np.max(np.abs(data.k1.value**3))),
            }
        )
        return Verdict(KIND_NO_BIHARMONIC, "I", _finite(evidence), flags)

    if f2max > VIOLATION_TOL:
        # case II: the derived chain admits only k1 = sigma = c = 0
        k1v, sv, c_ = data.k1.value, data.sigma.value, inp.c
        evidence.update(
            {
                "chain_k1sq_3sigma2_3c_max": float(
                    np.max(np.abs(k1v**2 + 3.0 * sv**2 + 3.0 * c_))
                ),
                "chain_k1sq_7sigma2_c_max": float(
                    np.max(np.abs(k1v**2 + 7.0 * sv**2 + c_))
                ),
                "chain_k1sq_15sigma2_c_max": float(
                    np.max(np.abs(k1v**2 + 15.0 * sv**2 + c_))
                ),
            }
        )
        return Verdict(KIND_NO_BIHARMONIC, "II", _finite(evidence), flags)

    evidence["indeterminate"] = "f2"
    return Verdict(KIND_INCONSISTENT, None, _finite(evidence), flags)


# ---------------------------------------------------------------------------
# parameter sweeps

def scan(c_grid, family, points=None) -> list:
    """Cross a grid of curvatures with a family of data-mode models and
    record, per cell: the worst constraint residual, tension and bitension
    maxima, and the verdict.  Cell errors are recorded and the scan
    continues.  Output order is deterministic: c-major, family order."""
    from .biharmonic import bitension_closed_form

    rows = []
    for c in c_grid:
        for label, model in family:
            row = {
                "c": float(c),
                "label": label,
                "eq_residual_max": None,
                "worst_constraint": None,
                "tension_max": None,
                "bitension_max": None,
                "verdict": None,
                "error": None,
            }
            try:
                m = model
                if "c" in m.constants:
                    m = m.with_constants(c=float(c))
                data = integrability_jets(m, points)
                row["tension_max"] = tension(data).max_norm()
                row["bitension_max"] = bitension_closed_form(data).max_norm()
                verdict = classify(prepare_space_form_input(data, c))
                res = {
                    k: v
                    for k, v in verdict.evidence.items()
                    if k.endswith("_max") and k[:2] in CONSTRAINT_NAMES
                }
                worst = max(res, key=lambda n: res[n])
                row["eq_residual_max"] = res[worst]
                row["worst_constraint"] = worst.removesuffix("_max")
                row["verdict"] = verdict.kind
            except (DomainError, ModelError, NotAdaptedFrame, ValueError) as err:
                row["error"] = f"{type(err).__name__}: {err}"
            rows.append(row)
    return rows
