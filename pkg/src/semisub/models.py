"""Model files, built-in models and synthetic model generators.

A model file is a JSON document (schema version 1, documented in
docs/model-schema.md):

    {
      "schema_version": 1,
      "name": "...",
      "mode": "chart" | "data",
      "chart": {"coords": [c1, c2, c3],
                "domain": [[lo, hi], [lo, hi], [lo, hi]],
                "grid": [n1, n2, n3]},          # optional, default 3x3x3
      "constants": {"c": 1.0, ...},             # optional
      "frame":  [[e1x, e1y, e1z], ...],         # chart mode, expression text
      "metric": [[g11, ...], ...],              # chart mode, optional
      "data":   {"f1": ..., "f2": ..., "k1": ..., "k2": ..., "sigma": ...},
      "space_form_c": -1.0                      # optional, data mode
    }

Expressions are parsed against the declared coordinates and constants.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import numpy as np

from . import expr as ex
from .expr import Num, Sym, parse
from .geometry import Chart, FrameModel, ModelError, VectorField, orthonormalizing_metric

MODEL_SCHEMA_VERSION = 1
BUILTIN_NAMES = ("example1", "flat-product", "constant-data")


class UnknownModel(ModelError):
    """No built-in model with the requested name."""


class ModelFileError(ModelError):
    """A model document that does not match the schema."""


_BUILTINS = {
    # product chart with a fiber-scaled timelike leg; the profile makes the
    # submersion proper biharmonic for every parameter value c != 0
    "example1": {
        "schema_version": 1,
        "name": "example1",
        "mode": "chart",
        "chart": {
            "coords": ["x", "y", "z"],
            "domain": [[0.5, 3.0], [-1.0, 1.0], [-1.0, 1.0]],
            "grid": [3, 3, 3],
        },
        "constants": {"c": 1.0},
        "frame": [
            ["1", "0", "0"],
            ["0", "1", "0"],
            ["0", "0", "exp(c*x)/(1 - exp(c*x))^2"],
        ],
        "metric": [
            ["1", "0", "0"],
            ["0", "1", "0"],
            ["0", "0", "-(1 - exp(c*x))^4/exp(2*c*x)"],
        ],
    },
    "flat-product": {
        "schema_version": 1,
        "name": "flat-product",
        "mode": "chart",
        "chart": {
            "coords": ["x", "y", "z"],
            "domain": [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
            "grid": [3, 3, 3],
        },
        "constants": {},
        "frame": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
        "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "-1"]],
        "space_form_c": 0.0,
    },
    "constant-data": {
        "schema_version": 1,
        "name": "constant-data",
        "mode": "data",
        "chart": {
            "coords": ["x", "y", "z"],
            "domain": [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
            "grid": [3, 3, 3],
        },
        "constants": {"a1": 0.0, "a2": 0.0, "a3": 0.0, "a4": 0.0, "a5": 0.0},
        "data": {"f1": "a1", "f2": "a2", "k1": "a3", "k2": "a4", "sigma": "a5"},
    },
}


def builtin_model(name: str) -> dict:
    """A fresh copy of the named built-in model document."""
    try:
        return copy.deepcopy(_BUILTINS[name])
    except KeyError:
        raise UnknownModel(
            f"unknown built-in model '{name}' (known: {', '.join(BUILTIN_NAMES)})"
        ) from None


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ModelFileError(f"{where}: missing '{key}'")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise ModelFileError(f"{where}: '{key}' has the wrong type")
    return val


def model_from_dict(doc: dict, constants_override: dict | None = None) -> FrameModel:
    """Validate a model document and build the runtime model."""
    version = _require(doc, "schema_version", int, "model")
    if version != MODEL_SCHEMA_VERSION:
        raise ModelFileError(f"unsupported schema_version {version}")
    mode = _require(doc, "mode", str, "model")
    if mode not in ("chart", "data"):
        raise ModelFileError(f"mode must be 'chart' or 'data', not '{mode}'")
    chart_doc = _require(doc, "chart", dict, "model")
    coords = tuple(_require(chart_doc, "coords", list, "chart"))
    domain = tuple(
        (float(lo), float(hi)) for lo, hi in _require(chart_doc, "domain", list, "chart")
    )
    grid = tuple(chart_doc.get("grid", (3, 3, 3)))
    chart = Chart(coords=coords, domain=domain, grid_shape=grid)

    constants = {str(k): float(v) for k, v in doc.get("constants", {}).items()}
    if constants_override:
        unknown = [k for k in constants_override if k not in constants]
        if unknown:
            raise ModelFileError(f"cannot override undeclared constants {unknown}")
        constants.update({k: float(v) for k, v in constants_override.items()})
    cnames = tuple(constants)

    def parse_one(text, where):
        if not isinstance(text, str):
            raise ModelFileError(f"{where}: expression must be text")
        return parse(text, coords, cnames)

    name = str(doc.get("name", ""))
    space_form_c = doc.get("space_form_c")
    if space_form_c is not None:
        space_form_c = float(space_form_c)

    if mode == "chart":
        frame_doc = _require(doc, "frame", list, "model")
        if len(frame_doc) != 3 or any(len(row) != 3 for row in frame_doc):
            raise ModelFileError("frame must be three rows of three expressions")
        frame = tuple(
            VectorField(tuple(parse_one(t, f"frame[{i}]") for t in row))
            for i, row in enumerate(frame_doc)
        )
        metric = None
        if "metric" in doc:
            metric_doc = doc["metric"]
            if len(metric_doc) != 3 or any(len(row) != 3 for row in metric_doc):
                raise ModelFileError("metric must be a 3x3 array of expressions")
            metric = tuple(
                tuple(parse_one(t, f"metric[{a}]") for t in row)
                for a, row in enumerate(metric_doc)
            )
        return FrameModel(
            chart=chart,
            constants=constants,
            frame=frame,
            metric=metric,
            space_form_c=space_form_c,
            name=name,
        )

    data_doc = _require(doc, "data", dict, "model")
    data = {k: parse_one(v, f"data.{k}") for k, v in data_doc.items()}
    return FrameModel(
        chart=chart,
        constants=constants,
        data=data,
        space_form_c=space_form_c,
        name=name,
    )


def load_model_file(path, constants_override: dict | None = None) -> FrameModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFileError(f"{path}: not valid JSON ({err})") from None
    if not isinstance(doc, dict):
        raise ModelFileError(f"{path}: top level must be an object")
    return model_from_dict(doc, constants_override)


# ---------------------------------------------------------------------------
# synthetic generators (tests and demonstrations)

def _x(coords):
    return Sym(coords[0], 0)


def _y(coords):
    return Sym(coords[1], 1)


def _z(coords):
    return Sym(coords[2], 2)


def _smooth2d(rng, coords, amp):
    """A small smooth function of the two horizontal coordinates."""
    x, y = _x(coords), _y(coords)
    a, b, c, d = rng.uniform(-1.0, 1.0, size=4)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    trig = ex.Call("sin", Num(round(a, 3)) * x + Num(round(b, 3)) * y + Num(round(phase, 3)))
    return Num(amp) * (trig + Num(round(c, 3)) * x + Num(round(d, 3)) * y)


def _smooth3d(rng, coords, amp, z_free=False):
    s = _smooth2d(rng, coords, amp)
    if z_free:
        return s
    e = rng.uniform(-1.0, 1.0)
    return s + Num(amp) * Num(round(e, 3)) * _z(coords)


def random_adapted_frame_model(
    seed: int,
    z_free_vertical_data: bool = False,
    amp: float = 0.15,
    name: str = "",
) -> FrameModel:
    """A random genuinely adapted orthonormal frame on a box chart.

    The two horizontal legs are basic (their horizontal components depend
    only on x, y), the third leg is a rescaled vertical coordinate field,
    and the metric is constructed symbolically to make the frame orthonormal
    with signature (+, +, -).  With ``z_free_vertical_data`` the fiber
    components are independent of z as well, which keeps k1, k2 constant
    along fibers (needed for rotation round trips)."""
    rng = np.random.default_rng(seed)
    coords = ("x", "y", "z")
    one = Num(1.0)
    a = one + _smooth2d(rng, coords, amp)
    b = _smooth2d(rng, coords, amp)
    c = _smooth2d(rng, coords, amp)
    d = one + _smooth2d(rng, coords, amp)
    u = _smooth3d(rng, coords, amp, z_free=z_free_vertical_data)
    v = _smooth3d(rng, coords, amp, z_free=z_free_vertical_data)
    w = ex.Call("exp", _smooth3d(rng, coords, amp, z_free=z_free_vertical_data))
    zero = Num(0.0)
    frame = (
        VectorField((a, b, u)),
        VectorField((c, d, v)),
        VectorField((zero, zero, w)),
    )
    chart = Chart(coords=coords, domain=((-1.0, 1.0),) * 3)
    return FrameModel(
        chart=chart,
        constants={},
        frame=frame,
        metric=orthonormalizing_metric(frame),
        name=name or f"random-adapted-{seed}",
    )


def constant_data_chart_model(k1: float, k2: float, sigma: float) -> FrameModel:
    """A chart realization of constant integrability data (f1 = f2 = 0).

    Requires k1 != 0: the vertical rescaling is exp(k1 x + k2 y) and the
    second leg picks up a fiber shear that produces the requested sigma."""
    if abs(k1) < 1e-8:
        raise ModelError("the constant-data realization needs k1 != 0")
    coords = ("x", "y", "z")
    x, y = Sym(coords[0], 0), Sym(coords[1], 1)
    w = ex.Call("exp", Num(float(k1)) * x + Num(float(k2)) * y)
    shear = Num(-2.0 * float(sigma) / float(k1)) * w
    zero, one = Num(0.0), Num(1.0)
    frame = (
        VectorField((one, zero, zero)),
        VectorField((zero, one, shear)),
        VectorField((zero, zero, w)),
    )
    chart = Chart(coords=coords, domain=((-1.0, 1.0),) * 3)
    return FrameModel(
        chart=chart,
        constants={},
        frame=frame,
        metric=orthonormalizing_metric(frame),
        name=f"constant-data-chart({k1},{k2},{sigma})",
    )


# ---------------------------------------------------------------------------
# data-mode families for scans

def constant_data_model(f1, f2, k1, k2, sigma, space_form_c=None, grid=(1, 1, 1)):
    doc = builtin_model("constant-data")
    doc["constants"] = {
        "a1": float(f1),
        "a2": float(f2),
        "a3": float(k1),
        "a4": float(k2),
        "a5": float(sigma),
    }
    doc["chart"]["grid"] = list(grid)
    if space_form_c is not None:
        doc["space_form_c"] = float(space_form_c)
    return model_from_dict(doc)


def random_constant_family(n: int, seed: int, scale: float = 2.0):
    """Random constant-data cells for sweeps."""
    rng = np.random.default_rng(seed)
    fam = []
    for i in range(n):
        vals = rng.uniform(-scale, scale, size=5)
        fam.append((f"const-{i}", constant_data_model(*vals)))
    return fam


def tangent_profile_model(grid=(5, 1, 1)) -> FrameModel:
    """Data satisfying all seven space-form constraints for c > 0:
    k1 = sqrt(c) tan(sqrt(c) x), f2 = -sqrt(c) cos / sin, f1 = sigma = k2 = 0.
    The domain keeps sqrt(c) x inside (0, pi/2) for c up to about 4.5."""
    doc = {
        "schema_version": 1,
        "name": "tangent-profile",
        "mode": "data",
        "chart": {
            "coords": ["x", "y", "z"],
            "domain": [[0.1, 0.65], [-1.0, 1.0], [-1.0, 1.0]],
            "grid": list(grid),
        },
        "constants": {"c": 1.0},
        "data": {
            "f1": "0",
            "f2": "-sqrt(c)*cos(sqrt(c)*x)/sin(sqrt(c)*x)",
            "k1": "sqrt(c)*sin(sqrt(c)*x)/cos(sqrt(c)*x)",
            "k2": "0",
            "sigma": "0",
        },
    }
    return model_from_dict(doc)


def harmonic_model(c: float, grid=(2, 2, 2)) -> FrameModel:
    """Consistent harmonic data on a space form with c <= 0: k = 0,
    sigma = sqrt(-c), constant f with f1^2 + f2^2 = -4c."""
    if c > 0:
        raise ModelError("harmonic space-form data needs c <= 0")
    sigma = math.sqrt(-c)
    f1 = 2.0 * math.sqrt(-c)
    return constant_data_model(f1, 0.0, 0.0, 0.0, sigma, space_form_c=c, grid=grid)


def harmonic_family_model(grid=(2, 2, 2)) -> FrameModel:
    """The same harmonic data with c left as a bound constant, for sweeps;
    sqrt(-c) raises a domain error for c > 0, which a scan records."""
    doc = {
        "schema_version": 1,
        "name": "harmonic-profile",
        "mode": "data",
        "chart": {
            "coords": ["x", "y", "z"],
            "domain": [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
            "grid": list(grid),
        },
        "constants": {"c": -1.0},
        "data": {
            "f1": "2*sqrt(-c)",
            "f2": "0",
            "k1": "0",
            "k2": "0",
            "sigma": "sqrt(-c)",
        },
    }
    return model_from_dict(doc)
