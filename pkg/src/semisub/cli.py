"""Command-line interface: model ingestion, command dispatch, reports.

Reports are built as JSON-ready dictionaries; the text rendering is a pure
function of that dictionary.  JSON output is byte-identical across runs for
identical inputs: keys are sorted, floats use the shortest round-trip
representation, and nothing time- or machine-dependent enters the payload
(wall time goes to stderr).

Exit codes: 0 on success, 2 when a classification verdict is
InconsistentData, 1 on usage or model errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .biharmonic import bitension_closed_form, bitension_generic_oracle, tension
from .classify import classify, harmonic_constraints_check, prepare_space_form_input, scan, space_form_residuals
from .curvature import (
    NAMED_COMPONENT_INDICES,
    ModeUnsupported,
    connection_closed_form,
    connection_koszul_oracle,
    curvature_components,
    named_curvature,
    space_form_residual_pointwise,
)
from .geometry import EPSILON, FrameModel, ModelError, frame_gram
from .jets import DomainError
from .models import (
    BUILTIN_NAMES,
    builtin_model,
    harmonic_family_model,
    load_model_file,
    model_from_dict,
    random_constant_family,
    tangent_profile_model,
)
from .submersion import (
    DATA_NAMES,
    NotAdaptedFrame,
    adaptedness_residuals,
    check_vertical_constancy,
    integrability_jets,
    jacobi_residual,
    rotate_frame,
)

REPORT_SCHEMA_VERSION = 1


class _ArgumentParser(argparse.ArgumentParser):
    # exit code 2 is reserved for InconsistentData verdicts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_set(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ModelError(f"--set expects name=value, got '{item}'")
        name, _, value = item.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ModelError(f"--set {name}: '{value}' is not a number") from None
    return out


def _load_model(args) -> FrameModel:
    overrides = _parse_set(args.set)
    if args.builtin:
        return model_from_dict(builtin_model(args.builtin), overrides)
    if args.model:
        return load_model_file(args.model, overrides)
    raise ModelError("a model is required: --model PATH or --builtin NAME")


def _base_report(command: str, model: FrameModel, args) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "model": {
            "name": model.name,
            "mode": model.mode,
            "source": args.builtin or args.model,
        },
        "constants": dict(sorted(model.constants.items())),
        "space_form_c": model.space_form_c,
        "points": [list(p) for p in model.chart.sample_grid()],
    }


def _maxabs(a) -> float:
    return float(np.max(np.abs(a)))


# ---------------------------------------------------------------------------
# commands

def cmd_verify(model, args) -> dict:
    report = _base_report("verify", model, args)
    pts = model.chart.sample_grid()
    rows = []
    summary = {}
    if model.mode == "chart":
        gram = frame_gram(model, pts)
        target = np.zeros_like(gram)
        for i in range(3):
            target[i, i] = EPSILON[i]
        gram_dev = np.max(np.abs(gram - target), axis=(0, 1))
        bracket = adaptedness_residuals(model, pts)
        bracket_dev = np.max(np.abs(bracket), axis=0)
        summary["orthonormality_max"] = _maxabs(gram_dev)
        summary["bracket_residual_max"] = _maxabs(bracket_dev)
    data = integrability_jets(model, pts)
    jac = jacobi_residual(data)
    constancy = check_vertical_constancy(data)
    for i, p in enumerate(pts):
        row = {"point": list(p), "jacobi": float(jac[i])}
        if model.mode == "chart":
            row["orthonormality"] = float(gram_dev[i])
            row["bracket_residual"] = float(bracket_dev[i])
        for j, n in enumerate(DATA_NAMES):
            row[f"e3_{n}"] = float(constancy.table[j, i])
        rows.append(row)
    summary["jacobi_max"] = _maxabs(jac)
    summary["e3_constancy_max"] = constancy.max_abs
    summary["fiber_constancy_ok"] = constancy.ok
    report["table"] = rows
    report["summary"] = summary
    report["columns"] = ["jacobi"] + [f"e3_{n}" for n in DATA_NAMES]
    return report


def cmd_connection(model, args) -> dict:
    report = _base_report("connection", model, args)
    pts = model.chart.sample_grid()
    data = integrability_jets(model, pts)
    table = connection_closed_form(data)
    rows = []
    oracle_diff = None
    if model.mode == "chart":
        oracle = connection_koszul_oracle(model, pts)
        oracle_diff = np.max(np.abs(table.gamma - oracle.gamma), axis=(0, 1, 2))
    for i, p in enumerate(pts):
        row = {
            "point": list(p),
            "gamma": [[list(table.gamma[a, b, :, i]) for b in range(3)] for a in range(3)],
        }
        for n in DATA_NAMES:
            row[n] = float(data.datum(n).value[i])
        if oracle_diff is not None:
            row["koszul_diff"] = float(oracle_diff[i])
        rows.append(row)
    report["table"] = rows
    report["summary"] = {
        "compatibility_residual": table.compatibility_residual(),
        "koszul_oracle": "chart mode only" if oracle_diff is None else "ok",
        "koszul_diff_max": None if oracle_diff is None else _maxabs(oracle_diff),
    }
    report["columns"] = list(DATA_NAMES) + (
        ["koszul_diff"] if oracle_diff is not None else []
    )
    return report


def cmd_curvature(model, args) -> dict:
    report = _base_report("curvature", model, args)
    pts = model.chart.sample_grid()
    data = integrability_jets(model, pts)
    comps = curvature_components(data)
    named = named_curvature(data)
    named_diff = max(
        _maxabs(named[n] - comps.R[idx]) for n, idx in NAMED_COMPONENT_INDICES.items()
    )
    c = args.c if args.c is not None else model.space_form_c
    residual = None
    if c is not None:
        residual = space_form_residual_pointwise(comps, float(c))
    rows = []
    for i, p in enumerate(pts):
        row = {"point": list(p)}
        for n in NAMED_COMPONENT_INDICES:
            row[n] = float(named[n][i])
        if residual is not None:
            row["space_form_residual"] = float(residual[i])
        rows.append(row)
    report["table"] = rows
    report["summary"] = {
        "antisymmetry_residual": comps.antisymmetry_residual(),
        "pair_symmetry_residual": comps.pair_symmetry_residual(),
        "first_bianchi_residual": comps.first_bianchi_residual(),
        "named_vs_generic_max": named_diff,
        "space_form_c": None if c is None else float(c),
        "space_form_residual_max": None if residual is None else _maxabs(residual),
    }
    report["columns"] = list(NAMED_COMPONENT_INDICES) + (
        ["space_form_residual"] if residual is not None else []
    )
    return report


def cmd_tension(model, args) -> dict:
    report = _base_report("tension", model, args)
    pts = model.chart.sample_grid()
    data = integrability_jets(model, pts)
    t = tension(data)
    rows = [
        {
            "point": list(p),
            "t1": float(t.t1[i]),
            "t2": float(t.t2[i]),
            "norm": float(t.norm()[i]),
        }
        for i, p in enumerate(pts)
    ]
    report["table"] = rows
    report["summary"] = {
        "tension_max": t.max_norm(),
        "tension_min": float(np.min(t.norm())),
        "harmonic": bool(t.max_norm() < 1e-10),
    }
    report["columns"] = ["t1", "t2", "norm"]
    return report


def cmd_bitension(model, args) -> dict:
    report = _base_report("bitension", model, args)
    pts = model.chart.sample_grid()
    data = integrability_jets(model, pts)
    t = tension(data)
    closed = bitension_closed_form(data)
    oracle = bitension_generic_oracle(data)
    diff = np.maximum(np.abs(closed.b1 - oracle.b1), np.abs(closed.b2 - oracle.b2))
    rows = [
        {
            "point": list(p),
            "b1": float(closed.b1[i]),
            "b2": float(closed.b2[i]),
            "oracle_diff": float(diff[i]),
            "tension_norm": float(t.norm()[i]),
        }
        for i, p in enumerate(pts)
    ]
    report["table"] = rows
    report["summary"] = {
        "bitension_max": closed.max_norm(),
        "oracle_diff_max": _maxabs(diff),
        "tension_max": t.max_norm(),
        "biharmonic": bool(closed.max_norm() < 1e-8),
        "proper_biharmonic": bool(
            closed.max_norm() < 1e-8 and t.max_norm() > 1e-6
        ),
    }
    report["columns"] = ["b1", "b2", "oracle_diff", "tension_norm"]
    return report


def cmd_classify(model, args) -> dict:
    report = _base_report("classify", model, args)
    c = args.c if args.c is not None else model.space_form_c
    if c is None:
        raise ModelError("classify needs a space-form curvature: --c or space_form_c")
    data = integrability_jets(model)
    rotated = False
    if _maxabs(data.k2.value) > 1e-10:
        rot = rotate_frame(data)
        if rot.degenerate:
            raise ModelError("cannot rotate: k1^2 + k2^2 degenerate on the grid")
        data = rot.data
        rotated = True
    inp = prepare_space_form_input(data, float(c))
    verdict = classify(inp)
    res = space_form_residuals(inp)
    rows = []
    for i, p in enumerate(inp.data.points):
        row = {"point": list(p)}
        for n, r in res.items():
            row[n] = float(r[i])
        rows.append(row)
    report["table"] = rows
    report["summary"] = {
        "rotated": rotated,
        "kind": verdict.kind,
        "case": verdict.case,
    }
    report["verdict"] = verdict.to_dict()
    report["columns"] = list(res)
    return report


_FAMILIES = ("constant", "tangent", "harmonic")


def _build_family(name: str, n: int, seed: int):
    if name == "constant":
        return random_constant_family(n, seed)
    if name == "tangent":
        return [("tangent-profile", tangent_profile_model())]
    if name == "harmonic":
        return [("harmonic-profile", harmonic_family_model())]
    raise ModelError(f"unknown family '{name}' (known: {', '.join(_FAMILIES)})")


def cmd_scan(args) -> dict:
    try:
        c_grid = [float(v) for v in args.c_grid.split(",") if v.strip()]
    except ValueError:
        raise ModelError(f"--c-grid: '{args.c_grid}' is not a comma list of numbers")
    family = _build_family(args.family, args.n, args.seed)
    rows = scan(c_grid, family)
    counts = {}
    for row in rows:
        key = row["verdict"] or ("error" if row["error"] else "none")
        counts[key] = counts.get(key, 0) + 1
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": "scan",
        "family": args.family,
        "n": args.n,
        "seed": args.seed,
        "c_grid": c_grid,
        "table": rows,
        "summary": {"cells": len(rows), "verdict_counts": dict(sorted(counts.items()))},
        "columns": [
            "c",
            "label",
            "eq_residual_max",
            "worst_constraint",
            "tension_max",
            "bitension_max",
            "verdict",
            "error",
        ],
    }


# ---------------------------------------------------------------------------
# rendering and dispatch

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v: .6e}"
    if v is None:
        return "-"
    return str(v)


def render_text(report: dict) -> str:
    """Human rendering; a pure function of the JSON report."""
    lines = [f"semisub {report['command']}"]
    if "model" in report:
        m = report["model"]
        lines.append(f"model: {m['name'] or m['source']} (mode: {m['mode']})")
        if report.get("constants"):
            consts = ", ".join(f"{k}={v}" for k, v in report["constants"].items())
            lines.append(f"constants: {consts}")
    if report.get("space_form_c") is not None:
        lines.append(f"space_form_c: {report['space_form_c']}")
    cols = report.get("columns", [])
    table = report.get("table", [])
    if table and cols:
        has_point = "point" in table[0]
        header = (["point"] if has_point else []) + cols
        widths = [max(len(h), 14) for h in header]
        lines.append("")
        lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for row in table:
            cells = []
            if has_point:
                cells.append(
                    "(" + ",".join(f"{x:.3g}" for x in row["point"]) + ")"
                )
            for cname in cols:
                cells.append(_fmt(row.get(cname)))
            lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    if report.get("summary"):
        lines.append("")
        lines.append("summary:")
        for k, v in report["summary"].items():
            lines.append(f"  {k}: {_fmt(v)}")
    if report.get("verdict"):
        v = report["verdict"]
        lines.append("")
        lines.append(f"verdict: {v['kind']}" + (f" (case {v['case']})" if v["case"] else ""))
        flags = v["flags"]
        lines.append(
            "flags: fibers_totally_geodesic="
            + str(flags["fibers_totally_geodesic"])
            + ", horizontal_integrable="
            + str(flags["horizontal_integrable"])
            + ", base_identification="
            + str(flags["base_identification"])
        )
    return "\n".join(lines) + "\n"


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="semisub",
        description=(
            "Connection, curvature, tension and bitension fields for "
            "semi-Riemannian submersions from Lorentzian 3-manifolds, and the "
            "space-form biharmonicity classification."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", metavar="PATH", help="model JSON file")
    common.add_argument(
        "--builtin",
        metavar="NAME",
        help=f"built-in model ({', '.join(BUILTIN_NAMES)})",
    )
    common.add_argument(
        "--set",
        metavar="K=V",
        action="append",
        help="override a declared constant (repeatable)",
    )
    common.add_argument("--c", type=float, default=None, help="space-form curvature")
    common.add_argument("--json", action="store_true", help="emit the JSON report")
    common.add_argument("--out", metavar="PATH", help="write the JSON report to a file")

    for name, doc in (
        ("verify", "structure equations, orthonormality, frame Jacobi relation, fiber constancy"),
        ("connection", "closed-form connection table, with the Koszul oracle diff in chart mode"),
        ("curvature", "named curvature components and the space-form residual"),
        ("tension", "tension field components"),
        ("bitension", "bitension field, closed form against the generic oracle"),
        ("classify", "space-form biharmonicity verdict (rotates the frame when k2 != 0)"),
    ):
        sub.add_parser(name, parents=[common], help=doc)

    scan_p = sub.add_parser(
        "scan", parents=[common], help="sweep a data family across space-form curvatures"
    )
    scan_p.add_argument("--c-grid", default="0.25,0.5,1,2", metavar="LIST")
    scan_p.add_argument("--family", default="constant", metavar="NAME")
    scan_p.add_argument("--n", type=int, default=25)
    scan_p.add_argument("--seed", type=int, default=0)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.command == "scan":
            report = cmd_scan(args)
        else:
            model = _load_model(args)
            handler = {
                "verify": cmd_verify,
                "connection": cmd_connection,
                "curvature": cmd_curvature,
                "tension": cmd_tension,
                "bitension": cmd_bitension,
                "classify": cmd_classify,
            }[args.command]
            report = handler(model, args)
    except (ModelError, ModeUnsupported, NotAdaptedFrame, DomainError, OSError) as err:
        print(f"semisub: error: {err}", file=sys.stderr)
        return 1
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    payload = render_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(payload)
    if args.json:
        sys.stdout.write(payload)
    else:
        sys.stdout.write(render_text(report))
    print(f"elapsed: {elapsed_ms:.1f} ms", file=sys.stderr)
    verdict = report.get("verdict")
    if verdict and verdict["kind"] == "InconsistentData":
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
