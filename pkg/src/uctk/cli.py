"""Command-line front end: model reports, locus tracing, undercompressive
intervals and surfaces, connection finding, simulations, and SVG plots.

All data outputs are deterministic: floats are rendered with 17
significant digits in both CSV and JSON, and every JSON document carries
a ``schema_version``.  Exit codes: 0 success, 2 validation error, 3
numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .capillarity import ViscosityMode
from .connections import (
    FieldParams,
    IntegrationLimits,
    default_section,
    find_saddle_saddle,
    resolve_connection,
    seed_from_line,
    sweep_uc_region,
    verify_triple,
)
from .corey import FluidParams, classify_umbilic, eigen, umbilic_point, viscosity_ratios
from .errors import NumericalError, UctkError, ValidationError
from .hugoniot import mixed_contact_state, solve_rh_partner, trace_hugoniot
from .reduced import InvariantLine, distinguished_states, mixed_contact_inside
from .simulator import SimConfig, extract_wave_groups, simulate
from .svgplot import TAG_COLORS, SvgFigure
from .uc_identity import build_surface_identity, uc_interval

SCHEMA_VERSION = 1


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _to_json(obj, indent=0) -> str:
    """Tiny deterministic JSON writer with fixed float formatting."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {_to_json(v, indent + 2)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(np.asarray(obj).tolist()) if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, np.floating, np.integer)) for v in seq)
        if flat:
            return "[" + ", ".join(_render_scalar(v) for v in seq) + "]"
        items = [f"{pad}  {_to_json(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    return _render_scalar(obj)


def _render_scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f) or math.isinf(f):
            return json.dumps(str(f))
        return _fmt(f)
    return json.dumps(str(v))


def write_json(path: str, obj: dict):
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    with open(path, "w", encoding="utf-8") as f:
        f.write(_to_json(obj))
        f.write("\n")


def write_csv(path: str, header: list[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValidationError(f"{what} needs {n} comma-separated values, got {text!r}")
    try:
        vals = [float(v) for v in parts]
    except ValueError:
        raise ValidationError(f"could not parse {what} from {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"{what} must be finite, got {text!r}")
    return vals


def _params(args) -> FluidParams:
    mu = _parse_floats(args.mu, 3, "--mu")
    cap = _parse_floats(args.cap, 2, "--cap") if getattr(args, "cap", None) else [1.0, 1.0]
    return FluidParams(mu[0], mu[1], mu[2], cap[0], cap[1])


def _mode(args) -> ViscosityMode:
    return (
        ViscosityMode.IDENTITY
        if args.matrix == "identity"
        else ViscosityMode.CAPILLARITY
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_model(args) -> int:
    p = _params(args)
    U = umbilic_point(p)
    e = eigen(U, p)
    info = {
        "mu": [p.mu_w, p.mu_o, p.mu_g],
        "cap": [p.c_ow, p.c_og],
        "umbilic": {
            "class": classify_umbilic(p).value,
            "point": [U[0], U[1]],
            "lambda": 0.5 * (e.lam_s + e.lam_f),
        },
        "viscosity_ratios": viscosity_ratios(p),
        "lines": {},
    }
    for vertex in ("G", "W", "O"):
        line = InvariantLine(vertex, p)
        ds = distinguished_states(line)
        info["lines"][vertex] = {
            "nu": line.nu,
            "vertex_state": list(line.vertex_state),
            "end_state": list(line.end_state),
            "mixed_contact_inside": mixed_contact_inside(line),
            **ds.as_dict(),
        }
    print(f"umbilic class: {info['umbilic']['class']}")
    print(
        "umbilic point: (%s, %s)  lambda=%s"
        % tuple(_fmt(v) for v in (U[0], U[1], info["umbilic"]["lambda"]))
    )
    for vertex, rec in info["lines"].items():
        print(f"line {vertex}: nu={_fmt(rec['nu'])} s_umbilic={_fmt(rec['s_umbilic'])}")
    if args.out:
        write_json(args.out, info)
    return 0


def cmd_hugoniot(args) -> int:
    p = _params(args)
    base = np.array(_parse_floats(args.base, 2, "--base"))
    if base.min() < 0 or base.sum() > 1.0 + 1e-12:
        raise ValidationError("--base must lie inside the saturation triangle")
    branches = trace_hugoniot(base, p, resolution=args.resolution)
    rows = []
    for k, b in enumerate(branches):
        for q, s, tag in zip(b.points, b.sigmas, b.tags):
            rows.append([str(k), q[0], q[1], s, tag.value])
    if args.csv:
        write_csv(args.csv, ["branch", "s_w", "s_o", "sigma", "tag"], rows)
    if args.out:
        write_json(
            args.out,
            {
                "base": [base[0], base[1]],
                "branches": [
                    {
                        "points": b.points,
                        "sigmas": b.sigmas,
                        "tags": [t.value for t in b.tags],
                    }
                    for b in branches
                ],
            },
        )
    print(f"{len(branches)} branches, {len(rows)} points")
    return 0


def cmd_uc_interval(args) -> int:
    p = _params(args)
    line = InvariantLine(args.line, p)
    iv = uc_interval(line, args.sM)
    out = {
        "line": args.line,
        "nu": line.nu,
        "s_right": iv.s_right,
        "s_slow": iv.s_slow,
        "s_fast": iv.s_fast,
        "case": iv.case_tag,
    }
    print(
        "s_slow=%s s_fast=%s (case %s)"
        % (_fmt(iv.s_slow), _fmt(iv.s_fast), iv.case_tag)
    )
    if args.out:
        write_json(args.out, out)
    return 0


def _surface_identity_payload(
    line: InvariantLine, n_m: int, with_compat: bool, resolution: int = 200
) -> dict:
    mixed_s = None
    if with_compat and mixed_contact_inside(line):
        mixed_s = mixed_contact_state(line, resolution=resolution)
    surf = build_surface_identity(line, n_m=n_m, mixed_contact_s=mixed_s)
    interior = []
    for cm, cp in zip(surf.curves_minus, surf.curves_plus):
        for a, b in zip(cm, cp):
            interior.append([a[0], a[1], b[0], b[1], a[2]])
    return {
        "nu": surf.nu,
        "regime": surf.regime,
        "interior": interior,
        "boundaries": {
            tag: {"minus": sides["minus"], "plus": sides["plus"]}
            for tag, sides in surf.boundaries.items()
        },
        "compat_loss": surf.compat_loss_points,
        "mixed_contact_s": mixed_s,
    }


def cmd_uc_surface(args) -> int:
    p = _params(args)
    vertices = ["G", "W", "O"] if args.line == "all" else [args.line]
    payload = {"matrix": args.matrix, "mu": [p.mu_w, p.mu_o, p.mu_g], "lines": {}}
    for vertex in vertices:
        line = InvariantLine(vertex, p)
        if args.matrix == "identity":
            payload["lines"][vertex] = _surface_identity_payload(
                line, args.n_m, args.compat_loss
            )
        else:
            fp = FieldParams(p, ViscosityMode.CAPILLARITY)
            seed = seed_from_line(line, None, fp, delta=args.delta)
            surf = sweep_uc_region(
                seed,
                h=args.h,
                delta=args.delta,
                fp=fp,
                max_cells=args.max_cells,
                max_boundary_points=args.max_boundary,
            )
            payload["lines"][vertex] = {
                "nu": line.nu,
                "interior": surf.interior_rows(),
                "boundaries": surf.boundaries(),
                "census": surf.tag_census(),
                "multivalued": len(surf.multivalued),
            }
        print(f"line {vertex}: done")
    if args.out:
        write_json(args.out, payload)
    return 0


def cmd_connect(args) -> int:
    p = _params(args)
    fp = FieldParams(p, _mode(args))
    Um = np.array(_parse_floats(args.left, 2, "--left"))
    guess = (
        np.array(_parse_floats(args.right_guess, 2, "--right-guess"))
        if args.right_guess
        else umbilic_point(p) + (umbilic_point(p) - Um)
    )
    if args.sigma_bracket:
        a, b = _parse_floats(args.sigma_bracket, 2, "--sigma-bracket")
        up_prev = solve_rh_partner(Um, a, p, guess)
        up_next = solve_rh_partner(Um, b, p, guess)
        if up_prev is None or up_next is None:
            raise NumericalError("no Hugoniot partner at a bracket endpoint")
        section = default_section(Um, 0.5 * (up_prev + up_next))
        trip = find_saddle_saddle(Um, up_prev, up_next, section, args.delta, fp)
    else:
        if args.sigma_guess is None:
            raise ValidationError("provide --sigma-bracket or --sigma-guess")
        trip = resolve_connection(Um, args.sigma_guess, guess, fp, args.delta)
        if trip is None:
            raise NumericalError("no saddle-saddle connection near the guess")
    checks = verify_triple(trip, fp, args.delta)
    out = {
        "left": trip.Um,
        "right": trip.Up,
        "sigma": trip.sigma,
        "verification": {
            k: (bool(v) if isinstance(v, (bool, np.bool_)) else v)
            for k, v in checks.items()
        },
    }
    print(
        "connection: U+=(%s, %s) sigma=%s"
        % (_fmt(trip.Up[0]), _fmt(trip.Up[1]), _fmt(trip.sigma))
    )
    if args.out:
        write_json(args.out, out)
    return 0


def _load_sim_config(path: str):
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as ex:
        raise ValidationError(f"cannot read config {path}: {ex}")
    required = ("left", "right", "mu")
    for key in required:
        if key not in raw:
            raise ValidationError(f"config is missing {key!r}")
    mu = raw["mu"]
    cap = raw.get("cap", [1.0, 1.0])
    if len(mu) != 3 or len(cap) != 2:
        raise ValidationError("mu needs 3 entries and cap needs 2")
    p = FluidParams(*[float(v) for v in mu], *[float(v) for v in cap])
    mode_txt = raw.get("mode", "capillarity")
    if mode_txt not in ("identity", "capillarity"):
        raise ValidationError(f"mode must be identity or capillarity, got {mode_txt!r}")
    cfg = SimConfig(
        left=np.array([float(v) for v in raw["left"]]),
        right=np.array([float(v) for v in raw["right"]]),
        dx=float(raw.get("dx", 0.01)),
        dt=float(raw.get("dt", 0.01)),
        t_final=float(raw.get("t_final", 100.0)),
        eps=float(raw.get("eps", 1.0)),
        mode=ViscosityMode.IDENTITY if mode_txt == "identity" else ViscosityMode.CAPILLARITY,
        half_width=(float(raw["half_width"]) if raw.get("half_width") is not None else None),
        newton_tol=float(raw.get("newton_tol", 1e-10)),
        newton_max=int(raw.get("newton_max", 30)),
        store_times=tuple(float(v) for v in raw.get("store_times", ())),
    )
    return cfg, p


def cmd_simulate(args) -> int:
    cfg, p = _load_sim_config(args.config)
    prof = simulate(cfg, p)
    if args.csv:
        write_csv(args.csv, ["t", "x", "v", "s_w", "s_o"], prof.rows())
    t = prof.times[-1]
    plateaus, groups = extract_wave_groups(
        prof.x, t, prof.final, plateau_tol=args.plateau_tol, min_width=args.min_width
    )
    summary = {
        "t_final": t,
        "n_cells": int(prof.x.size),
        "plateaus": [
            {"state": pl.state, "v_start": pl.v_start, "v_end": pl.v_end}
            for pl in plateaus
        ],
        "groups": [{"v_start": g.v_start, "v_end": g.v_end} for g in groups],
        "max_conservation_residual": max(prof.conservation_residuals or [0.0]),
    }
    print(
        f"{len(plateaus)} plateaus, {len(groups)} interior wave groups "
        f"(plus leading/trailing constants)"
    )
    if args.out:
        write_json(args.out, summary)
    return 0


def cmd_plot(args) -> int:
    kind = args.kind
    fig = SvgFigure(title=args.title or "")
    if kind == "profile":
        data = _read_csv(args.input)
        t_last = max(float(r[0]) for r in data)
        rows = [r for r in data if float(r[0]) == t_last]
        v = [float(r[2]) for r in rows]
        fig.xlabel, fig.ylabel = "x/t", "saturation"
        fig.polyline(zip(v, (float(r[3]) for r in rows)), color="#1f4fd0", label="s_w")
        fig.polyline(zip(v, (float(r[4]) for r in rows)), color="#d02a1f", label="s_o")
    elif kind == "triangle":
        fig.xlabel, fig.ylabel = "s_w", "s_o"
        fig.polyline([(0, 0), (1, 0), (0, 1), (0, 0)], color="#888888")
        if args.input.endswith(".json"):
            payload = _read_json(args.input)
            for vertex, rec in payload.get("lines", {}).items():
                pts = rec.get("interior", [])
                fig.scatter([(r[0], r[1]) for r in pts], color="#555555", radius=1.2)
                fig.scatter([(r[2], r[3]) for r in pts], color="#aaaaaa", radius=1.2)
                for tag, sides in rec.get("boundaries", {}).items():
                    rows = sides["minus"] if isinstance(sides, dict) else sides
                    fig.polyline(
                        [(r[0], r[1]) for r in rows],
                        color=TAG_COLORS.get(tag, "#000"),
                        label=f"{vertex}:{tag}",
                    )
        else:
            data = _read_csv(args.input)
            by_branch = {}
            for r in data:
                by_branch.setdefault(r[0], []).append((float(r[1]), float(r[2])))
            for k, pts in sorted(by_branch.items()):
                fig.polyline(pts, color="#1f4fd0")
    elif kind in ("speed", "wedge"):
        payload = _read_json(args.input)
        fig.xlabel, fig.ylabel = "s_w", "speed"
        for vertex, rec in payload.get("lines", {}).items():
            pts = rec.get("interior", [])
            fig.scatter([(r[0], r[4]) for r in pts], color="#cccccc", radius=1.0)
            for tag, sides in rec.get("boundaries", {}).items():
                rows = sides["minus"] if isinstance(sides, dict) else sides
                fig.polyline(
                    [(r[0], r[-1]) for r in rows],
                    color=TAG_COLORS.get(tag, "#000"),
                    label=f"{vertex}:{tag}",
                )
                rows_p = sides.get("plus") if isinstance(sides, dict) else None
                if rows_p is not None:
                    fig.polyline(
                        [(r[0], r[-1]) for r in rows_p],
                        color=TAG_COLORS.get(tag, "#000"),
                        dashed=True,
                    )
    else:
        raise ValidationError(f"unknown plot kind {kind!r}")
    fig.save(args.out)
    print(f"wrote {args.out}")
    return 0


def _read_csv(path: str):
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rd = csv.reader(f)
            next(rd)
            return [row for row in rd]
    except OSError as ex:
        raise ValidationError(f"cannot read {path}: {ex}")


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as ex:
        raise ValidationError(f"cannot read {path}: {ex}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="uctk",
        description="Undercompressive shock surfaces for three-phase Corey flow",
    )
    ap.add_argument("--json-errors", action="store_true", help="machine-readable errors on stderr")
    ap.add_argument("--version", action="version", version=f"uctk {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-errors", action="store_true", help="machine-readable errors on stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=lambda **kw: argparse.ArgumentParser(parents=[common], **kw))

    def add_common(sp):
        sp.add_argument("--mu", required=True, help="viscosities mu_w,mu_o,mu_g")
        sp.add_argument("--cap", help="capillary constants c_ow,c_og (default 1,1)")
        sp.add_argument("--out", help="JSON output path")

    sp = sub.add_parser("model", help="umbilic point, classification, distinguished states")
    add_common(sp)
    sp.set_defaults(func=cmd_model)

    sp = sub.add_parser("hugoniot", help="trace the Hugoniot locus of a base state")
    add_common(sp)
    sp.add_argument("--base", required=True, help="base state s_w,s_o")
    sp.add_argument("--resolution", type=int, default=400)
    sp.add_argument("--csv", help="CSV output path")
    sp.set_defaults(func=cmd_hugoniot)

    sp = sub.add_parser("uc-interval", help="closed-form undercompressive interval")
    add_common(sp)
    sp.add_argument("--line", required=True, choices=["G", "W", "O"])
    sp.add_argument("--sM", required=True, type=float, help="right-state effective saturation")
    sp.set_defaults(func=cmd_uc_interval)

    sp = sub.add_parser("uc-surface", help="undercompressive surface (identity or capillarity)")
    add_common(sp)
    sp.add_argument("--matrix", required=True, choices=["identity", "capillarity"])
    sp.add_argument("--line", default="all", choices=["G", "W", "O", "all"])
    sp.add_argument("--n-m", dest="n_m", type=int, default=64, help="right-state samples (identity)")
    sp.add_argument("--compat-loss", action="store_true", help="emit the compatibility-loss point set (identity)")
    sp.add_argument("--h", type=float, default=0.005, help="grid spacing (capillarity)")
    sp.add_argument("--delta", type=float, default=1e-5, help="connection gap target")
    sp.add_argument("--max-cells", type=int, default=400)
    sp.add_argument("--max-boundary", type=int, default=120)
    sp.set_defaults(func=cmd_uc_surface)

    sp = sub.add_parser("connect", help="find one saddle-saddle connection")
    add_common(sp)
    sp.add_argument("--matrix", required=True, choices=["identity", "capillarity"])
    sp.add_argument("--left", required=True, help="left state s_w,s_o")
    sp.add_argument("--sigma-bracket", help="speed bracket a,b with opposite gap signs")
    sp.add_argument("--sigma-guess", type=float)
    sp.add_argument("--right-guess", help="warm-start right state s_w,s_o")
    sp.add_argument("--delta", type=float, default=1e-6)
    sp.set_defaults(func=cmd_connect)

    sp = sub.add_parser("simulate", help="Crank-Nicolson Riemann simulation")
    sp.add_argument("--config", required=True, help="JSON run configuration")
    sp.add_argument("--csv", help="profile CSV output")
    sp.add_argument("--out", help="JSON summary output")
    sp.add_argument("--plateau-tol", type=float, default=0.2)
    sp.add_argument("--min-width", type=float, default=0.05)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("plot", help="SVG plot from emitted CSV/JSON")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--kind", required=True, choices=["triangle", "speed", "wedge", "profile"])
    sp.add_argument("--title", default="")
    sp.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as ex:
        _report_error(args, ex)
        return 2
    except UctkError as ex:
        _report_error(args, ex)
        return 3


def _report_error(args, ex: Exception):
    if getattr(args, "json_errors", False):
        sys.stderr.write(
            json.dumps({"error": type(ex).__name__, "message": str(ex)}) + "\n"
        )
    else:
        sys.stderr.write(f"error: {type(ex).__name__}: {ex}\n")


if __name__ == "__main__":
    sys.exit(main())
