"""Command-line front end: file-based inputs, deterministic JSON/CSV on stdout.

Exit codes: 0 success, 1 data or validation error (diagnostic on stderr),
2 usage error.  Figures are written to files via ``--plot`` and never touch
stdout, so identical inputs always produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import dataclass

import numpy as np

from . import __version__, fitkit, layout, quantize, scaffold
from .errors import InputError, ToolkitError


@dataclass(frozen=True)
class CommandResult:
    exit_code: int
    stdout: str
    diagnostics: str


def _json_dump(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _parse_lengths(spec: str) -> list[float]:
    """Length list: 'lo:hi:step' (inclusive) or comma-separated values."""
    try:
        if ":" in spec:
            lo_s, hi_s, step_s = spec.split(":")
            lo, hi, step = float(lo_s), float(hi_s), float(step_s)
            if step <= 0 or hi < lo:
                raise ValueError
            return [float(x) for x in np.arange(lo, hi + 1e-9, step)]
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--lengths: expected 'lo:hi:step' or comma list, got {spec!r}") from None


def _parse_range(spec: str) -> tuple[float, float]:
    try:
        lo_s, hi_s = spec.split(":")
        return float(lo_s), float(hi_s)
    except ValueError:
        raise InputError(f"--range: expected 'lo:hi', got {spec!r}") from None


def _read_csv_columns(path: str, header: list[str]) -> list[np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty CSV") from None
        if [c.strip() for c in first] != header:
            raise InputError(f"{path}: expected header {','.join(header)!r}, got {','.join(first)!r}")
        columns: list[list[float]] = [[] for _ in header]
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {i}: expected {len(header)} columns, got {len(row)}")
            for col, value in zip(columns, row):
                try:
                    col.append(float(value))
                except ValueError:
                    raise InputError(f"{path}: line {i}: non-numeric value {value!r}") from None
    if not columns[0]:
        raise InputError(f"{path}: no data rows")
    return [np.asarray(c) for c in columns]


def _linear_fit_json(fit: fitkit.LinearFit) -> dict:
    return {
        "model": "linear",
        "slope": fit.slope,
        "intercept": fit.intercept,
        "slope_stderr": fit.slope_stderr,
        "intercept_stderr": fit.intercept_stderr,
        "r_squared": fit.r_squared,
        "converged": True,
        "residual_norm": fit.residual_norm,
    }


# ---------------------------------------------------------------------------
# Subcommand implementations (each returns the stdout payload)
# ---------------------------------------------------------------------------


def _cmd_quantize(args) -> str:
    net, squids = quantize.load_design(args.design)
    if not squids:
        raise InputError(f"{args.design}: 'squids' must list at least one qubit")
    report = quantize.derive_design(net, squids)
    if args.plot:
        from . import plots

        plots.save_design_figure(args.plot, report)
    return _json_dump(report.to_dict())


def _cmd_scaffold_sim(args) -> str:
    edge = scaffold.load_profile_csv(args.edge)
    profile = scaffold.simulate_scaffold(edge, args.length)
    if args.plot:
        from . import plots

        plots.save_profile_figure(args.plot, {"edge": edge, "scaffold": profile})
    return scaffold.format_profile_csv(profile)


def _cmd_scaffold_sweep(args) -> str:
    edge = scaffold.load_profile_csv(args.edge)
    lengths = _parse_lengths(args.lengths)
    rows = scaffold.sweep_lengths(edge, lengths, args.slope_tol, args.min_span)
    if args.plot:
        from . import plots

        plots.save_sweep_figure(args.plot, rows)
    return scaffold.format_sweep_csv(rows)


def _cmd_scaffold_grayscale(args) -> str:
    profile = scaffold.grayscale_profile(args.height, args.length, args.samples)
    if args.plot:
        from . import plots

        plots.save_profile_figure(args.plot, {"grayscale": profile})
    return scaffold.format_profile_csv(profile)


def _cmd_scaffold_maxlen(args) -> str:
    edge = scaffold.load_profile_csv(args.edge)
    lo, hi = _parse_range(args.range)
    result = scaffold.max_stable_length(edge, args.slope_tol, args.min_span, (lo, hi))
    return _json_dump(
        {
            "max_stable_length_um": result.length,
            "monotone": result.monotone,
            "plateau_free_found": result.found,
            "slope_tol": args.slope_tol,
            "min_span_um": args.min_span,
            "search_range_um": [lo, hi],
        }
    )


def _cmd_fit_resistance(args) -> str:
    n, r = _read_csv_columns(args.data, ["n_bridges", "resistance_ohm"])
    fit = fitkit.linear_fit(list(zip(n, r)))
    if args.plot:
        from . import plots

        plots.save_linear_fit_figure(args.plot, n, r, fit, "number of bridges", "resistance (Ohm)")
    return _json_dump(_linear_fit_json(fit))


def _cmd_fit_loss(args) -> str:
    n, inv_qi = _read_csv_columns(args.data, ["n_bridges", "inv_qi"])
    fit = fitkit.linear_fit(list(zip(n, inv_qi)))
    if args.plot:
        from . import plots

        plots.save_linear_fit_figure(args.plot, n, inv_qi, fit, "number of bridges", "1/Qi")
    return _json_dump(_linear_fit_json(fit))


_SPAN_KEYS = {"length_um", "width_um", "thickness_nm"}


def _span_from_json(entry, where: str, default_thickness_nm: float) -> fitkit.Span:
    if not isinstance(entry, dict) or not {"length_um", "width_um"} <= set(entry) or set(entry) - _SPAN_KEYS:
        raise InputError(
            f"{where}: must have keys length_um, width_um and optionally thickness_nm"
        )
    return fitkit.Span(
        length_um=float(entry["length_um"]),
        width_um=float(entry["width_um"]),
        thickness_nm=float(entry.get("thickness_nm", default_thickness_nm)),
    )


def _cmd_fit_resistivity(args) -> str:
    with open(args.data, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.data}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or set(data) != {"units"} or not isinstance(data["units"], list):
        raise InputError(f"{args.data}: expected an object with exactly the key 'units' (a list)")
    units = []
    for i, entry in enumerate(data["units"]):
        if not isinstance(entry, dict) or set(entry) - {"bridge", "pad", "resistance_ohm"}:
            raise InputError(f"{args.data}: units[{i}]: keys must be bridge, pad (optional), resistance_ohm")
        if "bridge" not in entry or "resistance_ohm" not in entry:
            raise InputError(f"{args.data}: units[{i}]: 'bridge' and 'resistance_ohm' are required")
        bridge = _span_from_json(
            entry["bridge"], f"{args.data}: units[{i}].bridge", fitkit.DEFAULT_BRIDGE_THICKNESS_NM
        )
        pad = None
        if entry.get("pad") is not None:
            pad = _span_from_json(
                entry["pad"], f"{args.data}: units[{i}].pad", fitkit.DEFAULT_PAD_THICKNESS_NM
            )
        units.append((fitkit.UnitGeometry(bridge=bridge, pad=pad), float(entry["resistance_ohm"])))
    fit = fitkit.fit_resistivity(units)
    if args.plot:
        from . import plots

        plots.save_resistivity_figure(
            args.plot,
            [fitkit.geometric_ratio(g) for g, _ in units],
            [r for _, r in units],
            fit.rho_ohm_m,
        )
    return _json_dump(
        {
            "model": "resistivity",
            "rho_ohm_m": fit.rho_ohm_m,
            "rho_stderr": fit.rho_stderr,
            "converged": True,
            "residual_norm": fit.residual_norm,
        }
    )


def _cmd_fit_s21(args) -> str:
    f, re, im = _read_csv_columns(args.data, ["f_GHz", "re", "im"])
    z = re + 1j * im
    result = fitkit.fit_notch(f, z)
    if args.plot:
        from . import plots

        plots.save_notch_figure(args.plot, f, z, result)
    return _json_dump(
        {
            "model": "notch",
            "f0_GHz": result.f0,
            "q_loaded": result.q_loaded,
            "q_internal": result.q_internal,
            "q_coupling": result.q_coupling,
            "phi_rad": result.phi,
            "f0_stderr": result.f0_stderr,
            "q_loaded_stderr": result.q_loaded_stderr,
            "q_internal_stderr": result.q_internal_stderr,
            "q_coupling_stderr": result.q_coupling_stderr,
            "phi_stderr": result.phi_stderr,
            "converged": result.converged,
            "residual_norm": result.residual_norm,
            "diagnostics": list(result.diagnostics),
        }
    )


def _cmd_fit_tls(args) -> str:
    n, inv_qi = _read_csv_columns(args.data, ["n_photon", "inv_qi"])
    result = fitkit.fit_tls(n, inv_qi)
    if args.plot:
        from . import plots

        plots.save_tls_figure(args.plot, n, inv_qi, result)
    return _json_dump(
        {
            "model": "tls",
            "f_delta0": result.f_delta0,
            "n_c": result.n_c,
            "beta": result.beta,
            "q_hp": result.q_hp,
            "f_delta0_stderr": result.f_delta0_stderr,
            "n_c_stderr": result.n_c_stderr,
            "beta_stderr": result.beta_stderr,
            "q_hp_stderr": result.q_hp_stderr,
            "converged": result.converged,
            "residual_norm": result.residual_norm,
        }
    )


def _cmd_place(args) -> str:
    paths = layout.load_layout(args.layout)
    rule = layout.load_rule(args.rule) if args.rule else None
    placements = []
    for p in paths:
        placements.extend(layout.place_bridges(p, rule if rule is not None else layout.default_rule(p.role)))
    if args.plot:
        from . import plots

        plots.save_layout_figure(args.plot, paths, placements)
    return _json_dump(layout.placements_to_json(placements))


def _cmd_check(args) -> str:
    paths = layout.load_layout(args.layout)
    placements = layout.load_placements(args.placements)
    violations = layout.check_placements(paths, placements, args.clearance)
    return _json_dump(
        {
            "min_clearance_um": args.clearance,
            "violations": [v.to_dict() for v in violations],
        }
    )


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abkit",
        description="Airbridge circuit design and analysis toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantize", help="derive qubit and coupling parameters from a design file")
    p.add_argument("--design", required=True, help="design JSON (netlist + squids)")
    p.add_argument("--plot", help="write a summary figure to this file")
    p.set_defaults(func=_cmd_quantize)

    sc = sub.add_parser("scaffold", help="resist scaffold profile tools")
    scsub = sc.add_subparsers(dest="subcommand", required=True)

    p = scsub.add_parser("sim", help="simulate a scaffold profile from an edge profile")
    p.add_argument("--edge", required=True, help="edge profile CSV (x_um,h_um)")
    p.add_argument("--length", type=float, required=True, help="bridge span in um")
    p.add_argument("--plot", help="write a profile figure to this file")
    p.set_defaults(func=_cmd_scaffold_sim)

    p = scsub.add_parser("sweep", help="sweep scaffold height and plateau flags over spans")
    p.add_argument("--edge", required=True, help="edge profile CSV (x_um,h_um)")
    p.add_argument("--lengths", required=True, help="'lo:hi:step' or comma list, in um")
    p.add_argument("--slope-tol", type=float, default=scaffold.DEFAULT_SLOPE_TOL, help="plateau slope tolerance (um/um)")
    p.add_argument("--min-span", type=float, default=scaffold.DEFAULT_MIN_SPAN, help="minimum plateau span (um)")
    p.add_argument("--plot", help="write a sweep figure to this file")
    p.set_defaults(func=_cmd_scaffold_sweep)

    p = scsub.add_parser("grayscale", help="generate a parabolic grayscale profile")
    p.add_argument("--height", type=float, required=True, help="apex height in um")
    p.add_argument("--length", type=float, required=True, help="span in um")
    p.add_argument("--samples", type=int, default=201, help="number of samples")
    p.add_argument("--plot", help="write a profile figure to this file")
    p.set_defaults(func=_cmd_scaffold_grayscale)

    p = scsub.add_parser("maxlen", help="largest plateau-free span within a range")
    p.add_argument("--edge", required=True, help="edge profile CSV (x_um,h_um)")
    p.add_argument("--range", required=True, help="'lo:hi' search range in um")
    p.add_argument("--slope-tol", type=float, default=scaffold.DEFAULT_SLOPE_TOL, help="plateau slope tolerance (um/um)")
    p.add_argument("--min-span", type=float, default=scaffold.DEFAULT_MIN_SPAN, help="minimum plateau span (um)")
    p.set_defaults(func=_cmd_scaffold_maxlen)

    ft = sub.add_parser("fit", help="measurement data fits")
    ftsub = ft.add_subparsers(dest="subcommand", required=True)

    p = ftsub.add_parser("resistance", help="linear fit of chain resistance vs bridge count")
    p.add_argument("--data", required=True, help="CSV with header n_bridges,resistance_ohm")
    p.add_argument("--plot", help="write a fit figure to this file")
    p.set_defaults(func=_cmd_fit_resistance)

    p = ftsub.add_parser("resistivity", help="zero-intercept resistivity fit from unit geometries")
    p.add_argument("--data", required=True, help="JSON with a 'units' list (geometry + resistance)")
    p.add_argument("--plot", help="write a fit figure to this file")
    p.set_defaults(func=_cmd_fit_resistivity)

    p = ftsub.add_parser("loss", help="linear fit of loss tangent vs bridge count")
    p.add_argument("--data", required=True, help="CSV with header n_bridges,inv_qi")
    p.add_argument("--plot", help="write a fit figure to this file")
    p.set_defaults(func=_cmd_fit_loss)

    p = ftsub.add_parser("s21", help="notch resonator fit of a complex S21 sweep")
    p.add_argument("--data", required=True, help="CSV with header f_GHz,re,im")
    p.add_argument("--plot", help="write a fit figure to this file")
    p.set_defaults(func=_cmd_fit_s21)

    p = ftsub.add_parser("tls", help="saturable-loss fit of 1/Qi vs photon number")
    p.add_argument("--data", required=True, help="CSV with header n_photon,inv_qi")
    p.add_argument("--plot", help="write a fit figure to this file")
    p.set_defaults(func=_cmd_fit_tls)

    p = sub.add_parser("place", help="place bridges along every path of a layout")
    p.add_argument("--layout", required=True, help="layout JSON")
    p.add_argument("--rule", help="bridge rule JSON (defaults per path role)")
    p.add_argument("--plot", help="write a layout figure to this file")
    p.set_defaults(func=_cmd_place)

    p = sub.add_parser("check", help="clearance and on-path checks for placements")
    p.add_argument("--layout", required=True, help="layout JSON")
    p.add_argument("--placements", required=True, help="placements JSON (output of 'place')")
    p.add_argument("--clearance", type=float, default=layout.DEFAULT_MIN_CLEARANCE, help="minimum edge-to-edge clearance (um)")
    p.set_defaults(func=_cmd_check)

    return parser


def run(argv: list[str]) -> CommandResult:
    """Execute one CLI invocation without touching the process streams."""
    out_buf, err_buf = io.StringIO(), io.StringIO()
    parser = build_parser()
    try:
        with redirect_stdout(out_buf), redirect_stderr(err_buf):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return CommandResult(code, out_buf.getvalue(), err_buf.getvalue())
    try:
        stdout = args.func(args)
    except ToolkitError as exc:
        return CommandResult(1, "", f"error: {exc}\n")
    except OSError as exc:
        return CommandResult(1, "", f"error: {exc}\n")
    return CommandResult(0, stdout, "")


def main(argv: list[str] | None = None) -> int:
    result = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(result.stdout)
    sys.stderr.write(result.diagnostics)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
