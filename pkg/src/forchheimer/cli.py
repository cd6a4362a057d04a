"""Command-line entry point.

Exit codes: 0 success, 1 numeric failure, 2 usage or configuration error,
3 an exactness-anchored check failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import export
from .boundary import PRESETS
from .constitutive import ForchheimerLaw
from .errors import ForchheimerError, ValidationError
from .exponents import build_table, format_table
from .grid import Grid
from .harness import (
    FAMILIES,
    ESTIMATES,
    EstimateReport,
    analyze,
    default_family,
    evaluate_scenario,
    run_sweep,
)
from .scenario import Scenario
from .solver import solve_ibvp

EXIT_NUMERIC = 1
EXIT_USAGE = 2
EXIT_CHECK = 3


class UsageError(Exception):
    pass


def _law(text: str) -> ForchheimerLaw:
    try:
        return ForchheimerLaw.parse(text)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _load_scenario(args) -> Scenario:
    try:
        cfg = export.read_json(args.scenario)
    except FileNotFoundError:
        raise UsageError(f"scenario file not found: {args.scenario}") from None
    except ValueError as exc:
        raise UsageError(f"scenario file is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("scenario config must be a JSON object")
    sc = Scenario.from_dict(cfg)
    changes = {}
    if getattr(args, "cells", None) is not None:
        changes["grid"] = Grid(sc.grid.dim, args.cells, sc.grid.length)
        if getattr(args, "dt", None) is None and (cfg.get("time") or {}).get("dt") is None:
            changes["dt"] = None
    if getattr(args, "T", None) is not None:
        changes["T"] = args.T
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if getattr(args, "stride", None) is not None:
        changes["stride"] = args.stride
    if getattr(args, "alpha", None) is not None:
        changes["alpha"] = args.alpha
    if getattr(args, "s0", None) is not None:
        changes["s0"] = args.s0
    if getattr(args, "tail", None) is not None:
        changes["tail_window"] = args.tail
    return sc.with_(**changes) if changes else sc


def _add_overrides(p):
    p.add_argument("--cells", type=int, help="cells per side")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--T", type=float, help="horizon")
    p.add_argument("--stride", type=int, help="store every k-th step")
    p.add_argument("--alpha", type=float)
    p.add_argument("--s0", type=float)
    p.add_argument("--tail", type=float, help="tail window length")


def cmd_kfun(args, out):
    law = _law(args.g)
    if args.xi:
        xi = np.array(args.xi, dtype=float)
    else:
        xi = np.concatenate([[0.0], np.geomspace(args.xi_min, args.xi_max, args.points - 1)])
    if np.any(xi < 0) or not np.all(np.isfinite(xi)):
        raise UsageError("xi values must be finite and nonnegative")
    text = export.csv_text(export.KFUN_HEADER, export.kfun_rows(law, xi))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        out.write(text)
    return 0


def cmd_exponents(args, out):
    law = _law(args.g)
    table = build_table(args.n, law, args.alpha, args.s0)
    payload = {"n": args.n, "law": str(law), "table": table.as_dict()}
    if args.format in ("text", "both"):
        out.write(format_table(table) + "\n")
    if args.format in ("json", "both"):
        if args.format == "both":
            out.write("\n")
        out.write(export.json_text(payload))
    if args.json:
        export.write_json(args.json, payload)
    return 0


def cmd_solve(args, out):
    sc = _load_scenario(args)
    outdir = _out_dir(args.out)
    traj = solve_ibvp(sc)
    export.write_csv(outdir / "trajectory.csv", export.trajectory_header(sc.grid.dim), export.trajectory_rows(traj))
    export.write_json(outdir / "metadata.json", export.solve_metadata(sc, traj))
    an = analyze(sc, traj, s_values=(2.0,)) if len(traj) >= 3 else None
    if an is not None:
        export.write_csv(outdir / "trace.csv", export.TRACE_HEADER, export.trace_rows(an.trace))
    out.write(f"solved {sc.scenario_id}: {sc.steps} steps, {len(traj)} snapshots -> {outdir}\n")
    return 0


def _emit_report(report: EstimateReport, outdir, out):
    if outdir is not None:
        export.write_json(outdir / "report.json", report.as_dict())
        export.write_csv(outdir / "records.csv", export.RECORD_COLUMNS, export.record_rows(report.records))
    out.write(summarize(report))
    return 0 if report.ok else EXIT_CHECK


def cmd_verify(args, out):
    sc = _load_scenario(args)
    outdir = _out_dir(args.out) if args.out else None
    records, checks, _ = evaluate_scenario(sc, args.estimates)
    report = EstimateReport(records, checks, meta={"scenarios": [sc.scenario_id], "scenario": sc.to_dict()})
    return _emit_report(report, outdir, out)


def cmd_sweep(args, out):
    outdir = _out_dir(args.out)
    if args.family:
        cfg = export.read_json(args.family)
        if not isinstance(cfg, list):
            raise UsageError("family file must be a JSON array of scenario configs")
        family = [Scenario.from_dict(d) for d in cfg]
    else:
        law = _law(args.g)
        family = default_family(
            law=law,
            presets=tuple(args.presets),
            amplitudes=tuple(args.amplitudes),
            cells=tuple(args.grids),
            T=args.T,
            dt=args.dt,
            picard_tol=args.picard_tol,
            tail_window=args.tail,
        )
    report = run_sweep(family, args.estimates, workers=args.workers, lemmas=not args.no_lemmas)
    report.meta["family"] = [sc.to_dict() for sc in family]
    return _emit_report(report, outdir, out)


def cmd_report(args, out):
    try:
        report = EstimateReport.from_dict(export.read_json(args.input))
    except FileNotFoundError:
        raise UsageError(f"report file not found: {args.input}") from None
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"malformed report: {exc}") from None
    text = summarize(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return 0


def _num(x) -> str:
    if x is None:
        return "-"
    return f"{x:.3g}" if isinstance(x, float) else str(x)


def summarize(report: EstimateReport) -> str:
    lines = [f"{'estimate':34s} {'n':>5s} {'max ratio':>11s} {'refine':>8s} {'spread':>9s}  note"]
    for eid, agg in report.aggregates().items():
        note = [] if agg["finite"] else ["NON-FINITE"]
        if not agg["asserted"]:
            note.append("reported")
        lines.append(
            f"{eid:34s} {agg['records']:5d} {agg['max_ratio']:11.4g} {_num(agg['refinement']):>8s} "
            f"{_num(agg['spread']):>9s}  {' '.join(note)}"
        )
    lines.append("")
    for c in report.exact_checks:
        lines.append(f"{'PASS' if c.ok else 'FAIL'} {c.name} value={c.value:.3g} tol={c.tolerance:.3g} {c.detail}".rstrip())
    for sid, msg in report.failures:
        lines.append(f"FAILED SCENARIO {sid}: {msg}")
    lines.append(f"overall: {'ok' if report.ok else 'exact check failure'}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="forch", description="Forchheimer flow simulator and estimate verifier")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kfun", help="tabulate s, K, K' and H")
    p.add_argument("--g", default="1+s", help='Forchheimer polynomial, e.g. "1+s+s^2"')
    p.add_argument("--xi", type=float, action="append", help="evaluation point (repeatable)")
    p.add_argument("--xi-min", type=float, default=1e-3)
    p.add_argument("--xi-max", type=float, default=1e3)
    p.add_argument("--points", type=int, default=61)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_kfun)

    p = sub.add_parser("exponents", help="print the exponent table")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--g", default="1+s")
    p.add_argument("--alpha", type=float)
    p.add_argument("--s0", type=float)
    p.add_argument("--format", choices=("text", "json", "both"), default="both")
    p.add_argument("--json", help="also write the JSON table to this path")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("solve", help="run one scenario and write its trajectory")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default="out")
    _add_overrides(p)
    p.set_defaults(func=cmd_solve)

    ids = sorted(ESTIMATES) + list(FAMILIES)
    p = sub.add_parser("verify", help="evaluate the estimates on one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.add_argument("--estimates", nargs="+", choices=ids, metavar="ID")
    _add_overrides(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a scenario family and aggregate a report")
    p.add_argument("--family", help="JSON array of scenario configs (default: built-in family)")
    p.add_argument("--out", default="sweep")
    p.add_argument("--g", default="1+s")
    p.add_argument("--presets", nargs="+", default=["periodic", "linear-drift"], choices=sorted(PRESETS))
    p.add_argument("--amplitudes", nargs="+", type=float, default=[0.5, 1.0, 2.0, 4.0])
    p.add_argument("--grids", nargs="+", type=int, default=[32, 64])
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--picard-tol", type=float, default=1e-6)
    p.add_argument("--tail", type=float)
    p.add_argument("--workers", type=int, help="worker processes (FORCH_THREADS overrides)")
    p.add_argument("--estimates", nargs="+", choices=ids, metavar="ID")
    p.add_argument("--no-lemmas", action="store_true", help="skip the scenario-independent lemma checks")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summarize a saved JSON report")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def run_command(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (UsageError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ForchheimerError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run_command())
