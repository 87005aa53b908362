"""Command line entry point: ``outerpress {run,verify,fit,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..diagnostics import fit_decay_rate, jensen_bounds
from ..errors import ConfigError, FitError, InitializationError, ReportError
from .config import RunConfig
from .pipeline import (
    CONFIG_FILE, CSV_COLUMNS, EXIT_CODES, SERIES_FILE, SUMMARY_FILE, execute, read_series, write_artifacts,
)

log = logging.getLogger("outerpress")

EXIT_USAGE = 64
EXIT_MISSING = 66
EXIT_VERIFY_FAILED = 1


def _say(args, *msg):
    if not args.quiet:
        print(*msg)


def cmd_run(args) -> int:
    try:
        if args.config:
            cfg = RunConfig.from_file(args.config)
        elif args.preset:
            cfg = RunConfig.from_preset(args.preset)
        else:
            raise ConfigError("either --config or --preset is required")
    except (ConfigError, InitializationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CODES["config-error"]
    try:
        outcome = execute(cfg)
    except InitializationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CODES["config-error"]
    outdir = Path(args.out or cfg["output.dir"])
    write_artifacts(outcome, outdir)
    s = outcome.summary
    if s.status != "completed":
        print(f"{s.status}: {s.message}", file=sys.stderr)
    _say(args, f"{s.status} at t={s.final_time:g} after {s.steps} steps ({s.wall_clock_s:.1f} s) -> {outdir}")
    return outcome.exit_code


def cmd_verify(args) -> int:
    from .suites import SUITES, run_suite

    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    results = run_suite(args.suite, echo=None if args.quiet else print)
    ok = all(c.passed for c in results)
    _say(args, f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else EXIT_VERIFY_FAILED


def cmd_fit(args) -> int:
    try:
        data = read_series(args.series)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING if isinstance(exc, OSError) else EXIT_USAGE
    if args.column not in data or args.column == "t":
        print(f"error: no column {args.column!r}; available: {', '.join(CSV_COLUMNS[1:])}", file=sys.stderr)
        return EXIT_USAGE
    try:
        fit = fit_decay_rate(data["t"], data[args.column], t_start=args.window_start)
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps({"lambda": fit.rate, "r_squared": fit.r_squared, "window": list(fit.window),
                      "n_points": fit.n_points}, sort_keys=True))
    return 0


def render_report(rundir: Path) -> str:
    missing = [f for f in (SUMMARY_FILE, SERIES_FILE, CONFIG_FILE) if not (rundir / f).exists()]
    if missing:
        raise ReportError(missing)
    summary = json.loads((rundir / SUMMARY_FILE).read_text())
    series = read_series(rundir / SERIES_FILE)
    t = series["t"]
    lines = [f"run directory: {rundir}", f"status: {summary['status']} at t = {summary['final_time']:g}", ""]

    c0 = float(np.max(series["entropy_functional"]))
    jb = jensen_bounds(max(c0, 1.0))
    th = series["theta_mean"]
    lines += [
        "bounds",
        f"  v     in [{np.min(series['min_v']):.6g}, {np.max(series['max_v']):.6g}]",
        f"  theta in [{np.min(series['min_theta']):.6g}, {np.max(series['max_theta']):.6g}]",
        f"  mean theta in [{th.min():.6g}, {th.max():.6g}]; Jensen bracket [{jb.alpha1:.6g}, {jb.alpha2:.6g}] "
        f"(C0* = {c0:.6g}, worst margin {summary['jensen_margin']:.4g})",
        f"  momentum drift {np.max(np.abs(series['momentum'] - series['momentum'][0])):.3e}",
        f"  peak energy residual {summary['peak_energy_residual']:.3e}",
        f"  initial boundary-stress mismatch {summary.get('initial_boundary_mismatch', float('nan')):.3e}",
        "",
    ]
    if summary.get("v_hat") is not None:
        dv = series["v_mean"][-1] - summary["v_hat"]
        dth = series["theta_mean"][-1] - summary["theta_hat"]
        lines += [
            "stationary state",
            f"  predicted v_hat = {summary['v_hat']:.10g} +/- {summary['v_hat_uncertainty']:.2e}, "
            f"theta_hat = {summary['theta_hat']:.10g} +/- {summary['theta_hat_uncertainty']:.2e}",
            f"  late-time mean v = {series['v_mean'][-1]:.10g} (drift {dv:+.3e}), "
            f"mean theta = {series['theta_mean'][-1]:.10g} (drift {dth:+.3e})",
            f"  final H1 distances v {summary['h1_v']:.3e}, u {summary['h1_u']:.3e}, theta {summary['h1_theta']:.3e}",
            "",
        ]
    lines.append("envelopes (t, Y, F)")
    for k in np.unique(np.linspace(0, t.size - 1, min(t.size, 6)).astype(int)):
        lines.append(f"  {t[k]:10.4g}  {series['Y'][k]:.6e}  {series['F'][k]:.6e}")
    lines += ["", "decay rates (least squares on ln y, latter half above 1e-14)"]
    for tag, label in (("u2", "int u^2"), ("ux2", "int u_x^2"), ("thetax2", "int theta_x^2"), ("vx2", "int v_x^2")):
        rate, r2 = summary.get(f"rate_{tag}"), summary.get(f"r2_{tag}")
        if rate is None:
            lines.append(f"  {label:<14} at floor")
        else:
            lines.append(f"  {label:<14} rate {rate:.5g}  r^2 {r2:.6f}")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    try:
        text = render_report(Path(args.rundir))
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="outerpress", description=__doc__)
    ap.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configuration and write artifacts")
    p.add_argument("--config", help="flat TOML config file")
    p.add_argument("--preset", help="run a named preset instead of a config file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit", help="fit an exponential decay rate to a time-series column")
    p.add_argument("series", help="time-series CSV written by 'run'")
    p.add_argument("--column", required=True)
    p.add_argument("--window-start", type=float, default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="summarize a completed run directory")
    p.add_argument("rundir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    # --quiet is accepted before or after the subcommand
    argv = list(sys.argv[1:] if argv is None else argv)
    quiet = "--quiet" in argv
    argv = [a for a in argv if a != "--quiet"]
    args = parser.parse_args(argv)
    args.quiet = quiet
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
