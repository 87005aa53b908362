"""Run a configuration end to end and persist its artifacts."""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..diagnostics import boundary_stress_mismatch, fit_decay_rate, h1_distance, jensen_check
from ..errors import FitError, ScheduleError, SolverError
from ..oracles import stationary_from_run
from ..solver import RunResult, init_state, run
from .config import RunConfig

CSV_COLUMNS = (
    "t", "total_energy", "entropy_functional", "dissipation_V", "theta_mean", "v_mean",
    "min_v", "max_v", "min_theta", "max_theta", "int_vx2", "int_ux2", "int_thetax2",
    "momentum", "Y", "F", "energy_residual", "h1_v", "h1_u", "h1_theta",
)

SUMMARY_FILE = "summary.json"
SERIES_FILE = "timeseries.csv"
CONFIG_FILE = "config.toml"
TIMING_FILE = "timing.json"
SNAPSHOT_FILE = "snapshots.npz"

EXIT_CODES = {"completed": 0, "config-error": 2, "floor-breach": 3, "volume-collapse": 4, "solver-error": 5}

DECAY_COLUMNS = {"u2": "int_u2", "ux2": "int_ux2", "thetax2": "int_thetax2", "vx2": "int_vx2"}


@dataclass
class RunSummary:
    final_time: float
    status: str
    min_v: float
    max_v: float
    min_theta: float
    max_theta: float
    v_hat: float | None
    theta_hat: float | None
    P_bar: float | None
    v_hat_uncertainty: float | None
    theta_hat_uncertainty: float | None
    h1_v: float | None
    h1_u: float | None
    h1_theta: float | None
    rate_u2: float | None
    r2_u2: float | None
    rate_ux2: float | None
    r2_ux2: float | None
    rate_thetax2: float | None
    r2_thetax2: float | None
    rate_vx2: float | None
    r2_vx2: float | None
    jensen_margin: float
    jensen_passed: bool
    peak_energy_residual: float
    initial_boundary_mismatch: float
    steps: int
    version: str
    message: str
    wall_clock_s: float = 0.0

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("wall_clock_s")
        return json.dumps({k: _clean(v) for k, v in d.items()}, indent=2, sort_keys=True) + "\n"


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


@dataclass
class RunOutcome:
    config: RunConfig
    result: RunResult
    summary: RunSummary
    rows: list[dict]
    stationary: object | None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.summary.status]


def _fit(series, column):
    try:
        f = fit_decay_rate(series.times, series.column(column))
    except FitError:
        return None, None
    return f.rate, f.r_squared


def execute(cfg: RunConfig) -> RunOutcome:
    """Run ``cfg``; solver failures produce an outcome with a failure status."""
    grid = cfg.grid()
    params = cfg.params()
    schedule = cfg.schedule()
    solver_cfg = cfg.solver_config()
    state0 = init_state(grid, cfg.initial())

    t0 = time.perf_counter()
    status, message = "completed", ""
    try:
        result = run(state0, schedule, params, solver_cfg)
    except SolverError as exc:
        result = exc.partial
        status, message = exc.status, str(exc)
        if result is None:
            raise
    wall = time.perf_counter() - t0

    series = result.diagnostics
    stationary = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            stationary = stationary_from_run(result, schedule, params)
        except ScheduleError:
            stationary = None

    rows = []
    h1_final = (None, None, None)
    for k, s in enumerate(series):
        row = {name: getattr(s, name) for name in CSV_COLUMNS[:17]}
        if stationary is not None:
            h = h1_distance(result.history.state_at(k), stationary.v_hat, stationary.theta_hat)
        else:
            h = (math.nan,) * 3
        row.update(h1_v=h[0], h1_u=h[1], h1_theta=h[2])
        rows.append(row)
        h1_final = h

    final = result.final
    jr = jensen_check(series)
    fits = {}
    for tag, col in DECAY_COLUMNS.items():
        fits[f"rate_{tag}"], fits[f"r2_{tag}"] = _fit(series, col)
    summary = RunSummary(
        final_time=final.t,
        status=status,
        min_v=float(np.min(final.v)),
        max_v=float(np.max(final.v)),
        min_theta=float(np.min(final.theta)),
        max_theta=float(np.max(final.theta)),
        v_hat=None if stationary is None else stationary.v_hat,
        theta_hat=None if stationary is None else stationary.theta_hat,
        P_bar=schedule.P_bar,
        v_hat_uncertainty=None if stationary is None else stationary.v_uncertainty,
        theta_hat_uncertainty=None if stationary is None else stationary.theta_uncertainty,
        h1_v=h1_final[0] if stationary is not None else None,
        h1_u=h1_final[1] if stationary is not None else None,
        h1_theta=h1_final[2] if stationary is not None else None,
        jensen_margin=jr.worst_margin,
        jensen_passed=jr.passed,
        peak_energy_residual=float(np.max(np.abs(series.column("energy_residual")))),
        initial_boundary_mismatch=boundary_stress_mismatch(state0, schedule(0.0), params),
        steps=result.steps,
        version=__version__,
        message=message,
        wall_clock_s=wall,
        **fits,
    )
    return RunOutcome(cfg, result, summary, rows, stationary)


def format_csv(rows, stride: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    picked = rows[::stride]
    if rows and (len(rows) - 1) % stride:
        picked.append(rows[-1])
    for row in picked:
        w.writerow([f"{float(row[c]):.17g}" for c in CSV_COLUMNS])
    return buf.getvalue()


def write_artifacts(outcome: RunOutcome, outdir: str | Path) -> Path:
    cfg = outcome.config
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    formats = set(cfg["output.formats"])
    (out / CONFIG_FILE).write_text(f"# outerpress {__version__}\n" + cfg.to_text())
    if "csv" in formats:
        (out / SERIES_FILE).write_text(format_csv(outcome.rows, cfg["output.stride"]))
    if "json" in formats:
        (out / SUMMARY_FILE).write_text(outcome.summary.to_json())
    (out / TIMING_FILE).write_text(json.dumps({"wall_clock_s": outcome.summary.wall_clock_s}) + "\n")
    if "snapshots" in formats:
        h = outcome.result.history
        np.savez_compressed(out / SNAPSHOT_FILE, t=h.times, v=h.v, u=h.u, theta=h.theta)
    return out


def read_series(path: str | Path) -> dict[str, np.ndarray]:
    """Load a time-series CSV, checking the header against the fixed schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: header does not match the time-series schema")
        data = [[float(x) for x in row] for row in reader if row]
    arr = np.array(data, dtype=float).reshape(-1, len(CSV_COLUMNS))
    return {name: arr[:, i] for i, name in enumerate(CSV_COLUMNS)}
