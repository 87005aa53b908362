"""Verification suites.

Each criterion is a function returning a `Criterion`; suites group them.
The same functions back ``outerpress verify`` and ``tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..diagnostics import fit_decay_rate, h1_distance, jensen_bounds, jensen_check
from ..model import MassGrid, ThermoParams
from ..oracles import (
    MmsCase,
    equilibrium_state,
    mms_errors,
    representation_v,
    stationary_from_run,
    uniform_flow_initial,
    uniform_flow_schedule,
    uniform_ode_oracle,
)
from ..schedule import PressureSchedule
from ..solver import SolverConfig, init_state, run
from .config import RunConfig
from .pipeline import RunOutcome, execute
from .presets import THEOREM_REGIME

# tolerances
FIXED_POINT_TOL = 1e-10
FIXED_POINT_SECONDS = 5.0
MOMENTUM_TOL = 1e-11
MOMENTUM_SECONDS = 60.0
ENERGY_RATIO_RANGE = (1.7, 2.3)
ENERGY_DTS = (4e-4, 2e-4, 1e-4)
MMS_LADDER = (32, 64, 128, 256)
MMS_MIN_ORDER = 1.9
MMS_T_END = 0.5
REPRESENTATION_TOL = 1e-2
UNIFORM_REL_TOL = 1e-4
UNIFORM_VAR_TOL = 1e-10
BOUND_FLOOR = 0.05
JENSEN_ROOT_TOL = 1e-12
U_H1_TOL = 1e-5
MEAN_TOL = 1e-4
V_H1_TOL = 1e-3
BALANCE_TOL = 1e-12
DECAY_R2_MIN = 0.99
F_REL_TOL = 1e-10


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2}. {self.name}: {self.detail}"


# ---------------------------------------------------------------------------
# shared preset runs

_CACHE: dict[str, RunOutcome] = {}


def _run_preset(name: str) -> RunOutcome:
    return execute(RunConfig.from_preset(name))


def preset_outcomes(names) -> dict[str, RunOutcome]:
    """Run presets (cached per process), in parallel up to OUTERPRESS_THREADS workers."""
    todo = [n for n in names if n not in _CACHE]
    workers = max(1, int(os.environ.get("OUTERPRESS_THREADS", "1")))
    if todo:
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=min(workers, len(todo))) as pool:
                for name, out in zip(todo, pool.map(_run_preset, todo)):
                    _CACHE[name] = out
        else:
            for name in todo:
                _CACHE[name] = _run_preset(name)
    return {n: _CACHE[n] for n in names}


def preset_outcome(name: str) -> RunOutcome:
    return preset_outcomes([name])[name]


# ---------------------------------------------------------------------------
# criteria


def fixed_point() -> Criterion:
    grid = MassGrid(64)
    s0 = equilibrium_state(1.0, 1.0, grid)
    t0 = time.perf_counter()
    res = run(s0, PressureSchedule.constant(1.0), ThermoParams(),
              SolverConfig(dt=1e-3, t_end=10.0, store_history_every=1000))
    elapsed = time.perf_counter() - t0
    drift = res.final.max_abs_diff(s0)
    ok = drift < FIXED_POINT_TOL and elapsed < FIXED_POINT_SECONDS
    return Criterion(1, "fixed point", ok, f"max drift {drift:.2e} (< {FIXED_POINT_TOL:g}), {elapsed:.2f} s (< {FIXED_POINT_SECONDS:g} s)")


def momentum_conservation() -> Criterion:
    out = preset_outcome("standard-beta1")
    m = out.result.diagnostics.column("momentum")
    drift = float(np.max(np.abs(m - m[0])))
    secs = out.summary.wall_clock_s
    ok = drift < MOMENTUM_TOL and secs < MOMENTUM_SECONDS and out.summary.status == "completed"
    return Criterion(2, "momentum conservation", ok,
                     f"max |sum w u - sum w u0| {drift:.2e} (< {MOMENTUM_TOL:g}) over t <= {out.result.final.t:g}, "
                     f"{secs:.1f} s (< {MOMENTUM_SECONDS:g} s)")


def energy_first_order() -> Criterion:
    residuals = []
    for dt in ENERGY_DTS:
        cfg = RunConfig.from_preset("constant-beta1", **{"time.dt": dt, "time.stride": 10**9})
        out = execute(cfg)
        s = out.result.diagnostics[-1]
        assert abs(s.t - 5.0) < 1e-12
        residuals.append(abs(s.total_energy - out.result.diagnostics[0].total_energy))
    ratios = [residuals[i] / residuals[i + 1] for i in range(len(residuals) - 1)]
    lo, hi = ENERGY_RATIO_RANGE
    ok = all(lo <= r <= hi for r in ratios)
    return Criterion(3, "energy identity first order", ok,
                     "|E(5)-E(0)| = " + ", ".join(f"{r:.3e}" for r in residuals)
                     + "; ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f" (in [{lo}, {hi}])")


def mms_orders(ladder=MMS_LADDER, t_end=MMS_T_END):
    case = MmsCase()
    errs = []
    for n in ladder:
        grid = MassGrid(n)
        dt = grid.dx**2
        cfg = SolverConfig(dt=dt, t_end=t_end, mms_enabled=True, store_history_every=10**9)
        res = run(init_state(grid, case.initial()), case.schedule(), case.params, cfg, forcing=case)
        errs.append(mms_errors(case, res.final))
    errs = np.array(errs)
    orders = np.log(errs[:-1] / errs[1:]) / np.log(np.array(ladder[1:]) / np.array(ladder[:-1]))[:, None]
    return errs, orders


def mms_convergence() -> Criterion:
    errs, orders = mms_orders()
    worst = orders.min(axis=0)
    ok = bool(np.all(worst >= MMS_MIN_ORDER))
    detail = ", ".join(f"{f}: min order {o:.3f}" for f, o in zip(("v", "u", "theta"), worst))
    return Criterion(4, "MMS convergence", ok, detail + f" (>= {MMS_MIN_ORDER}); finest L2 errors "
                     + ", ".join(f"{e:.2e}" for e in errs[-1]))


def _representation_gap(n: int, dt: float, stride: int) -> tuple[float, int]:
    cfg = RunConfig.from_preset("standard-beta1", **{
        "grid.n": n, "time.dt": dt, "time.t_end": 1.0, "time.stride": stride})
    out = execute(cfg)
    hist = out.result.history
    v_rep = representation_v(hist, 1.0, cfg.params())
    v = out.result.final.v
    return float(np.max(np.abs(v_rep - v)) / np.max(np.abs(v))), len(hist)


def representation_oracle() -> Criterion:
    gap, nsnap = _representation_gap(256, 1e-3, 5)
    gap_coarse, nsnap_c = _representation_gap(128, 2e-3, 2)
    ok = gap < REPRESENTATION_TOL and nsnap >= 200 and nsnap_c >= 200 and gap < gap_coarse
    return Criterion(5, "representation formula", ok,
                     f"relative gap {gap:.2e} at N=256 ({nsnap} snapshots, < {REPRESENTATION_TOL:g}); "
                     f"{gap_coarse:.2e} at N=128 ({nsnap_c} snapshots)")


def uniform_flow() -> Criterion:
    v0, th0, c, t_end = 1.0, 2.0, 0.5, 2.0
    grid = MassGrid(64)
    res = run(init_state(grid, uniform_flow_initial(v0, th0, c)), uniform_flow_schedule(v0, th0, c),
              ThermoParams(), SolverConfig(dt=1e-4, t_end=t_end, store_history_every=100))
    v, th, _ = uniform_ode_oracle(v0, th0, c, t_end)
    fin = res.final
    rel_v = float(np.max(np.abs(fin.v / v - 1)))
    rel_th = float(np.max(np.abs(fin.theta / th - 1)))
    var = max(
        max(float(np.var(s.v)), float(np.var(s.theta)), float(np.var(np.diff(s.u))))
        for s in (res.history.state_at(k) for k in range(len(res.history)))
    )
    ok = rel_v < UNIFORM_REL_TOL and rel_th < UNIFORM_REL_TOL and var < UNIFORM_VAR_TOL
    return Criterion(6, "uniform-flow exactness", ok,
                     f"rel err v {rel_v:.2e}, theta {rel_th:.2e} (< {UNIFORM_REL_TOL:g}); "
                     f"max spatial variance {var:.2e} (< {UNIFORM_VAR_TOL:g})")


def uniform_bounds() -> Criterion:
    outs = preset_outcomes(THEOREM_REGIME)
    parts, ok = [], True
    for name, out in outs.items():
        r = out.result
        good = out.summary.status == "completed" and r.min_v > BOUND_FLOOR and r.min_theta > BOUND_FLOOR
        ok &= good
        parts.append(f"{name}: min v {r.min_v:.4f}, min theta {r.min_theta:.4f}, {out.summary.status}")
    return Criterion(7, "uniform bounds", ok, "; ".join(parts) + f" (> {BOUND_FLOOR})")


def jensen_bracket(presets=THEOREM_REGIME + ("standard-beta0", "equilibrium", "constant-beta1")) -> Criterion:
    outs = preset_outcomes(presets)
    worst, worst_res, ok = math.inf, 0.0, True
    for out in outs.values():
        if out.summary.status != "completed":
            continue
        rep = jensen_check(out.result.diagnostics)
        ok &= rep.passed
        worst = min(worst, rep.worst_margin)
        worst_res = max(worst_res, *rep.bounds.residuals())
    for c0 in (1.5, 2.0, 5.0):
        worst_res = max(worst_res, *jensen_bounds(c0).residuals())
    ok = ok and worst_res < JENSEN_ROOT_TOL
    return Criterion(8, "Jensen bracket", ok,
                     f"worst margin {worst:.4f} (>= 0) over {len(outs)} presets; "
                     f"max root residual {worst_res:.1e} (< {JENSEN_ROOT_TOL:g})")


def stationary_convergence() -> Criterion:
    out = preset_outcome("standard-beta1")
    r = out.result
    st = out.stationary
    h_v, h_u, h_th = h1_distance(r.final, st.v_hat, st.theta_hat)
    vbar = float(np.mean(r.final.v))
    thbar = float(np.mean(r.final.theta))
    dv, dth = abs(vbar - st.v_hat), abs(thbar - st.theta_hat)
    balance = abs(st.theta_hat - st.P_bar * st.v_hat)
    ok = (
        h_u < U_H1_TOL
        and dv < st.v_uncertainty + MEAN_TOL
        and dth < st.theta_uncertainty + MEAN_TOL
        and h_v < V_H1_TOL
        and balance < BALANCE_TOL
    )
    return Criterion(9, "convergence to stationary state", ok,
                     f"t={r.final.t:g}: |u|_H1 {h_u:.1e} (< {U_H1_TOL:g}), |vbar-v_hat| {dv:.1e}, "
                     f"|thetabar-theta_hat| {dth:.1e} (< {MEAN_TOL:g} + {st.v_uncertainty:.1e}), "
                     f"|v-v_hat|_H1 {h_v:.1e} (< {V_H1_TOL:g}), |theta_hat - P v_hat| {balance:.1e}")


def exponential_decay() -> Criterion:
    out = preset_outcome("standard-beta1")
    d = out.result.diagnostics
    fit = fit_decay_rate(d.times, d.column("int_u2"))
    const = preset_outcome("constant-beta1").result.diagnostics
    P = 1.0
    F = const.column("F")
    ref = np.exp(-2.0 * P * const.times)
    rel = float(np.max(np.abs(F - ref) / ref))
    ok = fit.rate > 0 and fit.r_squared > DECAY_R2_MIN and rel < F_REL_TOL
    return Criterion(10, "exponential decay", ok,
                     f"int u^2: rate {fit.rate:.4f} (> 0), r^2 {fit.r_squared:.6f} (> {DECAY_R2_MIN}) on "
                     f"[{fit.window[0]:g}, {fit.window[1]:g}]; constant-schedule F vs exp(-2Pt) rel {rel:.1e} (< {F_REL_TOL:g})")


SUITES = {
    "conservation": (fixed_point, momentum_conservation, energy_first_order),
    "oracles": (representation_oracle, uniform_flow),
    "mms": (mms_convergence,),
    "convergence-to-stationary": (stationary_convergence, exponential_decay),
    "bounds": (uniform_bounds, jensen_bracket),
}

ALL_CRITERIA = (
    fixed_point, momentum_conservation, energy_first_order, mms_convergence, representation_oracle,
    uniform_flow, uniform_bounds, jensen_bracket, stationary_convergence, exponential_decay,
)


def run_suite(name: str, echo=print) -> list[Criterion]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    results = []
    for fn in SUITES[name]:
        c = fn()
        results.append(c)
        if echo is not None:
            echo(c.line())
    return results
