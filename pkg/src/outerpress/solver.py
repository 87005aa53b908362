"""Semi-implicit Lagrangian solver on a staggered mass grid.

One step advances ``(v, u, theta)`` in three stages:

1. velocity: backward Euler for the viscous term with ``mu(theta^n)/v^n``
   frozen, explicit pressure, boundary stress ``-p(t^{n+1})`` acting on the
   half-cell end nodes;
2. volume: ``v^{n+1} = v^n + dt * (u_{j+1} - u_j)/dx`` with the new velocity;
3. temperature: backward Euler for the conduction term with
   ``kappa(theta^n)/v^{n+1}`` on interior faces, zero flux on the two
   boundary faces, explicit compression and dissipation sources.

Both implicit stages are a single tridiagonal solve.  The node-weighted
momentum sum changes only through the two boundary stresses, which are equal
and opposite, so it is conserved to roundoff.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
from scipy.linalg.lapack import dgtsv

from .errors import FloorBreachError, InitializationError, SolverError, VolumeCollapseError
from .model import FluidState, MassGrid, ThermoParams, conductivity, viscosity
from .schedule import PressureSchedule

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# initial data


class InitialData(Protocol):
    def sample(self, grid: MassGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(v0 on cells, u0 on nodes, theta0 on cells)``."""


@dataclass(frozen=True)
class ConstantInitial:
    v: float = 1.0
    u: float = 0.0
    theta: float = 1.0

    def sample(self, grid):
        n = grid.n_cells
        return np.full(n, float(self.v)), np.full(n + 1, float(self.u)), np.full(n, float(self.theta))


@dataclass(frozen=True)
class SineInitial:
    """Constant base state plus ``amplitude * sin(2 pi k x + phase)`` on one field.

    With a ``seed`` the phase is drawn uniformly from [0, 2 pi).
    """

    v: float = 1.0
    u: float = 0.0
    theta: float = 1.0
    field: str = "v"
    amplitude: float = 0.1
    wavenumber: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.field not in ("v", "u", "theta"):
            raise ValueError(f"field must be one of v, u, theta; got {self.field!r}")

    @property
    def phase(self) -> float:
        if self.seed is None:
            return 0.0
        return float(np.random.default_rng(self.seed).uniform(0.0, 2.0 * np.pi))

    def profile(self, x):
        return self.amplitude * np.sin(2.0 * np.pi * self.wavenumber * np.asarray(x) + self.phase)

    def sample(self, grid):
        v, u, theta = ConstantInitial(self.v, self.u, self.theta).sample(grid)
        if self.field == "u":
            u = u + self.profile(grid.nodes)
        elif self.field == "v":
            v = v + self.profile(grid.cell_centers)
        else:
            theta = theta + self.profile(grid.cell_centers)
        return v, u, theta


@dataclass(frozen=True)
class FunctionInitial:
    v: Callable
    u: Callable
    theta: Callable

    def sample(self, grid):
        xc, xn = grid.cell_centers, grid.nodes
        return (
            np.broadcast_to(np.asarray(self.v(xc), dtype=float), xc.shape).copy(),
            np.broadcast_to(np.asarray(self.u(xn), dtype=float), xn.shape).copy(),
            np.broadcast_to(np.asarray(self.theta(xc), dtype=float), xc.shape).copy(),
        )


@dataclass(frozen=True)
class FileInitial:
    """CSV profile with header ``x,v,u,theta``, linearly interpolated onto the grid."""

    path: str

    def load(self):
        data = np.genfromtxt(self.path, delimiter=",", names=True)
        names = data.dtype.names or ()
        missing = {"x", "v", "u", "theta"} - set(names)
        if missing:
            raise ValueError(f"{self.path}: missing columns {sorted(missing)}")
        data = np.atleast_1d(data)
        for name in ("v", "theta"):
            bad = np.flatnonzero(~(data[name] > 0))
            if bad.size:
                raise InitializationError(name, int(bad[0]), float(data[name][bad[0]]))
        return data

    def sample(self, grid):
        d = self.load()
        x = d["x"]
        return (
            np.interp(grid.cell_centers, x, d["v"]),
            np.interp(grid.nodes, x, d["u"]),
            np.interp(grid.cell_centers, x, d["theta"]),
        )


def init_state(grid: MassGrid, initial: InitialData) -> FluidState:
    """Sample initial data onto the grid, checking positivity of v0 and theta0."""
    v, u, theta = initial.sample(grid)
    for name, arr in (("v", v), ("theta", theta)):
        bad = np.flatnonzero(~(arr > 0))
        if bad.size:
            raise InitializationError(name, int(bad[0]), float(arr[bad[0]]))
    state = FluidState(v=v, u=u, theta=theta, t=0.0, grid=grid)
    log.debug("initial momentum int u0 dx = %.3e", float(grid.node_weights @ state.u))
    return state


# ---------------------------------------------------------------------------
# configuration / history


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    theta_floor: float = 1e-10
    cfl_factor: float | None = None
    mms_enabled: bool = False
    store_history_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end!r}")
        if not self.theta_floor > 0:
            raise ValueError("theta_floor must be positive")
        if self.cfl_factor is not None and not self.cfl_factor > 0:
            raise ValueError("cfl_factor must be positive when given")
        if int(self.store_history_every) != self.store_history_every or self.store_history_every < 1:
            raise ValueError("store_history_every must be an integer >= 1")


class StateHistory:
    """Snapshots ``(t, v, u, theta, p)`` recorded during a run."""

    def __init__(self, initial: FluidState, schedule: PressureSchedule):
        self.initial = initial
        self.schedule = schedule
        self._t: list[float] = []
        self._v: list[np.ndarray] = []
        self._u: list[np.ndarray] = []
        self._theta: list[np.ndarray] = []
        self._cache = None

    def append(self, state: FluidState):
        if self._t and not state.t > self._t[-1]:
            raise ValueError("snapshot times must be strictly increasing")
        if not self._t and state.t != 0.0:
            raise ValueError("first snapshot must be at t = 0")
        self._t.append(state.t)
        self._v.append(state.v)
        self._u.append(state.u)
        self._theta.append(state.theta)
        self._cache = None

    def __len__(self):
        return len(self._t)

    def _arrays(self):
        if self._cache is None:
            self._cache = (
                np.array(self._t),
                np.array(self._v),
                np.array(self._u),
                np.array(self._theta),
            )
        return self._cache

    @property
    def times(self) -> np.ndarray:
        return self._arrays()[0]

    @property
    def v(self) -> np.ndarray:
        return self._arrays()[1]

    @property
    def u(self) -> np.ndarray:
        return self._arrays()[2]

    @property
    def theta(self) -> np.ndarray:
        return self._arrays()[3]

    @property
    def p(self) -> np.ndarray:
        return self.schedule.evaluate(self.times)[0]

    def state_at(self, k: int) -> FluidState:
        return FluidState(v=self._v[k], u=self._u[k], theta=self._theta[k], t=self._t[k], grid=self.initial.grid)


# ---------------------------------------------------------------------------
# stepping


class Forcing(Protocol):
    """Volumetric source terms added to the three balance laws."""

    def mass(self, x: np.ndarray, t: float) -> np.ndarray: ...

    def momentum(self, x: np.ndarray, t: float) -> np.ndarray: ...

    def energy(self, x: np.ndarray, t: float) -> np.ndarray: ...


def apply_boundary(state: FluidState, t: float, schedule: PressureSchedule):
    """Boundary data at time ``t``: stresses at (x=0, x=1) and heat fluxes there."""
    p = schedule(t)
    return (-p, -p), (0.0, 0.0)


def _solve_tridiagonal(lower, diag, upper, rhs):
    *_, x, info = dgtsv(lower, diag, upper, rhs)
    if info != 0:
        raise SolverError(f"tridiagonal solve failed (info={info})")
    return x


def stable_dt(state: FluidState, params: ThermoParams, cfl_factor: float) -> float:
    """Accuracy-driven step ``cfl * dx / max(|u| + sqrt(R theta))``."""
    c = np.sqrt(params.R * state.theta)
    speed = max(float(np.max(np.abs(state.u))), 0.0) + float(np.max(c))
    return cfl_factor * state.grid.dx / speed


def step(
    state: FluidState,
    schedule: PressureSchedule,
    params: ThermoParams,
    config: SolverConfig,
    forcing: Forcing | None = None,
    dt: float | None = None,
) -> FluidState:
    """Advance ``state`` by one time step (``config.dt`` unless ``dt`` is given)."""
    dt = config.dt if dt is None else dt
    grid = state.grid
    dx = grid.dx
    v, u, theta = state.v, state.u, state.theta
    t1 = state.t + dt
    if forcing is not None and not config.mms_enabled:
        raise ValueError("forcing supplied but config.mms_enabled is False")
    (s_left, s_right), _ = apply_boundary(state, t1, schedule)

    # (i) velocity
    w = grid.node_weights
    a = viscosity(theta, params) / v / dx
    P = params.R * theta / v
    diag = w / dt
    diag[:-1] += a
    diag[1:] += a
    rhs = w * u / dt
    rhs[:-1] -= P
    rhs[1:] += P
    rhs[0] -= s_left
    rhs[-1] += s_right
    if forcing is not None:
        rhs += w * forcing.momentum(grid.nodes, t1)
    u1 = _solve_tridiagonal(-a, diag, -a, rhs)

    # (ii) volume
    ux = np.diff(u1) / dx
    v1 = v + dt * ux
    if forcing is not None:
        v1 = v1 + dt * forcing.mass(grid.cell_centers, t1)
    if not np.all(v1 > 0):
        j = int(np.argmin(v1))
        raise VolumeCollapseError(f"volume collapse: v={v1[j]:.3e} in cell {j}", t=t1, index=j)

    # (iii) temperature
    k_cell = conductivity(theta, params) / v1
    k_face = 0.5 * (k_cell[1:] + k_cell[:-1]) / dx**2
    cv = params.c_v
    diag = np.full_like(theta, cv / dt)
    diag[:-1] += k_face
    diag[1:] += k_face
    source = (viscosity(theta, params) * ux - params.R * theta) * ux / v1
    if forcing is not None:
        source = source + forcing.energy(grid.cell_centers, t1)
    rhs = cv * theta / dt + source
    theta1 = _solve_tridiagonal(-k_face, diag, -k_face, rhs)
    if not np.all(theta1 > config.theta_floor):
        j = int(np.argmin(theta1))
        raise FloorBreachError(
            f"temperature-floor breach: theta={theta1[j]:.3e} < {config.theta_floor:g} in cell {j}",
            t=t1,
            index=j,
        )
    return FluidState(v=v1, u=u1, theta=theta1, t=t1, grid=grid)


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunResult:
    final: FluidState
    history: StateHistory
    diagnostics: "DiagnosticsSeries"
    steps: int = 0
    work_integral: float = 0.0
    max_v_mean: float = 0.0
    min_v: float = math.nan
    min_theta: float = math.nan

    def __iter__(self):
        return iter((self.final, self.history, self.diagnostics))


def _time_grid(config: SolverConfig) -> int:
    return math.ceil(config.t_end / config.dt - 1e-9)


def run(
    initial: FluidState,
    schedule: PressureSchedule,
    params: ThermoParams,
    config: SolverConfig,
    forcing: Forcing | None = None,
    progress: Callable[[FluidState], None] | None = None,
) -> RunResult:
    """Advance ``initial`` to ``config.t_end``.

    Snapshots and diagnostics samples are taken every
    ``config.store_history_every`` steps and at the final time.  The work
    integral ``int p'(t) (int v dx) dt`` is accumulated by the trapezoid rule
    at every step so the energy bookkeeping does not depend on the stride.
    """
    from .diagnostics import DiagnosticsSeries, SampleAccumulator

    history = StateHistory(initial, schedule)
    series = DiagnosticsSeries()
    acc = SampleAccumulator(initial, schedule, params)
    history.append(initial)
    series.append(acc.sample(initial))

    state = initial
    stride = config.store_history_every
    n_fixed = _time_grid(config)
    k = 0
    while True:
        if config.cfl_factor is None:
            if k >= n_fixed:
                break
            t_next = config.t_end if k == n_fixed - 1 else (k + 1) * config.dt
        else:
            if state.t >= config.t_end * (1 - 1e-14):
                break
            t_next = min(state.t + stable_dt(state, params, config.cfl_factor), config.t_end)
            if config.t_end - t_next < 1e-12 * max(1.0, config.t_end):
                t_next = config.t_end
        dt = t_next - state.t
        try:
            new = step(state, schedule, params, config, forcing, dt=dt)
        except SolverError as exc:
            err = exc.at_time(t_next) if exc.t is None else exc
            if not history._t or history._t[-1] != state.t:
                history.append(state)
                series.append(acc.sample(state))
            err.partial = RunResult(state, history, series, k, acc.work_integral, acc.max_v_mean, acc.min_v, acc.min_theta)
            raise err from (exc if err is not exc else None)
        # exact end time, no accumulated drift from repeated additions
        new = FluidState(v=new.v, u=new.u, theta=new.theta, t=t_next, grid=new.grid)
        acc.advance(state, new)
        state = new
        k += 1
        last = (config.cfl_factor is None and k == n_fixed) or (
            config.cfl_factor is not None and state.t >= config.t_end
        )
        if k % stride == 0 or last:
            history.append(state)
            series.append(acc.sample(state))
            if progress is not None:
                progress(state)
    return RunResult(
        final=state,
        history=history,
        diagnostics=series,
        steps=k,
        work_integral=acc.work_integral,
        max_v_mean=acc.max_v_mean,
        min_v=acc.min_v,
        min_theta=acc.min_theta,
    )
