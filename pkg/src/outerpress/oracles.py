"""Independent references for the solver.

* `representation_v` rebuilds v(x, t) from a stored velocity/temperature
  history through the closed-form Lagrangian identity for ln v.
* `stationary_state` predicts the large-time limit from the initial totals
  and the accumulated boundary work.
* `uniform_ode_oracle` is an exact spatially uniform solution driven by its
  own induced outer pressure.
* `MmsCase` is a manufactured smooth solution with hand-derived forcing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .diagnostics import total_energy
from .errors import CoverageError, DomainError, ScheduleError
from .model import FluidState, MassGrid, ThermoParams
from .schedule import PressureSchedule
from .solver import FunctionInitial, StateHistory


# ---------------------------------------------------------------------------
# representation of v


def _primitive_at_centers(d: np.ndarray, dx: float) -> np.ndarray:
    """Trapezoid ``int_0^{x_j} d`` at cell centers for node data ``d`` (last axis)."""
    node_int = np.concatenate(
        [np.zeros(d.shape[:-1] + (1,)), np.cumsum(0.5 * dx * (d[..., 1:] + d[..., :-1]), axis=-1)],
        axis=-1,
    )
    # half cell from node j to the center, with u at the center taken as the node average
    return node_int[..., :-1] + dx / 8.0 * (3.0 * d[..., :-1] + d[..., 1:])


def _phi(z):
    """``(e^z - 1)/z`` and ``(e^z (z - 1) + 1)/z^2``, with series near zero."""
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    phi1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24, (ez - 1) / zs)
    phi2 = np.where(small, 0.5 + z / 3 + z**2 / 8 + z**3 / 30, (ez * (zs - 1) + 1) / zs**2)
    return phi1, phi2


def _fitted_trapezoid(f, ts, log_w):
    """``int f(s) exp(log_w(s)) ds`` with f linear and log_w linear on each interval.

    Exact when both are, e.g. a constant integrand under a constant pressure.
    """
    h = np.diff(ts)[:, None]
    z = np.diff(log_w)[:, None] * np.ones_like(f[1:])
    phi1, phi2 = _phi(z)
    wa = np.exp(log_w[:-1])[:, None]
    return np.sum(h * wa * (f[:-1] * phi1 + (f[1:] - f[:-1]) * phi2), axis=0)


def representation_v(history: StateHistory, t: float, params: ThermoParams = ThermoParams(),
                     x=None) -> np.ndarray:
    """Specific volume at time ``t`` rebuilt from the history.

    Uses ``v B Y = v0 + R int_0^t B theta Y ds`` with
    ``B = exp(int_0^x (u0 - u) dy)`` and ``Y = exp(int_0^t p)``; the time
    integral is a trapezoid rule over the stored snapshots in which the
    exponential weight is integrated exactly between snapshots.  Only valid for
    constant viscosity ``mu_tilde = 1``.

    Returns values at the cell centers, or interpolated to ``x`` if given.
    """
    if params.alpha != 0 or params.mu_tilde != 1:
        raise ValueError("the representation formula needs alpha = 0 and mu_tilde = 1")
    times = history.times
    if times.size == 0 or times[0] != 0.0:
        raise CoverageError("history must start at t = 0")
    tol = 1e-9 * max(1.0, abs(t))
    k = int(np.searchsorted(times, t - tol))
    if k >= times.size or abs(times[k] - t) > tol:
        raise CoverageError(
            f"no snapshot at t={t:g}; history covers [0, {times[-1]:g}] at its stored times only"
        )
    grid = history.initial.grid
    sch = history.schedule
    u0 = history.initial.u
    v0 = history.initial.v
    if k == 0:
        v_rep = np.array(v0, dtype=float)
    else:
        U = history.u[: k + 1]
        TH = history.theta[: k + 1]
        ts = times[: k + 1]
        B = np.exp(_primitive_at_centers(u0[None, :] - U, grid.dx))
        I = np.array([sch.integral(s) for s in ts])
        weight = np.exp(I - I[-1])  # Y(s)/Y(t)
        acc = _fitted_trapezoid(params.R * B * TH, ts, I - I[-1])
        v_rep = (v0 * weight[0] + acc) / B[-1]
    if x is None:
        return v_rep
    return np.interp(x, grid.cell_centers, v_rep)


# ---------------------------------------------------------------------------
# stationary state


@dataclass(frozen=True)
class StationaryState:
    """Predicted limit ``(v_hat, 0, theta_hat)``.

    ``tail_bound`` bounds the neglected part ``int_T^inf p' vbar`` of the
    energy budget; the induced uncertainties on v_hat and theta_hat are
    exposed as properties.
    """

    v_hat: float
    theta_hat: float
    P_bar: float
    correction: float
    tail_bound: float
    initial_energy: float
    horizon: float
    R: float = 1.0
    c_v: float = 1.0
    insufficient_horizon: bool = False

    @property
    def v_uncertainty(self) -> float:
        return self.R * self.tail_bound / ((self.c_v + self.R) * self.P_bar)

    @property
    def theta_uncertainty(self) -> float:
        return self.tail_bound / (self.c_v + self.R)


def stationary_state(
    initial: FluidState,
    schedule: PressureSchedule,
    correction: float,
    horizon: float,
    max_v_mean: float,
    params: ThermoParams = ThermoParams(),
    tolerance: float = 1e-8,
) -> StationaryState:
    """Large-time limit from the energy budget.

    At rest with ``theta = P_bar v / R`` the energy
    ``int (c_v theta + u^2/2 + p v)`` equals ``(c_v + R) theta_hat``, and it
    equals the initial energy plus the boundary work
    ``int_0^inf p'(s) (int v dx) ds``.  ``correction`` is that work integral
    accumulated up to ``horizon``.  With the default constants this gives
    ``v_hat = E / (2 P_bar)`` and ``theta_hat = E / 2``.
    """
    P_bar = schedule.P_bar
    if P_bar is None or not P_bar > 0:
        raise ScheduleError("schedule has no positive limit pressure P_bar")
    E0 = total_energy(initial, schedule(0.0), params)
    E_inf = E0 + correction
    theta_hat = E_inf / (params.c_v + params.R)
    v_hat = params.R * theta_hat / P_bar
    if not (theta_hat > 0 and v_hat > 0):
        raise DomainError("v_hat", f"non-positive stationary state (v_hat={v_hat!r})")
    tail = schedule.tail_variation(horizon) * max_v_mean
    short = tail > tolerance
    if short:
        warnings.warn(
            f"insufficient horizon: neglected boundary work up to {tail:.3e} exceeds {tolerance:.1e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return StationaryState(
        v_hat=v_hat,
        theta_hat=theta_hat,
        P_bar=P_bar,
        correction=correction,
        tail_bound=tail,
        initial_energy=E0,
        horizon=horizon,
        R=params.R,
        c_v=params.c_v,
        insufficient_horizon=short,
    )


def stationary_from_run(result, schedule, params=ThermoParams(), tolerance=1e-8) -> StationaryState:
    """`stationary_state` using the bookkeeping stored on a `RunResult`."""
    return stationary_state(
        result.history.initial,
        schedule,
        result.work_integral,
        result.final.t,
        result.max_v_mean,
        params,
        tolerance,
    )


def equilibrium_state(P_bar: float, v_hat: float, grid: MassGrid,
                      params: ThermoParams = ThermoParams()) -> FluidState:
    """Uniform rest state balancing the outer pressure ``P_bar``."""
    if not (P_bar > 0 and v_hat > 0):
        raise DomainError("P_bar" if not P_bar > 0 else "v_hat")
    n = grid.n_cells
    return FluidState(
        v=np.full(n, float(v_hat)),
        u=np.zeros(n + 1),
        theta=np.full(n, P_bar * v_hat / params.R),
        t=0.0,
        grid=grid,
    )


# ---------------------------------------------------------------------------
# uniform expansion


def uniform_ode_oracle(v0: float, theta0: float, c: float, t):
    """Exact uniform flow ``u = c (x - 1/2)`` for the normalized gas.

    Returns ``(v, theta, p)`` with ``v = v0 + c t``,
    ``theta = (v0 theta0 + c^2 t)/(v0 + c t)`` and the outer pressure
    ``p = (theta - c)/v`` that keeps the flow uniform.
    """
    if not (v0 > 0 and theta0 > 0):
        raise DomainError("v0" if not v0 > 0 else "theta0")
    t = np.asarray(t, dtype=float)
    v = v0 + c * t
    if np.any(v <= 0):
        raise DomainError("v", "uniform flow collapses the volume before the requested time")
    theta = (v0 * theta0 + c * c * t) / v
    # theta - c = v0 (theta0 - c) / v
    if np.any(theta <= c):
        raise DomainError("p", "induced outer pressure is not positive (need theta > c)")
    p = v0 * (theta0 - c) / v**2
    if t.ndim == 0:
        return float(v), float(theta), float(p)
    return v, theta, p


def uniform_flow_schedule(v0: float, theta0: float, c: float) -> PressureSchedule:
    """Induced outer pressure of `uniform_ode_oracle` as a schedule."""
    uniform_ode_oracle(v0, theta0, c, 0.0)
    if c == 0:
        return PressureSchedule.constant(theta0 / v0)
    k = v0 * (theta0 - c)
    return PressureSchedule.function(
        p=lambda s: k / (v0 + c * s) ** 2,
        dp=lambda s: -2.0 * c * k / (v0 + c * s) ** 3,
        P_bar=None,
        integral=lambda s: (theta0 - c) * s / (v0 + c * s),
    )


def uniform_flow_initial(v0: float, theta0: float, c: float) -> FunctionInitial:
    return FunctionInitial(
        v=lambda x: np.full_like(x, v0),
        u=lambda x: c * (x - 0.5),
        theta=lambda x: np.full_like(x, theta0),
    )


def uniform_energy_residual(v0: float, theta0: float, c: float, t: float) -> float:
    """``E(t) - E(0) - int_0^t p' v`` from the closed forms (should be ~0)."""
    def energy(s):
        v, th, p = uniform_ode_oracle(v0, theta0, c, s)
        return th + c * c / 24.0 + p * v

    sch = uniform_flow_schedule(v0, theta0, c)
    work, _ = integrate.quad(
        lambda s: sch.evaluate(s)[1] * uniform_ode_oracle(v0, theta0, c, s)[0],
        0.0, t, epsabs=1e-14, epsrel=1e-13,
    )
    return energy(t) - energy(0.0) - work


# ---------------------------------------------------------------------------
# manufactured solution

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MmsCase:
    """Manufactured solution on the family

        v*     = a0 + a1 cos(2 pi x) e^-t
        u*     = -(a1 / 2 pi) sin(2 pi x) e^-t      (so v*_t = u*_x)
        theta* = d0 + d1 cos(2 pi x) e^-t

    ``theta*_x`` vanishes at both ends, and all three fields take equal values
    at x = 0 and x = 1, so one outer pressure serves both boundaries.
    """

    a0: float = 1.0
    a1: float = 0.2
    d0: float = 1.0
    d1: float = 0.2
    params: ThermoParams = ThermoParams()

    def __post_init__(self):
        if not (self.a0 - abs(self.a1) > 0):
            raise DomainError("v", "manufactured v* must stay positive: need a0 > |a1|")
        if not (self.d0 - abs(self.d1) > 0):
            raise DomainError("theta", "manufactured theta* must stay positive: need d0 > |d1|")
        if not self._p(0.0) > 0:
            raise DomainError("p", "manufactured boundary pressure is not positive")

    # fields and derivatives
    def _fields(self, x, t):
        x = np.asarray(x, dtype=float)
        e = math.exp(-t)
        C, S = np.cos(TWO_PI * x), np.sin(TWO_PI * x)
        k, a1, d1 = TWO_PI, self.a1, self.d1
        b1 = -a1 / k
        return dict(
            v=self.a0 + a1 * C * e,
            v_t=-a1 * C * e,
            v_x=-a1 * k * S * e,
            u=b1 * S * e,
            u_t=-b1 * S * e,
            u_x=-a1 * C * e,
            u_xx=a1 * k * S * e,
            th=self.d0 + d1 * C * e,
            th_t=-d1 * C * e,
            th_x=-d1 * k * S * e,
            th_xx=-d1 * k * k * C * e,
        )

    def _mu(self, th):
        p = self.params
        return p.mu_tilde * th**p.alpha, p.mu_tilde * p.alpha * th ** (p.alpha - 1.0)

    def _kappa(self, th):
        p = self.params
        return p.kappa_tilde * th**p.beta, p.kappa_tilde * p.beta * th ** (p.beta - 1.0)

    def targets(self, x, t):
        f = self._fields(x, t)
        return f["v"], f["u"], f["th"]

    def mass(self, x, t):
        f = self._fields(x, t)
        return f["v_t"] - f["u_x"]

    def momentum(self, x, t):
        f = self._fields(x, t)
        R = self.params.R
        v, v_x, th, th_x = f["v"], f["v_x"], f["th"], f["th_x"]
        mu, dmu = self._mu(th)
        sigma_x = (
            (dmu * th_x * f["u_x"] + mu * f["u_xx"]) / v
            - mu * f["u_x"] * v_x / v**2
            - R * th_x / v
            + R * th * v_x / v**2
        )
        return f["u_t"] - sigma_x

    def energy(self, x, t):
        f = self._fields(x, t)
        prm = self.params
        v, v_x, th, th_x, u_x = f["v"], f["v_x"], f["th"], f["th_x"], f["u_x"]
        mu, _ = self._mu(th)
        kap, dkap = self._kappa(th)
        flux_x = (dkap * th_x**2 + kap * f["th_xx"]) / v - kap * th_x * v_x / v**2
        return prm.c_v * f["th_t"] + prm.R * th * u_x / v - mu * u_x**2 / v - flux_x

    def stress(self, x, t):
        f = self._fields(x, t)
        mu, _ = self._mu(f["th"])
        return (mu * f["u_x"] - self.params.R * f["th"]) / f["v"]

    # boundary pressure p*(t) = -stress*(0, t)
    def _p(self, t):
        return float(-self.stress(0.0, t))

    def _dp(self, t):
        e = math.exp(-t)
        prm = self.params
        th = self.d0 + self.d1 * e
        th_t = -self.d1 * e
        mu, dmu = self._mu(th)
        ux, ux_t = -self.a1 * e, self.a1 * e
        num = prm.R * th - mu * ux
        dnum = prm.R * th_t - (dmu * th_t * ux + mu * ux_t)
        den = self.a0 + self.a1 * e
        dden = -self.a1 * e
        return (dnum * den - num * dden) / den**2

    def schedule(self) -> PressureSchedule:
        return PressureSchedule.function(p=self._p, dp=self._dp, P_bar=self.params.R * self.d0 / self.a0)

    def initial(self) -> FunctionInitial:
        return FunctionInitial(
            v=lambda x: self.targets(x, 0.0)[0],
            u=lambda x: self.targets(x, 0.0)[1],
            theta=lambda x: self.targets(x, 0.0)[2],
        )


def mms_reference(case: MmsCase, x, t):
    """Targets ``(v*, u*, theta*)`` and forcings ``(mass, momentum, energy)`` at ``(x, t)``."""
    return case.targets(x, t), (case.mass(x, t), case.momentum(x, t), case.energy(x, t))


def mms_errors(case: MmsCase, state: FluidState) -> tuple[float, float, float]:
    """Discrete L2 errors of ``state`` against the manufactured targets."""
    g = state.grid
    v, _, th = case.targets(g.cell_centers, state.t)
    u = case.targets(g.nodes, state.t)[1]
    ev = math.sqrt(g.dx * float(np.sum((state.v - v) ** 2)))
    eu = math.sqrt(float(g.node_weights @ (state.u - u) ** 2))
    eth = math.sqrt(g.dx * float(np.sum((state.theta - th) ** 2)))
    return ev, eu, eth
