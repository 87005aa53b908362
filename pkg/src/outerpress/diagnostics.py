"""Functionals, bounds and decay fits evaluated on discrete states.

Cell quantities (v, theta) are integrated with the midpoint rule and node
quantities (u) with the trapezoid rule, matching the staggering of the
solver.  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import integrate

from .errors import DomainError, FitError
from .model import FluidState, ThermoParams, conductivity, stress, viscosity
from .schedule import PressureSchedule

FIT_FLOOR = 1e-14


def _require_positive(state: FluidState):
    if not np.all(state.v > 0):
        raise DomainError("v")
    if not np.all(state.theta > 0):
        raise DomainError("theta")


# ---------------------------------------------------------------------------
# functionals of a single state


def momentum(state: FluidState) -> float:
    """Trapezoid approximation of ``int u dx``."""
    return float(state.grid.node_weights @ state.u)


def kinetic_energy(state: FluidState) -> float:
    return float(state.grid.node_weights @ (0.5 * state.u**2))


def total_energy(state: FluidState, p: float, params: ThermoParams = ThermoParams()) -> float:
    """``int (c_v theta + u^2/2 + p v) dx``; p is the current outer pressure."""
    dx = state.grid.dx
    return float(dx * np.sum(params.c_v * state.theta + p * state.v)) + kinetic_energy(state)


def entropy_functional(state: FluidState) -> float:
    """``int (u^2/2 + v - ln v + theta - ln theta) dx`` with u averaged to cells."""
    _require_positive(state)
    v, th = state.v, state.theta
    uc = 0.5 * (state.u[1:] + state.u[:-1])
    integrand = 0.5 * uc**2 + (v - np.log(v)) + (th - np.log(th))
    return float(state.grid.dx * np.sum(integrand))


def _node_gradients(cell_values, dx):
    return np.diff(cell_values) / dx


def dissipation_V(state: FluidState, params: ThermoParams = ThermoParams()) -> float:
    """Entropy dissipation ``int (kappa theta_x^2 / (v theta^2) + mu u_x^2 / (v theta)) dx``.

    ``theta_x`` lives on nodes, the two boundary nodes copying the nearest
    interior value (half weight); ``u_x`` lives on cells.
    """
    _require_positive(state)
    dx = state.grid.dx
    v, th = state.v, state.theta
    gth = _node_gradients(th, dx)
    th_n = 0.5 * (th[1:] + th[:-1])
    v_n = 0.5 * (v[1:] + v[:-1])
    heat = conductivity(th_n, params) * gth**2 / (v_n * th_n**2)
    heat_sum = float(np.sum(heat))
    if gth.size:
        for j, g in ((0, gth[0]), (-1, gth[-1])):
            heat_sum += 0.5 * float(conductivity(th[j], params)) * g**2 / (v[j] * th[j] ** 2)
    ux = np.diff(state.u) / dx
    visc = viscosity(th, params) * ux**2 / (v * th)
    return float(dx * (heat_sum + np.sum(visc)))


def grad_norms(state: FluidState) -> tuple[float, float, float]:
    """``(int v_x^2, int u_x^2, int theta_x^2)`` from face differences.

    The gradients at the two boundary nodes are copied from the nearest
    interior node and carry half weight.
    """
    dx = state.grid.dx
    ux = np.diff(state.u) / dx
    iu = float(dx * np.sum(ux**2))
    if state.grid.n_cells == 1:
        return 0.0, iu, 0.0
    gv = _node_gradients(state.v, dx)
    gth = _node_gradients(state.theta, dx)
    iv = float(dx * (np.sum(gv**2) + 0.5 * gv[0] ** 2 + 0.5 * gv[-1] ** 2))
    ith = float(dx * (np.sum(gth**2) + 0.5 * gth[0] ** 2 + 0.5 * gth[-1] ** 2))
    return iv, iu, ith


def h1_distance(state: FluidState, v_hat: float, theta_hat: float) -> tuple[float, float, float]:
    """H^1 distances of ``(v, u, theta)`` from the constant state ``(v_hat, 0, theta_hat)``."""
    dx = state.grid.dx
    iv, iu, ith = grad_norms(state)
    l2_v = dx * float(np.sum((state.v - v_hat) ** 2))
    l2_u = float(state.grid.node_weights @ state.u**2)
    l2_th = dx * float(np.sum((state.theta - theta_hat) ** 2))
    return math.sqrt(l2_v + iv), math.sqrt(l2_u + iu), math.sqrt(l2_th + ith)


def boundary_stress_mismatch(state: FluidState, p: float, params: ThermoParams = ThermoParams()) -> float:
    """Largest ``|sigma + p|`` over the two ends, using the end cells.

    Zero when the data are compatible with the outer-pressure condition.
    """
    _require_positive(state)
    dx = state.grid.dx
    worst = 0.0
    for j, du in ((0, state.u[1] - state.u[0]), (-1, state.u[-1] - state.u[-2])):
        sig = stress(du / dx, state.v[j], state.theta[j], params)
        worst = max(worst, abs(sig + p))
    return float(worst)


# ---------------------------------------------------------------------------
# schedule envelopes


def Y_of_t(schedule: PressureSchedule, t: float) -> float:
    """``exp(int_0^t p)``."""
    return math.exp(schedule.integral(t))


def _weighted_lag(schedule: PressureSchedule, t: float, P_bar: float) -> float:
    # (1/Y(t)) int_0^t Y(s) (P_bar - p(s)) ds, written with exp(I(s) - I(t)) to avoid overflow
    if t == 0:
        return 0.0
    It = schedule.integral(t)

    def integrand(s):
        return math.exp(schedule.integral(s) - It) * (P_bar - schedule(s))

    val, _ = integrate.quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=500)
    return val


def F_of_t(schedule: PressureSchedule, t: float, P_bar: float | None = None) -> float:
    """Decay envelope ``Y^-2 + (Y^-1 int_0^t Y (P_bar - p))^2 + int_t^inf |p'|``."""
    P_bar = schedule.P_bar if P_bar is None else P_bar
    if P_bar is None:
        raise ValueError("F(t) needs the limit pressure P_bar")
    lag = _weighted_lag(schedule, t, P_bar)
    return math.exp(-2.0 * schedule.integral(t)) + lag**2 + schedule.tail_variation(t)


# ---------------------------------------------------------------------------
# samples and series


@dataclass(frozen=True)
class DiagnosticsSample:
    t: float
    p: float
    total_energy: float
    entropy_functional: float
    dissipation_V: float
    theta_mean: float
    v_mean: float
    min_v: float
    max_v: float
    min_theta: float
    max_theta: float
    int_vx2: float
    int_ux2: float
    int_thetax2: float
    momentum: float
    Y: float
    F: float
    energy_residual: float
    work_integral: float
    int_u2: float

    @property
    def extrema(self):
        return self.min_v, self.max_v, self.min_theta, self.max_theta

    @property
    def grad_norms(self):
        return self.int_vx2, self.int_ux2, self.int_thetax2


SAMPLE_FIELDS = tuple(f.name for f in fields(DiagnosticsSample))


class DiagnosticsSeries:
    """Chronological list of `DiagnosticsSample` with column access."""

    def __init__(self, samples=()):
        self.samples: list[DiagnosticsSample] = list(samples)

    def append(self, sample: DiagnosticsSample):
        self.samples.append(sample)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, k):
        return self.samples[k]

    def column(self, name: str) -> np.ndarray:
        if name not in SAMPLE_FIELDS:
            raise KeyError(name)
        return np.array([getattr(s, name) for s in self.samples])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def as_dicts(self):
        return [asdict(s) for s in self.samples]


class SampleAccumulator:
    """Running integrals a run needs for its samples.

    Tracks ``int_0^t p'(s) (int v dx) ds`` (energy bookkeeping) and the
    weighted pressure lag ``Y(t)^-1 int_0^t Y (P_bar - p)`` (middle term of F)
    with the trapezoid rule on the solver's own time steps.
    """

    def __init__(self, initial: FluidState, schedule: PressureSchedule, params: ThermoParams):
        self.schedule = schedule
        self.params = params
        p0 = schedule(0.0)
        self.E0 = total_energy(initial, p0, params)
        self.work_integral = 0.0
        self.lag = 0.0
        self.P_bar = schedule.P_bar
        self.max_v_mean = float(np.mean(initial.v))
        self.min_v = float(np.min(initial.v))
        self.min_theta = float(np.min(initial.theta))

    def advance(self, old: FluidState, new: FluidState):
        sch = self.schedule
        p_old, dp_old = sch.evaluate(old.t)
        p_new, dp_new = sch.evaluate(new.t)
        dt = new.t - old.t
        vbar_old = float(np.mean(old.v))
        vbar_new = float(np.mean(new.v))
        self.work_integral += 0.5 * dt * (dp_old * vbar_old + dp_new * vbar_new)
        self.max_v_mean = max(self.max_v_mean, vbar_new)
        self.min_v = min(self.min_v, float(np.min(new.v)))
        self.min_theta = min(self.min_theta, float(np.min(new.theta)))
        if self.P_bar is not None:
            decay = math.exp(-sch.increment(old.t, new.t))
            self.lag = decay * self.lag + 0.5 * dt * (decay * (self.P_bar - p_old) + (self.P_bar - p_new))

    def sample(self, state: FluidState) -> DiagnosticsSample:
        sch = self.schedule
        p = sch(state.t)
        I = sch.integral(state.t)
        E = total_energy(state, p, self.params)
        iv, iu, ith = grad_norms(state)
        if self.P_bar is None:
            F = math.nan
        else:
            F = math.exp(-2.0 * I) + self.lag**2 + sch.tail_variation(state.t)
        return DiagnosticsSample(
            t=state.t,
            p=p,
            total_energy=E,
            entropy_functional=entropy_functional(state),
            dissipation_V=dissipation_V(state, self.params),
            theta_mean=float(np.mean(state.theta)),
            v_mean=float(np.mean(state.v)),
            min_v=float(np.min(state.v)),
            max_v=float(np.max(state.v)),
            min_theta=float(np.min(state.theta)),
            max_theta=float(np.max(state.theta)),
            int_vx2=iv,
            int_ux2=iu,
            int_thetax2=ith,
            momentum=momentum(state),
            Y=math.exp(I) if I < 700 else math.inf,
            F=F,
            energy_residual=abs(E - self.E0 - self.work_integral),
            work_integral=self.work_integral,
            int_u2=float(state.grid.node_weights @ state.u**2),
        )


def energy_balance_residual(samples, schedule: PressureSchedule) -> np.ndarray:
    """``E(t) - E(0) - int_0^t p'(s) vbar(s) ds`` using the sampled ``vbar``.

    The time integral is a cumulative trapezoid over the sample times, so the
    result depends on the sampling stride (unlike ``sample.energy_residual``,
    which is accumulated on every solver step).
    """
    series = samples if isinstance(samples, DiagnosticsSeries) else DiagnosticsSeries(samples)
    t = series.times
    if t.size == 0:
        return np.zeros(0)
    if np.any(np.diff(t) <= 0):
        raise ValueError("samples must be in strictly increasing time order")
    E = series.column("total_energy")
    vbar = series.column("v_mean")
    dp = schedule.evaluate(t)[1]
    work = integrate.cumulative_trapezoid(dp * vbar, t, initial=0.0)
    return E - E[0] - work


# ---------------------------------------------------------------------------
# Jensen bracket for the mean temperature


@dataclass(frozen=True)
class JensenBounds:
    C0: float
    alpha1: float
    alpha2: float

    def residuals(self) -> tuple[float, float]:
        f = lambda x: abs(x - math.log(x) - self.C0)  # noqa: E731
        return f(self.alpha1), f(self.alpha2)


def _bisect(f, lo, hi, max_iter=400):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def jensen_bounds(C0: float) -> JensenBounds:
    """Both roots of ``x - ln x = C0`` (requires ``C0 >= 1``)."""
    if not C0 >= 1:
        raise DomainError("C0", f"x - ln x = C0 has no real root for C0 = {C0!r} < 1")
    if C0 == 1:
        return JensenBounds(1.0, 1.0, 1.0)

    # bisect on y = ln x: g(y) = e^y - y - C0 is convex with g(0) = 1 - C0 < 0,
    # g(-C0 - 1) = e^(-C0-1) + 1 > 0 and g(ln(C0) + 2) > 0
    def g(y):
        return math.exp(y) - y - C0

    lo = math.exp(_bisect(g, -C0 - 1.0, 0.0))
    up = math.exp(_bisect(g, 0.0, math.log(C0) + 2.0))
    return JensenBounds(float(C0), lo, up)


@dataclass(frozen=True)
class JensenReport:
    passed: bool
    worst_margin: float
    worst_time: float
    C0_star: float
    bounds: JensenBounds


def jensen_check(series) -> JensenReport:
    """Check ``alpha1(C0*) <= mean(theta) <= alpha2(C0*)`` at every sample.

    ``C0*`` is the running maximum of the sampled entropy functional, which
    bounds ``mean(theta) - ln mean(theta)`` from above by convexity.
    """
    series = series if isinstance(series, DiagnosticsSeries) else DiagnosticsSeries(series)
    worst, worst_t = math.inf, math.nan
    c0_star = -math.inf
    bounds = None
    cache: dict[float, JensenBounds] = {}
    for s in series:
        c0_star = max(c0_star, s.entropy_functional)
        if c0_star not in cache:
            cache[c0_star] = jensen_bounds(c0_star)
        bounds = cache[c0_star]
        margin = min(s.theta_mean - bounds.alpha1, bounds.alpha2 - s.theta_mean)
        if margin < worst:
            worst, worst_t = margin, s.t
    return JensenReport(worst >= 0, float(worst), float(worst_t), float(c0_star), bounds)


# ---------------------------------------------------------------------------
# decay fits


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    window: tuple[float, float]
    n_points: int

    @property
    def lam(self):
        return self.rate


def fit_decay_rate(t, y, t_start: float | None = None, t_stop: float | None = None,
                   floor: float = FIT_FLOOR, min_points: int = 8) -> DecayFit:
    """Least-squares fit of ``ln y = a - rate * t``.

    Only samples with ``y > floor`` are used.  Without ``t_start`` the window
    is the latter half of those samples.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise FitError("t and y must have the same length")
    keep = y > floor
    if t_stop is not None:
        keep &= t <= t_stop
    tk, yk = t[keep], y[keep]
    if t_start is None:
        half = tk.size // 2
        tk, yk = tk[half:], yk[half:]
    else:
        sel = tk >= t_start
        tk, yk = tk[sel], yk[sel]
    if tk.size < min_points:
        raise FitError(f"need at least {min_points} points above {floor:g} in the window, got {tk.size}")
    z = np.log(yk)
    tc = tk - tk.mean()
    zc = z - z.mean()
    stt = float(tc @ tc)
    if stt == 0:
        raise FitError("window has zero time span")
    slope = float(tc @ zc) / stt
    ss_tot = float(zc @ zc)
    resid = zc - slope * tc
    ss_res = float(resid @ resid)
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return DecayFit(rate=-slope, r_squared=r2, window=(float(tk[0]), float(tk[-1])), n_points=int(tk.size))
