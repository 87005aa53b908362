"""Outer-pressure schedules p(t) and their summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import ScheduleError, ScheduleRangeError

_GAUSS5 = np.polynomial.legendre.leggauss(5)

KINDS = ("constant", "exponential", "smoothstep", "tabulated", "function")


@dataclass(frozen=True, eq=False)
class PressureSchedule:
    """A positive, continuously differentiable boundary pressure.

    Build instances through the named constructors (`constant`,
    `exponential`, `smoothstep`, `tabulated`, `function`); ``params`` holds
    the kind-specific numbers.
    """

    kind: str
    params: dict = field(default_factory=dict)
    _interp: PchipInterpolator | None = field(default=None, repr=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, P_bar: float) -> "PressureSchedule":
        if not P_bar > 0:
            raise ScheduleError(f"constant pressure must be positive, got {P_bar!r}")
        return cls("constant", {"P_bar": float(P_bar)})

    @classmethod
    def exponential(cls, p0: float, P_bar: float, rate: float) -> "PressureSchedule":
        """``p(t) = P_bar + (p0 - P_bar) exp(-rate t)``."""
        if not (p0 > 0 and P_bar > 0):
            raise ScheduleError(f"p0 and P_bar must be positive, got p0={p0!r}, P_bar={P_bar!r}")
        if not rate > 0:
            raise ScheduleError(f"rate must be positive, got {rate!r}")
        return cls("exponential", {"p0": float(p0), "P_bar": float(P_bar), "rate": float(rate)})

    @classmethod
    def smoothstep(cls, p0: float, p1: float, t0: float, t1: float) -> "PressureSchedule":
        """Cubic Hermite blend from ``p0`` (t <= t0) to ``p1`` (t >= t1)."""
        if not (p0 > 0 and p1 > 0):
            raise ScheduleError("smoothstep end values must be positive")
        if not (0 <= t0 < t1):
            raise ScheduleError(f"need 0 <= t0 < t1, got t0={t0!r}, t1={t1!r}")
        return cls("smoothstep", {"p0": float(p0), "p1": float(p1), "t0": float(t0), "t1": float(t1)})

    @classmethod
    def tabulated(cls, times, values) -> "PressureSchedule":
        """Monotone piecewise-cubic (PCHIP) interpolation of samples."""
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ScheduleError("tabulated schedule needs matching 1-D times/values, at least 2 samples")
        if times[0] != 0.0:
            raise ScheduleError("tabulated schedule must start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ScheduleError("tabulated times must be strictly increasing")
        if np.any(values <= 0):
            bad = int(np.argmin(values))
            raise ScheduleError(f"tabulated pressure must be positive; sample {bad} is {values[bad]!r}")
        interp = PchipInterpolator(times, values, extrapolate=False)
        return cls("tabulated", {"times": times, "values": values}, interp)

    @classmethod
    def function(
        cls,
        p: Callable[[float], float],
        dp: Callable[[float], float],
        P_bar: float | None = None,
        integral: Callable[[float], float] | None = None,
    ) -> "PressureSchedule":
        """Schedule given by callables; used for induced/manufactured pressures."""
        return cls("function", {"p": p, "dp": dp, "P_bar": P_bar, "integral": integral})

    # -- evaluation -------------------------------------------------------
    def __call__(self, t):
        return self.evaluate(t)[0]

    def evaluate(self, t):
        """Return ``(p(t), p'(t))``; scalar in, scalars out."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ScheduleRangeError("schedule evaluated at negative time")
        k, prm = self.kind, self.params
        if k == "constant":
            p = np.full_like(t, prm["P_bar"])
            dp = np.zeros_like(t)
        elif k == "exponential":
            r, amp = prm["rate"], prm["p0"] - prm["P_bar"]
            e = np.exp(-r * t)
            p = prm["P_bar"] + amp * e
            dp = -r * amp * e
        elif k == "smoothstep":
            L = prm["t1"] - prm["t0"]
            s = np.clip((t - prm["t0"]) / L, 0.0, 1.0)
            jump = prm["p1"] - prm["p0"]
            p = prm["p0"] + jump * s * s * (3.0 - 2.0 * s)
            dp = jump * 6.0 * s * (1.0 - s) / L
        elif k == "tabulated":
            if np.any(t > prm["times"][-1]):
                raise ScheduleRangeError(
                    f"tabulated schedule defined on [0, {prm['times'][-1]:g}], queried at t={float(np.max(t)):g}"
                )
            p = self._interp(t)
            dp = self._interp.derivative()(t)
        elif k == "function":
            p = np.vectorize(prm["p"], otypes=[float])(t)
            dp = np.vectorize(prm["dp"], otypes=[float])(t)
        else:
            raise ScheduleError(f"unknown schedule kind {k!r}")
        if scalar:
            return float(p), float(dp)
        return p, dp

    def integral(self, t: float) -> float:
        """``int_0^t p(s) ds``."""
        k, prm = self.kind, self.params
        if t < 0:
            raise ScheduleRangeError("negative time")
        if k == "constant":
            return prm["P_bar"] * t
        if k == "exponential":
            r = prm["rate"]
            return prm["P_bar"] * t + (prm["p0"] - prm["P_bar"]) * (-math.expm1(-r * t)) / r
        if k == "smoothstep":
            t0, t1, p0, p1 = prm["t0"], prm["t1"], prm["p0"], prm["p1"]
            if t <= t0:
                return p0 * t
            L = t1 - t0
            s = min((t - t0) / L, 1.0)
            val = p0 * t0 + p0 * L * s + (p1 - p0) * L * (s**3 - 0.5 * s**4)
            if t > t1:
                val += p1 * (t - t1)
            return val
        if k == "tabulated":
            self.evaluate(t)
            return float(self._interp.antiderivative()(t))
        if prm.get("integral") is not None:
            return float(prm["integral"](t))
        return float(integrate.quad(prm["p"], 0.0, t, limit=200, epsabs=1e-13, epsrel=1e-13)[0])

    def increment(self, t0: float, t1: float) -> float:
        """``int_{t0}^{t1} p``; composite Gauss-Legendre when no closed form is available."""
        if self.kind == "function" and self.params.get("integral") is None:
            panels = max(1, math.ceil(abs(t1 - t0) / 0.05))
            edges = np.linspace(t0, t1, panels + 1)
            mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
            total = 0.0
            for m, h in zip(mid, half):
                total += h * sum(w * self(m + h * node) for node, w in zip(*_GAUSS5))
            return float(total)
        return self.integral(t1) - self.integral(t0)

    @property
    def P_bar(self) -> float | None:
        """Limit of p(t) as t -> infinity, or None when the kind does not define one."""
        k, prm = self.kind, self.params
        if k in ("constant", "exponential"):
            return prm["P_bar"]
        if k == "smoothstep":
            return prm["p1"]
        if k == "tabulated":
            return float(prm["values"][-1])
        return prm.get("P_bar")

    @property
    def P_bar_estimated(self) -> bool:
        """True when P_bar is read off the final sample rather than known exactly."""
        if self.kind != "tabulated":
            return False
        v = self.params["values"]
        return not (v.size >= 2 and v[-1] == v[-2])

    def tail_variation(self, t: float) -> float:
        """``int_t^inf |p'(s)| ds``."""
        k, prm = self.kind, self.params
        if k == "constant":
            return 0.0
        if k == "exponential":
            return abs(prm["p0"] - prm["P_bar"]) * math.exp(-prm["rate"] * t)
        if k == "smoothstep":
            return abs(prm["p1"] - self(max(t, 0.0)))
        if k == "tabulated":
            times, values = prm["times"], prm["values"]
            if t >= times[-1]:
                return 0.0
            # PCHIP is monotone between knots, so each piece contributes |dp|.
            i = int(np.searchsorted(times, t, side="right"))
            head = abs(values[i] - float(self._interp(t)))
            return head + float(np.sum(np.abs(np.diff(values[i:]))))
        dp = prm["dp"]
        return float(integrate.quad(lambda s: abs(dp(s)), t, np.inf, limit=400)[0])


@dataclass(frozen=True)
class ScheduleStats:
    m_p: float
    M_p: float
    I_p: float
    P_bar: float | None
    P_bar_estimated: bool
    horizon: float
    schedule: PressureSchedule = field(repr=False, compare=False)

    def tail_Ip(self, t: float) -> float:
        return self.schedule.tail_variation(t)


def schedule_stats(schedule: PressureSchedule, horizon: float) -> ScheduleStats:
    """Infimum, supremum and total variation of p over ``[0, horizon]``."""
    if not horizon > 0:
        raise ScheduleError(f"horizon must be positive, got {horizon!r}")
    k, prm = schedule.kind, schedule.params
    if k == "tabulated":
        horizon = min(horizon, float(prm["times"][-1]))
    if k in ("constant", "exponential", "smoothstep"):
        # monotone kinds: extrema at the ends, variation = |end - start|
        p_start = schedule(0.0)
        p_end = schedule.P_bar if math.isinf(horizon) else schedule(horizon)
        m, M = min(p_start, p_end), max(p_start, p_end)
        I_p = abs(p_end - p_start)
    else:
        if math.isinf(horizon):
            raise ScheduleError(f"{k} schedule statistics need a finite horizon")
        ts = np.linspace(0.0, horizon, 20001)
        if k == "tabulated":
            ts = np.union1d(ts, prm["times"][prm["times"] <= horizon])
        p, dp = schedule.evaluate(ts)
        m, M = float(np.min(p)), float(np.max(p))
        if k == "tabulated":
            I_p = schedule.tail_variation(0.0) - schedule.tail_variation(horizon)
        else:
            I_p = float(integrate.trapezoid(np.abs(dp), ts))
    if not m > 0:
        raise ScheduleError(f"schedule reaches non-positive pressure {m!r} on [0, {horizon}]")
    return ScheduleStats(
        m_p=float(m),
        M_p=float(M),
        I_p=float(I_p),
        P_bar=schedule.P_bar,
        P_bar_estimated=schedule.P_bar_estimated,
        horizon=float(horizon),
        schedule=schedule,
    )
