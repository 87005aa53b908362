"""Named scenarios.

The ``standard-*`` family perturbs the rest state by ``0.1 sin(2 pi x)`` in
v and releases it under an outer pressure relaxing from 2 to 1; the beta
values 0.5, 1 and 2 lie in the constant-viscosity, degenerate-conductivity
regime, beta = 0 is kept as an out-of-regime contrast.
"""

from __future__ import annotations

_STANDARD = {
    "grid.n": 256,
    "time.dt": 1e-3,
    "time.t_end": 200.0,
    "time.stride": 100,
    "gas.alpha": 0.0,
    "schedule.kind": "exponential",
    "schedule.p0": 2.0,
    "schedule.P_bar": 1.0,
    "schedule.rate": 1.0,
    "initial.kind": "sine",
    "initial.v": 1.0,
    "initial.u": 0.0,
    "initial.theta": 1.0,
    "initial.field": "v",
    "initial.amplitude": 0.1,
    "initial.wavenumber": 1,
}


def _standard(beta: float, name: str) -> dict:
    return {**_STANDARD, "gas.beta": beta, "output.dir": f"runs/{name}"}


PRESETS: dict[str, dict] = {
    "equilibrium": {
        "grid.n": 64,
        "time.dt": 1e-3,
        "time.t_end": 10.0,
        "time.stride": 100,
        "gas.beta": 1.0,
        "schedule.kind": "constant",
        "schedule.P_bar": 1.0,
        "initial.kind": "constant",
        "initial.v": 1.0,
        "initial.u": 0.0,
        "initial.theta": 1.0,
        "output.dir": "runs/equilibrium",
    },
    "standard-beta0.5": _standard(0.5, "standard-beta0.5"),
    "standard-beta1": _standard(1.0, "standard-beta1"),
    "standard-beta2": _standard(2.0, "standard-beta2"),
    "standard-beta0": _standard(0.0, "standard-beta0"),
    "constant-beta1": {
        **_STANDARD,
        "grid.n": 64,
        "time.dt": 2e-4,
        "time.t_end": 5.0,
        "time.stride": 500,
        "gas.beta": 1.0,
        "schedule.kind": "constant",
        "schedule.P_bar": 1.0,
        "schedule.p0": None,
        "schedule.rate": None,
        "output.dir": "runs/constant-beta1",
    },
}

THEOREM_REGIME = ("standard-beta0.5", "standard-beta1", "standard-beta2")
