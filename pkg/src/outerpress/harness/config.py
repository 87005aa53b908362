"""Run configuration: flat TOML files with dotted keys.

Example::

    preset = "standard-beta1"      # optional; keys below override it
    grid.n = 128
    time.dt = 2e-3
    time.t_end = 50.0
    schedule.kind = "exponential"
    schedule.p0 = 2.0
    output.dir = "runs/std128"

Every key is validated; errors name the key and its line in the file.
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError, OuterPressError
from ..model import MassGrid, ThermoParams
from ..schedule import PressureSchedule
from ..solver import ConstantInitial, FileInitial, SineInitial, SolverConfig

DEFAULTS: dict[str, Any] = {
    "grid.n": 64,
    "time.dt": 1e-3,
    "time.t_end": 1.0,
    "time.theta_floor": 1e-10,
    "time.cfl_factor": None,
    "time.stride": 10,
    "gas.R": 1.0,
    "gas.c_v": 1.0,
    "gas.mu_tilde": 1.0,
    "gas.kappa_tilde": 1.0,
    "gas.alpha": 0.0,
    "gas.beta": 1.0,
    "schedule.kind": "constant",
    "schedule.P_bar": 1.0,
    "schedule.p0": None,
    "schedule.rate": None,
    "schedule.p1": None,
    "schedule.t0": None,
    "schedule.t1": None,
    "schedule.times": None,
    "schedule.values": None,
    "initial.kind": "constant",
    "initial.v": 1.0,
    "initial.u": 0.0,
    "initial.theta": 1.0,
    "initial.field": "v",
    "initial.amplitude": 0.1,
    "initial.wavenumber": 1,
    "initial.seed": None,
    "initial.path": None,
    "output.dir": "run",
    "output.stride": 1,
    "output.formats": ["csv", "json"],
}

FORMATS = {"csv", "json", "snapshots"}


def _flatten(tree: dict, prefix: str = "") -> dict[str, Any]:
    flat = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    pat = re.compile(r"^\s*" + r"\s*\.\s*".join(map(re.escape, key.split("."))) + r"\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


@dataclass(frozen=True)
class RunConfig:
    values: dict[str, Any]
    source: str | None = field(default=None, compare=False, repr=False)

    # -- parsing ----------------------------------------------------------
    @classmethod
    def from_mapping(cls, mapping: dict[str, Any], source: str | None = None) -> "RunConfig":
        from .presets import PRESETS

        flat = dict(mapping)
        preset = flat.pop("preset", None)
        values = dict(DEFAULTS)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(
                    f"unknown preset {preset!r}; choose from {sorted(PRESETS)}",
                    key="preset", line=_line_of(source, "preset"),
                )
            values.update(PRESETS[preset])
        for key, val in flat.items():
            if key not in DEFAULTS:
                raise ConfigError("unknown key", key=key, line=_line_of(source, key))
            values[key] = val
        if preset is not None:
            values["preset"] = preset
        cfg = cls(values, source)
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        try:
            tree = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"line (\d+)", str(exc))
            raise ConfigError(f"syntax error: {exc}", line=int(m.group(1)) if m else None) from None
        return cls.from_mapping(_flatten(tree), text)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        return cls.from_text(text)

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "RunConfig":
        flat = {"preset": name}
        flat.update({k.replace("__", "."): v for k, v in overrides.items()})
        return cls.from_mapping(flat)

    def __getitem__(self, key):
        return self.values[key]

    def _err(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, key=key, line=_line_of(self.source, key))

    def _number(self, key: str, *, positive=False, nonneg=False, integer=False, optional=False):
        val = self.values.get(key)
        if val is None:
            if optional:
                return None
            raise self._err(key, "value is required")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise self._err(key, f"expected a number, got {val!r}")
        if integer and int(val) != val:
            raise self._err(key, f"expected an integer, got {val!r}")
        if positive and not val > 0:
            raise self._err(key, f"must be > 0, got {val!r}")
        if nonneg and not val >= 0:
            raise self._err(key, f"must be >= 0, got {val!r}")
        return int(val) if integer else float(val)

    # -- validation / construction ----------------------------------------
    def validate(self):
        self.grid()
        self.solver_config()
        self.params()
        self.schedule()
        self.initial()
        self._number("output.stride", positive=True, integer=True)
        fmts = self.values["output.formats"]
        if not isinstance(fmts, list) or not set(fmts) <= FORMATS:
            raise self._err("output.formats", f"expected a list drawn from {sorted(FORMATS)}")
        if not isinstance(self.values["output.dir"], str):
            raise self._err("output.dir", "expected a string path")

    def grid(self) -> MassGrid:
        return MassGrid(self._number("grid.n", positive=True, integer=True))

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            dt=self._number("time.dt", positive=True),
            t_end=self._number("time.t_end", nonneg=True),
            theta_floor=self._number("time.theta_floor", positive=True),
            cfl_factor=self._number("time.cfl_factor", positive=True, optional=True),
            store_history_every=self._number("time.stride", positive=True, integer=True),
        )

    def params(self) -> ThermoParams:
        return ThermoParams(
            R=self._number("gas.R", positive=True),
            c_v=self._number("gas.c_v", positive=True),
            mu_tilde=self._number("gas.mu_tilde", positive=True),
            kappa_tilde=self._number("gas.kappa_tilde", positive=True),
            alpha=self._number("gas.alpha", nonneg=True),
            beta=self._number("gas.beta", nonneg=True),
        )

    def schedule(self) -> PressureSchedule:
        kind = self.values["schedule.kind"]
        try:
            if kind == "constant":
                return PressureSchedule.constant(self._number("schedule.P_bar", positive=True))
            if kind == "exponential":
                return PressureSchedule.exponential(
                    self._number("schedule.p0", positive=True),
                    self._number("schedule.P_bar", positive=True),
                    self._number("schedule.rate", positive=True),
                )
            if kind == "smoothstep":
                return PressureSchedule.smoothstep(
                    self._number("schedule.p0", positive=True),
                    self._number("schedule.p1", positive=True),
                    self._number("schedule.t0", nonneg=True),
                    self._number("schedule.t1", positive=True),
                )
            if kind == "tabulated":
                times, values = self.values["schedule.times"], self.values["schedule.values"]
                if not isinstance(times, list) or not isinstance(values, list):
                    raise self._err("schedule.times", "tabulated schedules need lists schedule.times and schedule.values")
                return PressureSchedule.tabulated(times, values)
        except ConfigError:
            raise
        except OuterPressError as exc:
            raise self._err("schedule.kind", str(exc)) from None
        raise self._err("schedule.kind", f"unknown schedule kind {kind!r}")

    def initial(self):
        kind = self.values["initial.kind"]
        v = self._number("initial.v", positive=True)
        u = self._number("initial.u")
        th = self._number("initial.theta", positive=True)
        if kind == "constant":
            return ConstantInitial(v, u, th)
        if kind == "sine":
            fld = self.values["initial.field"]
            if fld not in ("v", "u", "theta"):
                raise self._err("initial.field", f"expected v, u or theta, got {fld!r}")
            seed = self._number("initial.seed", integer=True, optional=True)
            return SineInitial(
                v, u, th, fld,
                self._number("initial.amplitude"),
                self._number("initial.wavenumber", positive=True, integer=True),
                seed,
            )
        if kind == "file":
            path = self.values["initial.path"]
            if not isinstance(path, str):
                raise self._err("initial.path", "file initial data needs initial.path")
            return FileInitial(path)
        raise self._err("initial.kind", f"unknown initial-data kind {kind!r}")

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        lines = []
        if "preset" in self.values:
            lines.append(f"# expanded from preset {self.values['preset']!r}")
        for key in DEFAULTS:
            val = self.values[key]
            if val is None:
                continue
            lines.append(f"{key} = {json.dumps(val)}")
        return "\n".join(lines) + "\n"
