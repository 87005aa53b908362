"""Exception hierarchy shared by the solver, diagnostics and harness."""

from __future__ import annotations


class OuterPressError(Exception):
    """Base class for every error raised by this package."""


class DomainError(OuterPressError, ValueError):
    """A constitutive or diagnostic function received a non-physical argument."""

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"{field} must be strictly positive")


class ScheduleError(OuterPressError, ValueError):
    """Invalid pressure schedule (non-positive values, missing limit, ...)."""


class ScheduleRangeError(ScheduleError):
    """A tabulated schedule was evaluated outside its sample range."""


class InitializationError(OuterPressError, ValueError):
    def __init__(self, field: str, index: int, value: float):
        self.field = field
        self.index = index
        self.value = value
        super().__init__(
            f"initial {field} must be positive; got {value!r} at sample {index}"
        )


class SolverError(OuterPressError, RuntimeError):
    """Raised when a time step leaves the admissible state space."""

    status = "solver-error"
    partial = None  # RunResult up to the last good state, attached by run()

    def __init__(self, message: str, t: float | None = None, index: int | None = None):
        self.t = t
        self.index = index
        self.detail = message
        where = "" if t is None else f" at t={t:.17g}"
        super().__init__(f"{message}{where}")

    def at_time(self, t: float) -> "SolverError":
        return type(self)(self.detail, t=t, index=self.index)


class FloorBreachError(SolverError):
    status = "floor-breach"


class VolumeCollapseError(SolverError):
    status = "volume-collapse"


class ReportError(OuterPressError):
    def __init__(self, missing: list[str]):
        self.missing = missing
        super().__init__(f"run directory is incomplete; missing: {', '.join(missing)}")


class CoverageError(OuterPressError, ValueError):
    """A stored history does not cover the requested time."""


class FitError(OuterPressError, ValueError):
    pass


class ConfigError(OuterPressError, ValueError):
    status = "config-error"

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        ctx = []
        if line is not None:
            ctx.append(f"line {line}")
        if key is not None:
            ctx.append(f"field '{key}'")
        prefix = f"{', '.join(ctx)}: " if ctx else ""
        super().__init__(prefix + message)
