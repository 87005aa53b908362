"""Lagrangian 1D compressible Navier-Stokes under outer-pressure boundary conditions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    CoverageError,
    DomainError,
    FitError,
    FloorBreachError,
    InitializationError,
    OuterPressError,
    ScheduleError,
    ScheduleRangeError,
    SolverError,
    VolumeCollapseError,
)
from .model import FluidState, MassGrid, ThermoParams, conductivity, pressure, stress, viscosity  # noqa: E402
from .schedule import PressureSchedule, ScheduleStats, schedule_stats  # noqa: E402
from .solver import (  # noqa: E402
    ConstantInitial,
    FileInitial,
    FunctionInitial,
    SineInitial,
    SolverConfig,
    StateHistory,
    apply_boundary,
    init_state,
    run,
    step,
)

__all__ = [
    "ConfigError", "CoverageError", "DomainError", "FitError", "FloorBreachError",
    "InitializationError", "OuterPressError", "ScheduleError", "ScheduleRangeError",
    "SolverError", "VolumeCollapseError",
    "FluidState", "MassGrid", "ThermoParams", "conductivity", "pressure", "stress", "viscosity",
    "PressureSchedule", "ScheduleStats", "schedule_stats",
    "ConstantInitial", "FileInitial", "FunctionInitial", "SineInitial", "SolverConfig",
    "StateHistory", "apply_boundary", "init_state", "run", "step",
]
