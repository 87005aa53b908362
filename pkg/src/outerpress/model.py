"""Gas model: constitutive constants, the mass grid and the discrete state.

Everything here is a value type.  Arrays stored on `FluidState` are made
read-only so a state can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ThermoParams:
    """Constitutive constants of the ideal polytropic gas.

    ``mu = mu_tilde * theta**alpha`` and ``kappa = kappa_tilde * theta**beta``.
    Defaults are the normalized values R = c_v = mu_tilde = kappa_tilde = 1.
    """

    R: float = 1.0
    c_v: float = 1.0
    mu_tilde: float = 1.0
    kappa_tilde: float = 1.0
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("R", "c_v", "mu_tilde", "kappa_tilde"):
            if not getattr(self, name) > 0:
                raise DomainError(name, f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("alpha", "beta"):
            if not getattr(self, name) >= 0:
                raise DomainError(name, f"{name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def theorem_regime(self) -> bool:
        """True for constant viscosity and degenerate conductivity (alpha = 0 < beta)."""
        return self.alpha == 0 and self.beta > 0

    @property
    def normalized(self) -> bool:
        return self.R == self.c_v == self.mu_tilde == self.kappa_tilde == 1.0


@dataclass(frozen=True)
class MassGrid:
    """Uniform staggered grid on the mass interval (0, 1).

    Cells carry ``v`` and ``theta``; the ``n_cells + 1`` nodes carry ``u``.
    """

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) / self.n_cells

    @property
    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) / self.n_cells

    @property
    def node_weights(self) -> np.ndarray:
        """Trapezoid weights of the nodes (half cells at both ends)."""
        w = np.full(self.n_cells + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FluidState:
    v: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    t: float = 0.0
    grid: MassGrid = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen(self.v))
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "theta", _frozen(self.theta))
        n = self.v.shape[0]
        if self.grid is None:
            object.__setattr__(self, "grid", MassGrid(n))
        if self.v.shape != (self.grid.n_cells,) or self.theta.shape != (self.grid.n_cells,):
            raise ValueError("v and theta must have one entry per cell")
        if self.u.shape != (self.grid.n_cells + 1,):
            raise ValueError("u must have one entry per node")
        if self.t < 0:
            raise ValueError("time must be non-negative")
        if not np.all(self.v > 0):
            raise DomainError("v", "specific volume must be positive in every cell")
        if not np.all(self.theta > 0):
            raise DomainError("theta", "temperature must be positive in every cell")

    def replace(self, **changes) -> "FluidState":
        kw = dict(v=self.v, u=self.u, theta=self.theta, t=self.t, grid=self.grid)
        kw.update(changes)
        return FluidState(**kw)

    def max_abs_diff(self, other: "FluidState") -> float:
        return max(
            float(np.max(np.abs(self.v - other.v))),
            float(np.max(np.abs(self.u - other.u))),
            float(np.max(np.abs(self.theta - other.theta))),
        )


def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(name, f"{name} must be strictly positive")
    return arr


def _as_output(x):
    return float(x) if np.ndim(x) == 0 else x


def pressure(v, theta, params: ThermoParams = ThermoParams()):
    """Ideal-gas pressure ``R * theta / v``."""
    v = _check_positive("v", v)
    theta = _check_positive("theta", theta)
    return _as_output(params.R * theta / v)


def conductivity(theta, params: ThermoParams = ThermoParams()):
    theta = _check_positive("theta", theta)
    if params.beta == 0:
        return _as_output(np.full_like(theta, params.kappa_tilde))
    return _as_output(params.kappa_tilde * theta**params.beta)


def viscosity(theta, params: ThermoParams = ThermoParams()):
    theta = _check_positive("theta", theta)
    if params.alpha == 0:
        return _as_output(np.full_like(theta, params.mu_tilde))
    return _as_output(params.mu_tilde * theta**params.alpha)


def stress(du_dx, v, theta, params: ThermoParams = ThermoParams()):
    """Total normal stress ``mu(theta) u_x / v - R theta / v``."""
    v = _check_positive("v", v)
    theta = _check_positive("theta", theta)
    mu = np.asarray(viscosity(theta, params))
    return _as_output((mu * np.asarray(du_dx, dtype=float) - params.R * theta) / v)
