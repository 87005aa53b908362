import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from outerpress import DomainError, FluidState, MassGrid, ThermoParams
from outerpress.model import conductivity, pressure, stress, viscosity

pos = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


@pytest.mark.parametrize("v, theta, expected", [(1, 1, 1), (2, 1, 0.5), (0.5, 2, 4)])
def test_pressure_examples(v, theta, expected):
    assert pressure(v, theta, ThermoParams(R=1)) == expected


@pytest.mark.parametrize(
    "theta, beta, kt, expected", [(5, 0, 1, 1), (1, 7, 3, 3), (3, 2, 1, 9)]
)
def test_conductivity_examples(theta, beta, kt, expected):
    assert conductivity(theta, ThermoParams(beta=beta, kappa_tilde=kt)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "theta, alpha, mt, expected", [(9, 0, 1, 1), (1, 3, 2, 2), (4, 0.5, 1, 2)]
)
def test_viscosity_examples(theta, alpha, mt, expected):
    assert viscosity(theta, ThermoParams(alpha=alpha, mu_tilde=mt)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("du_dx, v, theta, expected", [(0, 1, 1, -1), (1, 1, 1, 0), (2, 2, 1, 0.5)])
def test_stress_examples(du_dx, v, theta, expected):
    assert stress(du_dx, v, theta, ThermoParams()) == expected


@pytest.mark.parametrize("v, theta, field", [(0, 1, "v"), (-1, 1, "v"), (1, 0, "theta"), (1, -2, "theta")])
def test_pressure_domain_error_names_field(v, theta, field):
    with pytest.raises(DomainError) as exc:
        pressure(v, theta)
    assert exc.value.field == field


def test_constitutive_domain_errors():
    for fn in (conductivity, viscosity):
        with pytest.raises(DomainError):
            fn(0.0)
    with pytest.raises(DomainError):
        stress(1.0, 0.0, 1.0)


def test_arrays_are_supported():
    th = np.array([1.0, 4.0])
    np.testing.assert_allclose(viscosity(th, ThermoParams(alpha=0.5)), [1.0, 2.0])
    np.testing.assert_allclose(conductivity(th, ThermoParams(beta=0)), [1.0, 1.0])


@given(pos, pos, st.floats(min_value=1e-3, max_value=1e3))
def test_pressure_times_volume_is_R_theta(v, theta, R):
    params = ThermoParams(R=R)
    assert pressure(v, theta, params) * v == pytest.approx(R * theta, rel=1e-14)


@given(pos, pos, st.floats(min_value=0, max_value=5), st.floats(min_value=0, max_value=5))
def test_coefficients_monotone(t1, t2, alpha, beta):
    lo, hi = sorted((t1, t2))
    p = ThermoParams(alpha=alpha, beta=beta)
    assert conductivity(hi, p) >= conductivity(lo, p)
    assert viscosity(hi, p) >= viscosity(lo, p)


def test_thermo_params_validation_and_regime():
    assert ThermoParams(alpha=0, beta=1).theorem_regime
    assert not ThermoParams(alpha=0, beta=0).theorem_regime
    assert not ThermoParams(alpha=1, beta=1).theorem_regime
    for bad in ({"R": 0}, {"c_v": -1}, {"mu_tilde": 0}, {"kappa_tilde": 0}, {"alpha": -0.1}, {"beta": -1}):
        with pytest.raises(DomainError):
            ThermoParams(**bad)


@pytest.mark.parametrize("n", [1, 3, 8, 256, 1000])
def test_mass_grid(n):
    g = MassGrid(n)
    assert g.dx * g.n_cells == 1.0
    assert np.all(np.diff(g.nodes) > 0) and g.nodes[0] == 0 and g.nodes[-1] == 1
    np.testing.assert_allclose(g.cell_centers, (np.arange(n) + 0.5) / n)
    assert math.isclose(g.node_weights.sum(), 1.0, rel_tol=1e-14)


def test_mass_grid_rejects_bad_size():
    for bad in (0, -2, 2.5):
        with pytest.raises(ValueError):
            MassGrid(bad)


def test_fluid_state_invariants():
    g = MassGrid(4)
    s = FluidState(np.ones(4), np.zeros(5), np.ones(4), 0.0, g)
    assert not s.v.flags.writeable
    with pytest.raises(DomainError):
        FluidState(np.array([1, 1, 0, 1.0]), np.zeros(5), np.ones(4), 0.0, g)
    with pytest.raises(DomainError):
        FluidState(np.ones(4), np.zeros(5), -np.ones(4), 0.0, g)
    with pytest.raises(ValueError):
        FluidState(np.ones(4), np.zeros(4), np.ones(4), 0.0, g)
    with pytest.raises(ValueError):
        FluidState(np.ones(4), np.zeros(5), np.ones(4), -1.0, g)
