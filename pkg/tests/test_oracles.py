import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from outerpress import (
    ConstantInitial, CoverageError, DomainError, MassGrid, PressureSchedule, ScheduleError,
    SineInitial, SolverConfig, ThermoParams, init_state, run,
)
from outerpress.model import stress
from outerpress.oracles import (
    MmsCase, equilibrium_state, mms_errors, mms_reference, representation_v, stationary_state,
    uniform_energy_residual, uniform_flow_initial, uniform_flow_schedule, uniform_ode_oracle,
)

PARAMS = ThermoParams()


def _run(initial, schedule, n=32, dt=1e-2, t_end=1.0, stride=1):
    s0 = init_state(MassGrid(n), initial)
    return run(s0, schedule, PARAMS, SolverConfig(dt=dt, t_end=t_end, store_history_every=stride))


def test_representation_at_time_zero_is_exact():
    res = _run(SineInitial(field="v", amplitude=0.2, seed=4), PressureSchedule.exponential(2, 1, 1))
    np.testing.assert_array_equal(representation_v(res.history, 0.0), res.history.initial.v)


def test_representation_collapses_on_equilibrium():
    res = _run(ConstantInitial(0.75, 0.0, 1.5), PressureSchedule.constant(2.0), t_end=2.0, stride=10)
    for t in res.history.times:
        np.testing.assert_allclose(representation_v(res.history, t), 0.75, rtol=1e-12)


def test_representation_tracks_solver_and_improves_with_refinement():
    gaps = []
    for n, dt, stride in ((64, 4e-3, 1), (128, 2e-3, 1)):
        res = _run(SineInitial(field="v", amplitude=0.1), PressureSchedule.exponential(2, 1, 1),
                   n=n, dt=dt, t_end=1.0, stride=stride)
        rep = representation_v(res.history, 1.0)
        gaps.append(np.max(np.abs(rep - res.final.v) / res.final.v))
    assert gaps[0] < 1e-2 and gaps[1] < gaps[0]


def test_representation_coverage_and_regime():
    res = _run(ConstantInitial(), PressureSchedule.constant(1.0), stride=10)
    with pytest.raises(CoverageError):
        representation_v(res.history, 0.05)
    with pytest.raises(CoverageError):
        representation_v(res.history, 3.0)
    with pytest.raises(ValueError):
        representation_v(res.history, 1.0, ThermoParams(mu_tilde=2.0))


def test_representation_interpolates_to_x():
    res = _run(ConstantInitial(), PressureSchedule.constant(1.0))
    np.testing.assert_allclose(representation_v(res.history, 1.0, x=[0.25, 0.5]), 1.0, rtol=1e-10)


@pytest.mark.parametrize("P, v_hat, theta_hat", [(1.0, 1.0, 1.0), (2.0, 0.75, 1.5)])
def test_stationary_state_examples(P, v_hat, theta_hat):
    s0 = init_state(MassGrid(8), ConstantInitial())
    st = stationary_state(s0, PressureSchedule.constant(P), 0.0, 10.0, 1.0)
    assert st.v_hat == pytest.approx(v_hat, abs=1e-14)
    assert st.theta_hat == pytest.approx(theta_hat, abs=1e-14)
    assert st.theta_hat == pytest.approx(st.P_bar * st.v_hat, rel=1e-14)
    assert st.tail_bound == 0.0 and not st.insufficient_horizon


def test_stationary_state_from_exponential_run():
    sch = PressureSchedule.exponential(2, 1, 1)
    res = _run(SineInitial(field="v", amplitude=0.1), sch, n=32, dt=5e-3, t_end=25.0, stride=50)
    from outerpress.oracles import stationary_from_run

    st = stationary_from_run(res, sch, PARAMS)
    assert st.theta_hat == pytest.approx(st.P_bar * st.v_hat, rel=1e-14)
    assert abs(res.final.v.mean() - st.v_hat) < 1e-3
    assert st.v_uncertainty < 1e-8


def test_stationary_state_warnings_and_errors():
    s0 = init_state(MassGrid(8), ConstantInitial())
    with pytest.warns(RuntimeWarning, match="insufficient horizon"):
        st = stationary_state(s0, PressureSchedule.exponential(2, 1, 1), -0.5, 2.0, 1.0)
    assert st.insufficient_horizon and st.tail_bound == pytest.approx(math.exp(-2.0))
    no_limit = PressureSchedule.function(lambda t: 1.0 + 0.5 * math.sin(t), lambda t: 0.5 * math.cos(t))
    with pytest.raises(ScheduleError):
        stationary_state(s0, no_limit, 0.0, 1.0, 1.0)


def test_equilibrium_state():
    s = equilibrium_state(1.0, 1.0, MassGrid(4))
    assert np.all(s.v == 1) and np.all(s.u == 0) and np.all(s.theta == 1)
    s = equilibrium_state(2.0, 0.75, MassGrid(4))
    assert np.all(s.theta == 1.5)
    assert stress(0.0, s.v[0], s.theta[0]) == pytest.approx(-2.0, abs=1e-15)
    with pytest.raises(DomainError):
        equilibrium_state(0.0, 1.0, MassGrid(4))


def test_uniform_oracle_examples():
    assert uniform_ode_oracle(1.3, 0.7, 0.0, 5.0) == (1.3, 0.7, pytest.approx(0.7 / 1.3))
    v, th, p = uniform_ode_oracle(1.0, 2.0, 0.5, 2.0)
    assert v == pytest.approx(2.0) and th == pytest.approx(1.25) and p == pytest.approx(0.375)
    _, th, _ = uniform_ode_oracle(1.0, 2.0, 0.5, 1e9)
    assert th == pytest.approx(0.5, rel=1e-8)


def test_uniform_oracle_against_numerical_ode():
    v0, th0, c = 1.0, 2.0, 0.5

    def rhs(t, y):
        v, th = y
        return [c, (-th * c + c * c) / v]

    sol = solve_ivp(rhs, (0, 5), [v0, th0], method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    for t in (0.5, 2.0, 5.0):
        v, th, _ = uniform_ode_oracle(v0, th0, c, t)
        assert v == pytest.approx(sol.sol(t)[0], rel=1e-10)
        assert th == pytest.approx(sol.sol(t)[1], rel=1e-10)


def test_uniform_oracle_errors():
    with pytest.raises(DomainError):
        uniform_ode_oracle(1.0, 0.4, 0.5, 1.0)
    with pytest.raises(DomainError):
        uniform_ode_oracle(-1.0, 1.0, 0.0, 1.0)


def test_uniform_energy_bookkeeping_vanishes():
    for t in (0.5, 1.0, 3.0):
        assert abs(uniform_energy_residual(1.0, 2.0, 0.5, t)) < 1e-12


def test_solver_preserves_uniform_flow():
    v0, th0, c = 1.0, 2.0, 0.5
    sch = uniform_flow_schedule(v0, th0, c)
    res = _run(uniform_flow_initial(v0, th0, c), sch, n=16, dt=2.5e-4, t_end=5.0, stride=1000)
    for k in range(len(res.history)):
        s = res.history.state_at(k)
        assert np.var(s.v) < 1e-10 and np.var(s.theta) < 1e-10
    v, th, _ = uniform_ode_oracle(v0, th0, c, 5.0)
    assert res.final.v.mean() == pytest.approx(v, rel=1e-4)
    assert res.final.theta.mean() == pytest.approx(th, rel=1e-4)


def test_mms_equilibrium_coefficients_give_zero_forcing():
    case = MmsCase(a0=1.0, a1=0.0, d0=1.0, d1=0.0)
    x = np.linspace(0, 1, 11)
    _, forcings = mms_reference(case, x, 0.3)
    for f in forcings:
        np.testing.assert_allclose(f, 0.0, atol=1e-15)


def test_mms_mass_forcing_vanishes():
    case = MmsCase()
    x = np.linspace(0, 1, 41)
    for t in (0.0, 0.4, 2.0):
        np.testing.assert_allclose(case.mass(x, t), 0.0, atol=1e-14)


def _fd(f, z, h):
    return (f(z + h) - f(z - h)) / (2 * h)


@pytest.mark.parametrize("params", [ThermoParams(), ThermoParams(alpha=0.5, beta=2.0, c_v=1.5, R=0.8)])
def test_mms_momentum_forcing_matches_finite_differences(params):
    case = MmsCase(a0=1.0, a1=0.1, d0=1.0, d1=0.1, params=params)
    h = 1e-5
    x0, t0 = 0.25, 0.0

    def field(k, x, t):
        return float(case.targets(np.array([x]), t)[k][0])

    def sigma(x):
        ux = _fd(lambda y: field(1, y, t0), x, h)
        return stress(ux, field(0, x, t0), field(2, x, t0), params)

    fd = _fd(lambda t: field(1, x0, t), t0, h) - _fd(sigma, x0, h)
    assert float(case.momentum(np.array([x0]), t0)[0]) == pytest.approx(fd, rel=1e-5)


@pytest.mark.parametrize("params", [ThermoParams(), ThermoParams(alpha=0.5, beta=2.0, c_v=1.5, R=0.8)])
def test_mms_energy_forcing_matches_finite_differences(params):
    case = MmsCase(a0=1.0, a1=0.1, d0=1.0, d1=0.1, params=params)
    h = 1e-4  # nested differences: truncation and roundoff both near 1e-8
    x0, t0 = 0.3, 0.2

    def field(k, x, t=t0):
        return float(case.targets(np.array([x]), t)[k][0])

    def flux(x):
        th = field(2, x)
        return params.kappa_tilde * th**params.beta * _fd(lambda y: field(2, y), x, h) / field(0, x)

    v, th = field(0, x0), field(2, x0)
    ux = _fd(lambda y: field(1, y), x0, h)
    th_t = _fd(lambda t: field(2, x0, t), t0, h)
    mu = params.mu_tilde * th**params.alpha
    fd = params.c_v * th_t + params.R * th * ux / v - mu * ux**2 / v - _fd(flux, x0, h)
    assert float(case.energy(np.array([x0]), t0)[0]) == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_mms_boundary_stress_is_equal_at_both_ends():
    case = MmsCase()
    for t in (0.0, 0.7, 3.0):
        assert float(case.stress(0.0, t)) == pytest.approx(float(case.stress(1.0, t)), abs=1e-14)
        assert case.schedule()(t) == pytest.approx(-float(case.stress(0.0, t)), rel=1e-14)


def test_mms_case_validation():
    with pytest.raises(DomainError):
        MmsCase(a0=0.1, a1=0.2)
    with pytest.raises(DomainError):
        MmsCase(d0=0.1, d1=0.2)


def test_mms_errors_small_on_short_run():
    case = MmsCase()
    s0 = init_state(MassGrid(32), case.initial())
    cfg = SolverConfig(dt=1e-3, t_end=0.1, mms_enabled=True)
    res = run(s0, case.schedule(), case.params, cfg, forcing=case)
    assert max(mms_errors(case, res.final)) < 1e-2
    assert max(mms_errors(case, s0)) < 1e-15
