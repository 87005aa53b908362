import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, special

from outerpress import (
    ConstantInitial, DomainError, FitError, FluidState, MassGrid, PressureSchedule, SineInitial,
    SolverConfig, ThermoParams, init_state, run,
)
from outerpress.diagnostics import (
    F_of_t, Y_of_t, boundary_stress_mismatch, dissipation_V, energy_balance_residual, entropy_functional, fit_decay_rate,
    grad_norms, h1_distance, jensen_bounds, jensen_check, momentum, total_energy,
)

G = MassGrid(256)


def uniform(v=1.0, u=0.0, theta=1.0, grid=G):
    n = grid.n_cells
    return FluidState(np.full(n, v), np.full(n + 1, u), np.full(n, theta), 0.0, grid)


def test_entropy_functional_examples():
    assert entropy_functional(uniform()) == pytest.approx(2.0, abs=1e-14)
    assert entropy_functional(uniform(v=math.e)) == pytest.approx(math.e, abs=1e-14)
    assert entropy_functional(uniform(u=1.0)) == pytest.approx(2.5, abs=1e-14)


def test_dissipation_examples():
    assert dissipation_V(uniform(v=2.0, theta=3.0)) == 0.0
    s = FluidState(np.ones(64), MassGrid(64).nodes.copy(), np.ones(64), 0.0, MassGrid(64))
    for beta in (0.0, 1.0, 3.0):
        assert dissipation_V(s, ThermoParams(beta=beta)) == pytest.approx(1.0, abs=1e-12)


def test_dissipation_sine_against_adaptive_quadrature():
    th = 1 + 0.5 * np.sin(2 * np.pi * G.cell_centers)
    s = FluidState(np.ones(256), np.zeros(257), th, 0.0, G)

    # theta_x^2/(v theta^2) with kappa = theta is theta_x^2/theta
    ref = integrate.quad(lambda x: (math.pi * math.cos(2 * math.pi * x)) ** 2 / (1 + 0.5 * math.sin(2 * math.pi * x)),
                         0, 1, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
    assert dissipation_V(s) == pytest.approx(ref, rel=2e-4)


def test_dissipation_zero_iff_gradients_vanish():
    g = MassGrid(16)
    th = np.ones(16)
    th[5] = 1.01
    assert dissipation_V(FluidState(np.ones(16), np.zeros(17), th, 0.0, g)) > 0
    u = np.zeros(17)
    u[3] = 1e-3
    assert dissipation_V(FluidState(np.ones(16), u, np.ones(16), 0.0, g)) > 0
    # v gradients alone do not dissipate
    v = 1 + 0.1 * np.sin(2 * np.pi * g.cell_centers)
    assert dissipation_V(FluidState(v, np.zeros(17), np.ones(16), 0.0, g)) == 0.0


def test_grad_norm_examples():
    assert grad_norms(uniform()) == (0.0, 0.0, 0.0)
    s = FluidState(np.ones(256), G.nodes.copy(), np.ones(256), 0.0, G)
    assert grad_norms(s)[1] == pytest.approx(1.0, abs=1e-12)
    s = init_state(G, SineInitial(field="v", amplitude=0.1))
    exact = 0.005 * (2 * math.pi) ** 2
    assert exact == pytest.approx(0.19739, abs=1e-5)
    assert grad_norms(s)[0] == pytest.approx(exact, rel=1e-4)


def test_h1_distance_examples():
    assert h1_distance(uniform(v=0.75, theta=1.5), 0.75, 1.5) == (0.0, 0.0, 0.0)
    hv, hu, hth = h1_distance(uniform(v=1.1), 1.0, 1.0)
    assert hv == pytest.approx(0.1, abs=1e-12) and hu == 0 and hth == 0
    # v = 1 + a sin(2 pi x): ||v-1||^2 = a^2/2, ||v_x||^2 = a^2 (2 pi)^2 / 2
    a = 0.1
    s = init_state(G, SineInitial(field="v", amplitude=a))
    exact = math.sqrt(a**2 / 2 + a**2 * (2 * math.pi) ** 2 / 2)
    assert h1_distance(s, 1.0, 1.0)[0] == pytest.approx(exact, rel=1e-4)


def test_momentum_and_energy():
    s = uniform(u=0.5, v=2.0, theta=3.0)
    assert momentum(s) == pytest.approx(0.5, abs=1e-14)
    # c_v theta + u^2/2 + p v
    assert total_energy(s, 1.5) == pytest.approx(3.0 + 0.125 + 3.0, abs=1e-13)


def test_domain_errors():
    g = MassGrid(4)
    bad = FluidState.__new__(FluidState)
    object.__setattr__(bad, "v", np.array([1.0, -1.0, 1.0, 1.0]))
    object.__setattr__(bad, "u", np.zeros(5))
    object.__setattr__(bad, "theta", np.ones(4))
    object.__setattr__(bad, "t", 0.0)
    object.__setattr__(bad, "grid", g)
    for fn in (entropy_functional, dissipation_V):
        with pytest.raises(DomainError):
            fn(bad)


def lambert_roots(C0):
    """Independent oracle: x - ln x = C0  <=>  x = -W(-exp(-C0)) on both real branches."""
    z = -math.exp(-C0)
    return float(-special.lambertw(z, 0).real), float(-special.lambertw(z, -1).real)


def test_jensen_bounds_examples():
    jb = jensen_bounds(1.0)
    assert (jb.alpha1, jb.alpha2) == (1.0, 1.0)
    jb = jensen_bounds(2.0)
    a1, a2 = lambert_roots(2.0)
    assert jb.alpha1 == pytest.approx(0.158594, abs=1e-6) and jb.alpha2 == pytest.approx(3.146193, abs=1e-6)
    assert jb.alpha1 == pytest.approx(a1, rel=1e-12) and jb.alpha2 == pytest.approx(a2, rel=1e-12)
    assert max(jb.residuals()) < 1e-12


@pytest.mark.parametrize("C0", [1.0 + 1e-6, 1.5, 2.0, 5.0, 40.0])
def test_jensen_bounds_residuals(C0):
    jb = jensen_bounds(C0)
    assert jb.alpha1 <= 1.0 <= jb.alpha2
    assert max(jb.residuals()) < 1e-12
    a1, a2 = lambert_roots(C0)
    assert jb.alpha2 == pytest.approx(a2, rel=1e-10)


def test_jensen_bounds_domain():
    with pytest.raises(DomainError):
        jensen_bounds(0.5)


def test_jensen_check_equilibrium_and_uniform():
    s0 = init_state(MassGrid(16), ConstantInitial())
    res = run(s0, PressureSchedule.constant(1.0), ThermoParams(), SolverConfig(dt=0.05, t_end=1.0))
    rep = jensen_check(res.diagnostics)
    assert rep.passed and rep.C0_star == pytest.approx(2.0, abs=1e-12)
    a1, a2 = lambert_roots(2.0)
    assert rep.worst_margin == pytest.approx(min(1 - a1, a2 - 1), abs=1e-10)
    single = jensen_check([res.diagnostics[0]])
    assert single.worst_margin == pytest.approx(min(1 - a1, a2 - 1), abs=1e-10)


def test_Y_examples_and_multiplicativity():
    assert Y_of_t(PressureSchedule.constant(1.0), 2.0) == pytest.approx(math.exp(2), rel=1e-14)
    sch = PressureSchedule.exponential(2, 1, 1)
    assert Y_of_t(sch, 1.0) == pytest.approx(math.exp(1 + (1 - math.exp(-1))), rel=1e-14)
    for s in (PressureSchedule.constant(1.7), sch, PressureSchedule.smoothstep(1, 3, 0.2, 1.1)):
        t1, t2 = 0.8, 1.9
        lhs = Y_of_t(s, t1 + t2)
        rhs = Y_of_t(s, t1) * math.exp(s.integral(t1 + t2) - s.integral(t1))
        assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("P", [0.5, 1.0, 2.0])
def test_F_constant_schedule(P):
    sch = PressureSchedule.constant(P)
    assert F_of_t(sch, 1.3) == pytest.approx(math.exp(-2 * P * 1.3), rel=1e-14)
    assert F_of_t(sch, 2.5) / F_of_t(sch, 1.0) == pytest.approx(math.exp(-2 * P * 1.5), rel=1e-13)


def test_F_exponential_against_high_precision_quadrature():
    sch = PressureSchedule.exponential(2, 1, 1)
    mpmath.mp.dps = 30
    I = lambda s: s + (1 - mpmath.exp(-s))  # noqa: E731
    middle = mpmath.exp(-I(1)) * mpmath.quad(lambda s: mpmath.exp(I(s)) * (-mpmath.exp(-s)), [0, 1])
    ref = float(mpmath.exp(-2 * I(1)) + middle**2 + mpmath.exp(-1))
    assert F_of_t(sch, 1.0) == pytest.approx(ref, abs=1e-10)


def test_energy_balance_residual():
    s0 = init_state(MassGrid(16), ConstantInitial())
    res = run(s0, PressureSchedule.constant(1.0), ThermoParams(), SolverConfig(dt=0.05, t_end=1.0))
    assert np.max(np.abs(energy_balance_residual(res.diagnostics, PressureSchedule.constant(1.0)))) < 1e-13
    s0 = init_state(MassGrid(32), SineInitial(field="u", amplitude=0.3))
    res = run(s0, PressureSchedule.constant(1.0), ThermoParams(), SolverConfig(dt=0.01, t_end=1.0))
    r = energy_balance_residual(res.diagnostics, PressureSchedule.constant(1.0))
    E = res.diagnostics.column("total_energy")
    np.testing.assert_allclose(r, E - E[0], atol=1e-15)
    with pytest.raises(ValueError):
        energy_balance_residual(list(res.diagnostics)[::-1], PressureSchedule.constant(1.0))


def test_energy_residual_first_order_in_dt():
    sch = PressureSchedule.constant(1.0)
    peaks = []
    for dt in (4e-3, 2e-3, 1e-3):
        s0 = init_state(MassGrid(32), SineInitial(field="u", amplitude=0.3))
        res = run(s0, sch, ThermoParams(), SolverConfig(dt=dt, t_end=0.5))
        peaks.append(np.max(np.abs(energy_balance_residual(res.diagnostics, sch))))
    assert 1.7 < peaks[0] / peaks[1] < 2.3 and 1.7 < peaks[1] / peaks[2] < 2.3


def test_diagnostics_are_pure():
    s = init_state(G, SineInitial(field="theta", seed=1))
    for fn in (entropy_functional, dissipation_V, grad_norms):
        assert fn(s) == fn(s)
    sch = PressureSchedule.exponential(2, 1, 1)
    assert F_of_t(sch, 0.7) == F_of_t(sch, 0.7)


def test_fit_examples():
    t = np.linspace(0, 5, 32)
    f = fit_decay_rate(t, 5 * np.exp(-2 * t))
    assert f.rate == pytest.approx(2.0, abs=1e-12) and f.r_squared == pytest.approx(1.0, abs=1e-12)
    f = fit_decay_rate(t, np.full(32, 3.0))
    assert f.rate == 0.0 and f.r_squared == 1.0
    t = np.linspace(0, 10, 400)
    f = fit_decay_rate(t, 5 * np.exp(-2 * t) * (1 + 0.01 * np.sin(10 * t)))
    assert f.rate == pytest.approx(2.0, abs=0.05)


def test_fit_window_and_floor():
    t = np.linspace(0, 40, 401)
    y = np.exp(-2 * t)
    f = fit_decay_rate(t, y)
    assert f.window[1] < 17  # samples below 1e-14 are dropped
    f = fit_decay_rate(t, y, t_start=1.0, t_stop=5.0)
    assert f.window == (1.0, 5.0) and f.n_points == 41
    with pytest.raises(FitError):
        fit_decay_rate(t[:5], y[:5])
    with pytest.raises(FitError):
        fit_decay_rate(t, np.zeros_like(t))


def test_boundary_stress_mismatch():
    assert boundary_stress_mismatch(uniform(), 1.0) == 0.0
    # standard perturbation: v(0) = 1 + 0.1 sin(pi/256), pressure 2 pushes on a gas at ~1
    s = init_state(G, SineInitial(field="v", amplitude=0.1))
    assert boundary_stress_mismatch(s, 2.0) == pytest.approx(1.0, abs=2e-3)
    s = FluidState(np.ones(4), np.array([0.0, 0.25, 0.5, 0.75, 1.0]), np.ones(4), 0.0, MassGrid(4))
    assert boundary_stress_mismatch(s, 0.0) == pytest.approx(0.0, abs=1e-15)  # u_x = 1 balances P = 1
