"""Tests for the time marching driver."""

import numpy as np
import pytest

import skewform as sk
from skewform.models import make_model, sample_state, swe_transform
from skewform.sbp_core import build_operators, make_grid
from skewform.timeint import MODES, Scenario, march, rk4_step, validate_scenario


def burgers_setup(n=32, periodic=True, order=(4, 2)):
    m = make_model("burgers1d")
    g = make_grid(((0.0, 1.0),), (n,), periodic=(periodic,))
    ops = build_operators(g, order)
    return m, g, ops


def test_rk4_pinned_single_step():
    # u' = -u from 1 over dt = 0.1: the quartic Taylor polynomial of exp
    got = rk4_step(lambda u, t: -u, np.array([1.0]), 0.0, 0.1)
    assert got[0] == 0.9048375


def test_rk4_zero_rhs_returns_the_state_unchanged():
    u = np.array([1.0, -2.0, 3.0])
    got = rk4_step(lambda u, t: np.zeros_like(u), u, 0.0, 0.25)
    assert np.array_equal(got, u)


def test_rk4_time_dependence_enters_through_the_stages():
    # u' = cos(t) integrates to sin(t) with O(dt^5) local error
    u = np.array([0.0])
    dt = 0.1
    t = 0.0
    for k in range(10):
        u = rk4_step(lambda u, t: np.array([np.cos(t)]), u, t, dt)
        t += dt
    assert abs(u[0] - np.sin(1.0)) <= 1e-7


def test_march_emits_reports_on_the_stride_and_always_at_the_end():
    m, g, ops = burgers_setup()
    u0 = (0.2 * np.sin(2 * np.pi * g.coords[0]))[None]
    sc = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                  dt=0.01, t_final=0.1, stride=3)
    reps, final = march(sc)
    assert [round(r.t, 3) for r in reps] == [0.0, 0.03, 0.06, 0.09, 0.1]
    assert final.shape == u0.shape
    sc5 = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                   dt=0.01, t_final=0.1, stride=5)
    reps5, _ = march(sc5)
    assert [round(r.t, 3) for r in reps5] == [0.0, 0.05, 0.1]


def test_march_conserves_energy_on_a_periodic_grid():
    m, g, ops = burgers_setup(n=48)
    u0 = (0.5 * np.sin(2 * np.pi * g.coords[0]) + 0.1)[None]
    sc = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                  dt=0.002, t_final=0.2, stride=10)
    reps, _ = march(sc)
    for r in reps:
        scale = 1.0 + abs(r.rate) + abs(r.boundary_flux)
        assert abs(r.volume_residual) <= 1e-12 * scale
    drift = abs(reps[-1].energy - reps[0].energy)
    assert drift <= 1e-10


def test_energy_drift_shrinks_at_fourth_order():
    m, g, ops = burgers_setup(n=48)
    u0 = (0.5 * np.sin(2 * np.pi * g.coords[0]) + 0.1)[None]

    def drift(dt):
        sc = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                      dt=dt, t_final=0.2, stride=10 ** 9)
        reps, _ = march(sc)
        return abs(reps[-1].energy - reps[0].energy)

    ratio = drift(4e-3) / drift(2e-3)
    assert 12.0 <= ratio <= 20.0


def test_solution_error_shrinks_at_fourth_order_in_time():
    m, g, ops = burgers_setup()
    u0 = (0.4 * np.sin(2 * np.pi * g.coords[0]))[None]

    def final(dt):
        sc = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                      dt=dt, t_final=0.16, stride=10 ** 9)
        return march(sc)[1]

    ref = final(2.5e-4)
    e1 = np.max(np.abs(final(4e-3) - ref))
    e2 = np.max(np.abs(final(2e-3) - ref))
    assert 13.0 <= e1 / e2 <= 19.0


def test_dual_march_retraces_the_primal_trajectory():
    # the self-adjoint dual tendency is the exact negation of the primal one,
    # so marching the dual from the final state walks the trajectory back
    m, g, ops = burgers_setup()
    u0 = (0.4 * np.sin(2 * np.pi * g.coords[0]))[None]
    fwd = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                   dt=1e-3, t_final=0.16, stride=10 ** 9)
    uT = march(fwd)[1]
    back = Scenario(model=m, grid=g, ops=ops, mode="dual", initial=uT,
                    dt=1e-3, t_final=0.16, stride=10 ** 9)
    u0_again = march(back)[1]
    assert np.max(np.abs(u0_again - u0)) <= 1e-12


def test_coupled_march_with_zero_perturbation_matches_nonlinear_bitwise():
    m, g, ops = burgers_setup(n=24)
    rng = np.random.default_rng(61)
    u0 = (0.3 * np.sin(2 * np.pi * g.coords[0]) + 0.05)[None]
    base = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                    dt=2e-3, t_final=0.1, stride=10)
    _, u_nl = march(base)
    coupled = Scenario(model=m, grid=g, ops=ops, mode="new_linearised_coupled",
                       initial=np.zeros_like(u0), mean=u0, dt=2e-3,
                       t_final=0.1, stride=10)
    reps, (mean_final, pert_final) = march(coupled)
    assert np.array_equal(mean_final, u_nl)
    assert not pert_final.any()
    for r in reps:
        assert r.volume_residual == 0.0


def test_coupled_march_keeps_the_perturbation_energy_identity():
    m, g, ops = burgers_setup(n=48)
    x = g.coords[0]
    mean0 = np.sin(2 * np.pi * x)[None]
    pert0 = (0.01 * np.cos(2 * np.pi * x))[None]
    sc = Scenario(model=m, grid=g, ops=ops, mode="new_linearised_coupled",
                  initial=pert0, mean=mean0, dt=2e-3, t_final=0.1, stride=5)
    reps, _ = march(sc)
    for r in reps:
        scale = 1.0 + abs(r.rate) + abs(r.boundary_flux) + abs(r.sat_contribution)
        assert abs(r.volume_residual) <= 1e-12 * scale


def test_standard_linearisation_leaks_energy_where_the_new_one_does_not():
    m, g, ops = burgers_setup(n=48)
    x = g.coords[0]
    mean = np.sin(2 * np.pi * x)[None]
    pert0 = (0.01 * np.cos(2 * np.pi * x))[None]
    std = Scenario(model=m, grid=g, ops=ops, mode="standard_linearised",
                   initial=pert0, mean=mean, dt=2e-3, t_final=0.1, stride=1)
    reps_std, _ = march(std)
    worst_std = max(abs(r.volume_residual) for r in reps_std)
    assert worst_std > 1e-6
    new = Scenario(model=m, grid=g, ops=ops, mode="new_linearised_coupled",
                   initial=pert0, mean=mean, dt=2e-3, t_final=0.1, stride=1)
    reps_new, _ = march(new)
    for r in reps_new:
        scale = 1.0 + abs(r.rate) + abs(r.boundary_flux) + abs(r.sat_contribution)
        assert abs(r.volume_residual) <= 1e-12 * scale


def test_frozen_march_integrates_pure_forcing_exactly_enough():
    # zero mean coefficients reduce the scheme to du/dt = F(t)
    m, g, ops = burgers_setup(n=16, order=(2, 1))
    u0 = np.sin(2 * np.pi * g.coords[0])[None]
    F = np.ones_like(u0)
    sc = Scenario(model=m, grid=g, ops=ops, mode="frozen", initial=u0,
                  mean=np.zeros_like(u0), forcing=lambda t: np.cos(t) * F,
                  dt=0.05, t_final=1.0, stride=10 ** 9)
    _, final = march(sc)
    assert np.max(np.abs(final - (u0 + np.sin(1.0)))) <= 1e-7


def test_cfl_violation_raises():
    m, g, ops = burgers_setup()
    u0 = (0.4 * np.sin(2 * np.pi * g.coords[0]))[None]
    sc = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
                  dt=0.5, t_final=1.0)
    with pytest.raises(RuntimeError, match="CFL"):
        march(sc)


def test_blow_up_guard_raises():
    m, g, ops = burgers_setup()
    u0 = (0.4 * np.sin(2 * np.pi * g.coords[0]))[None]
    sc = Scenario(model=m, grid=g, ops=ops, mode="frozen", initial=u0,
                  mean=np.zeros_like(u0), forcing=lambda t: np.full_like(u0, 1000.0),
                  dt=0.01, t_final=1.0, stride=10 ** 9)
    with pytest.raises(RuntimeError, match="blow-up"):
        march(sc)


def test_losing_admissibility_raises():
    m = make_model("swe2d")
    g = make_grid(((0.0, 1.0), (0.0, 1.0)), (12, 12), periodic=(True, True))
    ops = build_operators(g, (2, 1))
    U0 = swe_transform(np.ones((12, 12)), np.zeros((12, 12)), np.zeros((12, 12)))
    F = np.zeros_like(U0)
    F[0] = -50.0
    sc = Scenario(model=m, grid=g, ops=ops, mode="nonlinear", initial=U0,
                  forcing=lambda t: F, dt=0.004, t_final=0.2, stride=10 ** 9)
    with pytest.raises(ValueError, match="depth"):
        march(sc)


def test_validate_scenario_rejects_bad_setups():
    m, g, ops = burgers_setup()
    u0 = np.zeros((1, 32))
    ok = dict(model=m, grid=g, ops=ops, mode="nonlinear", initial=u0,
              dt=0.01, t_final=0.1)
    validate_scenario(Scenario(**ok))
    with pytest.raises(ValueError, match="mode"):
        validate_scenario(Scenario(**{**ok, "mode": "implicit"}))
    with pytest.raises(ValueError):
        validate_scenario(Scenario(**{**ok, "dt": 0.0}))
    with pytest.raises(ValueError):
        validate_scenario(Scenario(**{**ok, "t_final": 0.001}))
    with pytest.raises(ValueError):
        validate_scenario(Scenario(**{**ok, "stride": 0}))
    with pytest.raises(ValueError):
        validate_scenario(Scenario(**{**ok, "initial": np.zeros((2, 32))}))
    with pytest.raises(ValueError, match="mean"):
        validate_scenario(Scenario(**{**ok, "mode": "frozen"}))
    assert "nonlinear" in MODES and "dual" in MODES


def test_singular_norm_models_are_refused_by_the_marcher():
    m = make_model("euler2d")
    g = make_grid(((0.0, 1.0), (0.0, 1.0)), (8, 8), periodic=(True, True))
    ops = build_operators(g, (2, 1))
    sc = Scenario(model=m, grid=g, ops=ops, mode="nonlinear",
                  initial=np.zeros((3, 8, 8)), dt=0.01, t_final=0.1)
    with pytest.raises(ValueError, match="singular"):
        validate_scenario(sc)
