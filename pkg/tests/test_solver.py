"""Integrating-factor solver: exactness, convergence, and diagnostics."""

import math

import numpy as np
import pytest

from torusns import solver as slv
from torusns.construction import heat_mode_residual, sin_shear
from torusns.spectral import Grid, SpectralField, VectorField

GRID = Grid(64)


def test_zero_run_is_bitwise_zero():
    cfg = slv.SolverConfig(dt=1e-3, t_end=1e-2, check_cfl=False)
    traj = slv.solve_forced_ns(GRID, cfg)
    assert traj.status == "completed"
    for s in traj.states:
        assert np.all(s.u1.coef == 0.0) and np.all(s.u2.coef == 0.0)


def test_heat_eigenmode_exact():
    # with zero advection the stepper must reproduce e^{t Delta} to
    # machine precision (the integrating factor is exact)
    u0 = VectorField(SpectralField.zero(GRID),
                     SpectralField.from_modes(GRID, {(3, 0): 0.5,
                                                     (-3, 0): 0.5}))
    cfg = slv.SolverConfig(dt=1e-3, t_end=5e-2, check_cfl=False)
    traj = slv.solve_forced_ns(GRID, cfg, u0=u0)
    t = traj.final_time
    expect = math.exp(-9.0 * t)
    got = traj.states[-1].u2.coef[3, 0]
    assert abs(got - 0.5 * expect) <= 1e-13


def test_taylor_green_sits_at_floor():
    for dt in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
        err = slv.taylor_green_error(GRID, dt, t_end=0.1)
        assert err <= 1e-10


def test_manufactured_solution_fourth_order():
    errors = {dt: slv.manufactured_error(GRID, dt, t_end=1.0)
              for dt in (1e-2, 5e-3, 2.5e-3, 1.25e-3)}
    order = slv.convergence_order(errors)
    assert order >= 3.8, (errors, order)


def test_convergence_order_floor_convention():
    assert slv.convergence_order({1e-2: 1e-15, 5e-3: 2e-15}) == math.inf


def test_shear_solution_exact_component():
    lam = 25
    grid = Grid(128)
    u0 = VectorField(SpectralField.zero(grid), sin_shear(grid, lam).u2)
    cfg = slv.SolverConfig(dt=2e-5, t_end=2e-3, check_cfl=False)
    traj = slv.solve_forced_ns(grid, cfg, u0=u0)
    final = traj.states[-1]
    t = traj.final_time
    exact = math.exp(-lam * lam * t)
    closed = exact * u0
    assert final.u1.sup_norm() <= 1e-8
    assert (final - closed).sup_norm() <= 1e-8 * closed.sup_norm()
    assert slv.ns_residual(traj) <= 1e-8


def test_energy_law_shear_and_tg():
    lam = 25
    grid = Grid(128)
    u0 = VectorField(SpectralField.zero(grid), sin_shear(grid, lam).u2)
    cfg = slv.SolverConfig(dt=2e-5, t_end=2e-3, check_cfl=False)
    traj = slv.solve_forced_ns(grid, cfg, u0=u0)
    assert slv.energy_law_residual(traj) <= 1e-7

    cfg2 = slv.SolverConfig(dt=1e-3, t_end=0.1, check_cfl=False)
    traj2 = slv.solve_forced_ns(GRID, cfg2, u0=slv.taylor_green(GRID))
    assert slv.energy_law_residual(traj2) <= 1e-7


def test_heat_mode_cancellation():
    grid = Grid(512)
    for lam in (25, 125):
        resid = heat_mode_residual(grid, lam, times=(0.0, 1e-5, 1e-4))
        assert resid <= 1e-10


def test_cfl_abort():
    big = VectorField(SpectralField.from_modes(GRID, {(1, 0): 500.0,
                                                      (-1, 0): 500.0}),
                      SpectralField.zero(GRID))
    cfg = slv.SolverConfig(dt=1e-2, t_end=1.0, check_cfl=True)
    traj = slv.solve_forced_ns(GRID, cfg, u0=big)
    assert traj.status == "cfl"


def test_max_steps_abort():
    u0 = slv.taylor_green(GRID)
    cfg = slv.SolverConfig(dt=1e-4, t_end=1.0, max_steps=5, check_cfl=False)
    traj = slv.solve_forced_ns(GRID, cfg, u0=u0)
    assert traj.status == "max-steps"
    assert len(traj.step_times) <= 6


def test_divergence_preserved():
    u0 = slv.taylor_green(GRID)
    cfg = slv.SolverConfig(dt=1e-3, t_end=0.05, check_cfl=False)
    traj = slv.solve_forced_ns(GRID, cfg, u0=u0)
    assert traj.divergence_residual() <= 1e-11


def test_transport_diffusion_duhamel():
    # zero velocity: u solves the heat equation with source g; constant
    # source on one mode has the closed Duhamel form
    g = SpectralField.from_modes(GRID, {(2, 0): 1.0, (-2, 0): 1.0})
    zero_v = VectorField.zero(GRID)
    cfg = slv.SolverConfig(dt=1e-3, t_end=0.1, check_cfl=False)
    traj = slv.solve_transport_diffusion(
        GRID, cfg, velocity=lambda t: zero_v, source=lambda t: g,
        u0=SpectralField.zero(GRID))
    t = traj.final_time
    expect = (1.0 - math.exp(-4.0 * t)) / 4.0
    got = traj.states[-1].coef[2, 0]
    assert abs(got - expect) <= 1e-8 * expect
