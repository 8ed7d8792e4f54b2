"""Tests for the compressible Navier-Stokes step and its building blocks."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kinetic_fluid.errors import CflViolation, ConfigError, NegativeDensityError
from kinetic_fluid.numerics.fluid_solver import (
    FluidParams,
    FluidState,
    drag_source,
    flux_divergence,
    fluid_step,
    pressure,
    velocity,
    viscous_term,
)
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, SpatialGrid

PARAMS = FluidParams(mu=0.1, lam=0.0, gamma=1.4)


@pytest.mark.parametrize(
    "kwargs, key",
    [
        ({"mu": 0.0, "lam": 0.0, "gamma": 1.4}, "mu"),
        ({"mu": 0.1, "lam": -0.5, "gamma": 1.4, "dim": 2}, "lambda"),
        ({"mu": 0.1, "lam": 0.0, "gamma": 0.9}, "gamma"),
    ],
)
def test_fluid_params_name_the_violated_constraint(kwargs, key):
    with pytest.raises(ConfigError) as info:
        FluidParams(**kwargs)
    assert info.value.key == key


def test_velocity_is_zero_in_vacuum():
    rho = np.array([1.0, 0.0, 1e-12, 2.0])
    q = np.array([[0.5, 0.3, 1e-13, 1.0]])
    assert_allclose(velocity(rho, q), [[0.5, 0.0, 0.0, 0.5]])


def test_pressure_rejects_negative_density():
    assert_allclose(pressure(np.array([0.0, 1.0, 4.0]), 1.5), [0.0, 1.0, 8.0])
    with pytest.raises(NegativeDensityError):
        pressure(np.array([1.0, -1e-3]), 1.4)


def test_drag_source_matches_phase_quadrature(rng):
    grid = PhaseGrid(SpatialGrid((0.0,), (1.0,), (6,)), (2.0,), (6,))
    f = rng.random(grid.shape)
    u = rng.uniform(-1.0, 1.0, (1, 6))
    vs = grid.v_axis_centers(0)
    expected = np.array([[sum(f[i, k] * (vs[k] - u[0, i]) for k in range(6)) * grid.dv[0] for i in range(6)]])
    assert_allclose(drag_source(KineticState(grid, f), u), expected, rtol=1e-13, atol=1e-12)


@pytest.mark.parametrize("boundary", ["periodic", "clamped"])
def test_flux_divergence_telescopes(rng, boundary):
    grid = SpatialGrid((0.0,), (1.0,), (12,), boundary)
    s = rng.random(12)
    vel = rng.uniform(-1.0, 1.0, 12)
    assert abs(flux_divergence(s, vel, grid, 0).sum()) < 1e-12


def _wave_state(boundary="periodic"):
    grid = SpatialGrid((0.0,), (1.0,), (32,), boundary)
    x = grid.axis_centers(0)
    rho = 1.0 + 0.2 * np.sin(2.0 * np.pi * x)
    q = (rho * 0.3 * np.sin(2.0 * np.pi * x))[None]
    return FluidState(grid, rho, q)


@pytest.mark.parametrize("boundary", ["periodic", "clamped"])
def test_fluid_step_conserves_mass(boundary):
    fl = _wave_state(boundary)
    mass = fl.rho.sum()
    for _ in range(20):
        fl = fluid_step(fl, np.zeros_like(fl.q), PARAMS, 1e-3)
    assert fl.time == pytest.approx(0.02)
    assert abs(fl.rho.sum() - mass) / mass < 1e-13


def test_fluid_at_rest_stays_at_rest():
    grid = SpatialGrid((0.0, 0.0), (1.0, 1.0), (8, 8))
    fl = FluidState(grid, np.full((8, 8), 0.7), np.zeros((2, 8, 8)))
    out = fluid_step(fl, np.zeros((2, 8, 8)), PARAMS, 0.01)
    assert np.array_equal(out.rho, fl.rho)
    assert np.array_equal(out.q, fl.q)


def test_uniform_drag_accelerates_uniform_fluid():
    grid = SpatialGrid((0.0,), (1.0,), (8,))
    fl = FluidState(grid, np.ones(8), np.zeros((1, 8)))
    out = fluid_step(fl, np.full((1, 8), 2.0), PARAMS, 0.01)
    assert_allclose(out.q, 0.02)
    assert_allclose(out.rho, 1.0)


def test_drag_is_masked_in_vacuum():
    grid = SpatialGrid((0.0,), (1.0,), (8,))
    fl = FluidState(grid, np.zeros(8), np.zeros((1, 8)))
    out = fluid_step(fl, np.ones((1, 8)), PARAMS, 0.01)
    assert np.array_equal(out.rho, np.zeros(8))
    assert np.array_equal(out.q, np.zeros((1, 8)))


def test_negative_density_raises_cfl_violation():
    grid = SpatialGrid((0.0,), (1.0,), (8,))
    rho = np.zeros(8)
    rho[3] = 1.0
    q = np.zeros((1, 8))
    q[0, 3] = 1.0
    with pytest.raises(CflViolation) as info:
        fluid_step(FluidState(grid, rho, q), np.zeros((1, 8)), PARAMS, 1.0)
    assert info.value.suggested_dt == pytest.approx(0.5)


@pytest.mark.parametrize("boundary", ["periodic", "clamped"])
def test_viscous_term_dissipates(rng, boundary):
    grid = SpatialGrid((0.0,), (1.0,), (16,), boundary)
    params = FluidParams(mu=0.1, lam=0.3, gamma=1.4)
    for _ in range(20):
        u = rng.standard_normal((1, 16))
        assert (u * viscous_term(u, grid, params)).sum() <= 1e-10


def test_clamped_viscous_flow_decays():
    grid = SpatialGrid((0.0,), (1.0,), (16,), "clamped")
    x = grid.axis_centers(0)
    fl = FluidState(grid, np.ones(16), (0.1 * np.sin(2.0 * np.pi * x))[None])
    start = 0.5 * (fl.q**2).sum()
    for _ in range(200):
        fl = fluid_step(fl, np.zeros_like(fl.q), FluidParams(mu=0.1, lam=0.0, gamma=1.4), 1e-3)
    assert np.abs(fl.u).max() < 0.1
    assert 0.5 * (fl.q**2 / fl.rho).sum() < start
