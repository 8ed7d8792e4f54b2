"""Tests for the built-in initial-data generators."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kinetic_fluid.errors import ConfigError
from kinetic_fluid.io.initial_data import (
    bump,
    carve_vacuum,
    check_guard,
    fluid_data,
    gaussian_density,
    generate_initial,
    kinetic_data,
    single_mode_velocity,
    two_beam,
)
from kinetic_fluid.numerics.kinetic_solver import support_radius
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, SpatialGrid


def _grid(v_cells=32):
    return PhaseGrid(SpatialGrid((0.0,), (1.0,), (16,)), (4.0,), (v_cells,))


def test_bump_is_supported_in_the_initial_ball():
    grid = _grid()
    f = bump(grid, 2.0, 1.0, (0.5,), 0.25, (0.5,))
    assert f.min() >= 0.0
    speeds = grid.v_axis_centers(0)
    occupied = (f > 0.0).any(axis=0)
    assert np.all(np.abs(speeds[occupied] - 0.5) < 1.0)
    assert support_radius(KineticState(grid, f)) < 1.5


def test_two_beam_is_mirror_symmetric_in_velocity():
    grid = _grid()
    f = two_beam(grid, 1.0, 0.5, (0.5,), 0.25, 1.0)
    assert_allclose(f, f[:, ::-1])
    # beams of radius 0.5 at +-1 leave the slow cells empty
    assert not f[:, 15:17].any()
    assert f.max() > 0.0


def test_zero_amplitude_gives_empty_kinetic_state(config_factory):
    kin = kinetic_data(config_factory(kinetic_amplitude=0.0))
    assert not kin.f.any()
    kin = kinetic_data(config_factory(kinetic_init="zero"))
    assert not kin.f.any()


def test_gaussian_density_peaks_at_box_centre():
    grid = SpatialGrid((0.0,), (1.0,), (17,))
    rho = gaussian_density(grid, 1.0, 0.5, 0.1)
    assert rho.argmax() == 8
    assert rho.max() == pytest.approx(1.5)
    assert rho.min() > 1.0


def test_carve_vacuum_zeroes_the_annulus():
    grid = SpatialGrid((0.0,), (1.0,), (16,))
    rho = carve_vacuum(np.ones(16), grid, 0.1, 0.2)
    r = np.abs(grid.axis_centers(0) - 0.5)
    assert np.array_equal(rho == 0.0, (r >= 0.1) & (r < 0.2))


def test_single_mode_velocity():
    grid = SpatialGrid((0.0, 0.0), (2.0, 1.0), (8, 4))
    u = single_mode_velocity(grid, 0.3, 2)
    x = grid.mesh()[0]
    assert_allclose(u[0], 0.3 * np.sin(2.0 * np.pi * 2 * x / 2.0))
    assert not u[1].any()


def test_vacuum_annulus_fluid_state(config_factory):
    config = config_factory(fluid_vacuum_inner=0.1, fluid_vacuum_outer=0.2, fluid_velocity_amplitude=0.5)
    fl = fluid_data(config)
    vacuum = fl.rho == 0.0
    assert vacuum.any()
    assert not fl.q[:, vacuum].any()
    assert not fl.u[:, vacuum].any()


def test_vacuum_fluid_init(config_factory):
    fl = fluid_data(config_factory(fluid_init="vacuum", fluid_velocity_amplitude=0.2))
    assert not fl.rho.any() and not fl.q.any()


def test_fast_fluid_velocity_is_warned_about(config_factory, caplog):
    with caplog.at_level(logging.WARNING, logger="kinetic_fluid.io.initial_data"):
        fluid_data(config_factory(fluid_velocity_amplitude=2.0))
    assert "max_fluid_speed" in caplog.text


def test_check_guard_rejects_support_beyond_guard():
    grid = PhaseGrid(SpatialGrid((0.0,), (1.0,), (16,)), (4.0,), (32,), r_guard=0.5)
    kin = KineticState(grid, bump(grid, 1.0, 1.0, (0.5,), 0.25, (0.0,)))
    with pytest.raises(ConfigError) as info:
        check_guard(kin)
    assert info.value.key == "v_max"


def test_generate_initial_shares_the_grid(config):
    kin, fl = generate_initial(config)
    assert kin.grid == config.phase_grid()
    assert fl.grid == kin.grid.space
    assert kin.time == fl.time == 0.0
    assert fl.eps_vac == config.eps_vac
