"""Built-in initial-data generators.

Kinetic data is a product of a compact position profile and a compact
velocity profile, so ``supp_v f0`` is known exactly on the grid. Fluid data is
a uniform or Gaussian-bump density (optionally with a vacuum annulus) and a
single-mode velocity along the first axis.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from kinetic_fluid.errors import ConfigError
from kinetic_fluid.numerics.fluid_solver import FluidState
from kinetic_fluid.numerics.kinetic_solver import GUARD_CELLS, support_radius
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, SpatialGrid
from kinetic_fluid.schemas.config import FluidInit, KineticInit, SimConfig

logger = logging.getLogger(__name__)


def _distance_squared(grid: SpatialGrid, center: Sequence[float]) -> np.ndarray:
    """``|x - center|^2`` on cell centres, minimum image on periodic grids."""
    mesh = grid.mesh()
    total = np.zeros(grid.shape)
    for k in range(grid.dim):
        delta = mesh[k] - center[k]
        if grid.periodic:
            delta = delta - grid.length[k] * np.round(delta / grid.length[k])
        total += delta * delta
    return total


def compact_profile(r2: np.ndarray, radius: float) -> np.ndarray:
    """``max(0, R^2 - r^2)^2``: C1, zero outside ``r < R``."""
    return np.maximum(0.0, radius * radius - r2) ** 2


def position_profile(grid: SpatialGrid, center: Sequence[float], width: float) -> np.ndarray:
    """Compact bump in ``x``, equal to 1 at ``center`` and 0 beyond ``width``."""
    return compact_profile(_distance_squared(grid, center), width) / width**4


def velocity_profile(grid: PhaseGrid, center: Sequence[float], radius: float) -> np.ndarray:
    axes = grid.v_mesh()
    r2 = sum((axes[k] - center[k]) ** 2 for k in range(grid.dim))
    return compact_profile(r2, radius)


def bump(grid: PhaseGrid, amplitude: float, r0: float, x_center, x_width: float, v_center) -> np.ndarray:
    """``A chi(x) max(0, R0^2 - |v - v_c|^2)^2``."""
    chi = position_profile(grid.space, x_center, x_width)
    psi = velocity_profile(grid, v_center, r0)
    return amplitude * np.multiply.outer(chi, psi)


def two_beam(grid: PhaseGrid, amplitude: float, r0: float, x_center, x_width: float, speed: float) -> np.ndarray:
    """Two counter-propagating bumps of radius ``r0`` at ``v = +-speed e_1``."""
    offset = np.zeros(grid.dim)
    offset[0] = speed
    chi = position_profile(grid.space, x_center, x_width)
    psi = 0.5 * (velocity_profile(grid, offset, r0) + velocity_profile(grid, -offset, r0))
    return amplitude * np.multiply.outer(chi, psi)


def uniform_density(grid: SpatialGrid, density: float) -> np.ndarray:
    return np.full(grid.shape, float(density))


def gaussian_density(grid: SpatialGrid, density: float, amplitude: float, width: float) -> np.ndarray:
    r2 = _distance_squared(grid, grid.center)
    return density + amplitude * np.exp(-r2 / (2.0 * width * width))


def carve_vacuum(rho: np.ndarray, grid: SpatialGrid, inner: float, outer: float) -> np.ndarray:
    """Zero ``rho`` on the annulus ``inner <= |x - x_c| < outer``."""
    r = np.sqrt(_distance_squared(grid, grid.center))
    return np.where((r >= inner) & (r < outer), 0.0, rho)


def single_mode_velocity(grid: SpatialGrid, amplitude: float, mode: int) -> np.ndarray:
    """``u_1 = A sin(2 pi k (x_1 - lower) / L)``; other components zero."""
    u = np.zeros((grid.dim,) + grid.shape)
    x = grid.mesh()[0]
    u[0] = amplitude * np.sin(2.0 * np.pi * mode * (x - grid.lower[0]) / grid.length[0])
    return u


def kinetic_data(config: SimConfig, grid: Optional[PhaseGrid] = None) -> KineticState:
    grid = grid or config.phase_grid()
    space = grid.space
    center = config.axis("kinetic_center_x") if config.kinetic_center_x is not None else tuple(space.center)
    width = config.kinetic_width_x or 0.25 * float(np.min(space.length))
    if config.kinetic_init is KineticInit.ZERO or config.kinetic_amplitude == 0.0:
        f = np.zeros(grid.shape)
    elif config.kinetic_init is KineticInit.TWO_BEAM:
        f = two_beam(grid, config.kinetic_amplitude, config.r0, center, width, config.kinetic_beam_speed)
    else:
        f = bump(grid, config.kinetic_amplitude, config.r0, center, width, config.axis("kinetic_center_v"))
    return KineticState(grid, f, 0.0)


def fluid_data(config: SimConfig, grid: Optional[SpatialGrid] = None) -> FluidState:
    grid = grid or config.spatial_grid()
    if config.fluid_init is FluidInit.VACUUM:
        rho = np.zeros(grid.shape)
    elif config.fluid_init is FluidInit.GAUSSIAN:
        width = config.fluid_bump_width or 0.1 * float(np.min(grid.length))
        rho = gaussian_density(grid, config.fluid_density, config.fluid_bump_amplitude, width)
    else:
        rho = uniform_density(grid, config.fluid_density)
    if config.fluid_vacuum_inner is not None:
        rho = carve_vacuum(rho, grid, config.fluid_vacuum_inner, config.fluid_vacuum_outer)
    u = single_mode_velocity(grid, config.fluid_velocity_amplitude, config.fluid_mode)
    if config.fluid_velocity_amplitude > config.max_fluid_speed:
        logger.warning(
            "fluid_velocity_amplitude %g exceeds max_fluid_speed %g used for the velocity guard",
            config.fluid_velocity_amplitude,
            config.max_fluid_speed,
        )
    q = np.where(rho > config.eps_vac, rho * u, 0.0)
    return FluidState(grid, rho, q, 0.0, config.eps_vac)


def check_guard(kin: KineticState) -> None:
    """Reject data whose support already reaches the guard radius or the velocity guard band."""
    grid = kin.grid
    radius = support_radius(kin)
    limit = min(vm - GUARD_CELLS * dv for vm, dv in zip(grid.v_max, grid.dv))
    if radius > limit or (grid.r_guard > 0.0 and radius > grid.r_guard):
        raise ConfigError(
            [("v_max", f"initial support radius {radius:g} exceeds the velocity guard (limit {min(limit, grid.r_guard or limit):g})")]
        )


def generate_initial(config: SimConfig) -> Tuple[KineticState, FluidState]:
    """Initial ``(f0, (rho0, q0))`` for ``config``."""
    kin = kinetic_data(config)
    check_guard(kin)
    fl = fluid_data(config, kin.grid.space)
    logger.info(
        "initial data: kinetic=%s (R0=%g), fluid=%s, grid %s x %s",
        config.kinetic_init.value,
        config.r0,
        config.fluid_init.value,
        kin.grid.space.cells,
        kin.grid.v_cells,
    )
    return kin, fl
