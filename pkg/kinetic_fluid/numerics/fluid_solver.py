"""Isentropic compressible Navier-Stokes with kinetic drag.

Conservative variables ``(rho, q = rho u)`` are advanced with first-order
upwind fluxes, central pressure gradient and central viscous terms, inside a
Heun (RK2) wrapper. Velocity is reconstructed with a vacuum floor and is zero
where ``rho <= eps_vac``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from kinetic_fluid.errors import ConfigError, CflViolation, NegativeDensityError
from kinetic_fluid.numerics.phase_space import (
    KineticState,
    SpatialGrid,
    WallClosure,
    check_finite,
    grad_x,
    second_diff,
)

logger = logging.getLogger(__name__)

EPS_VAC = 1e-10


@dataclass(frozen=True)
class FluidParams:
    mu: float
    lam: float
    gamma: float
    dim: int = 1
    eps_vac: float = EPS_VAC

    def __post_init__(self):
        problems = []
        if not self.mu > 0.0:
            problems.append(("mu", "must satisfy mu > 0 (viscosity restriction)"))
        if not 2.0 * self.mu + self.dim * self.lam >= 0.0:
            problems.append(("lambda", f"must satisfy 2*mu + {self.dim}*lambda >= 0 (viscosity restriction)"))
        if not self.gamma > 1.0:
            problems.append(("gamma", "must satisfy gamma > 1 (pressure law P = rho^gamma)"))
        if not self.eps_vac > 0.0:
            problems.append(("eps_vac", "must be positive"))
        if problems:
            raise ConfigError(problems)


@dataclass
class FluidState:
    grid: SpatialGrid
    rho: np.ndarray
    q: np.ndarray
    time: float = 0.0
    eps_vac: float = EPS_VAC

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.rho.shape != self.grid.shape or self.q.shape != (self.grid.dim,) + self.grid.shape:
            raise ValueError("fluid fields do not match the spatial grid")

    @property
    def u(self) -> np.ndarray:
        return velocity(self.rho, self.q, self.eps_vac)

    def evolved(self, rho: np.ndarray, q: np.ndarray, time: float) -> "FluidState":
        return FluidState(self.grid, rho, q, time, self.eps_vac)


def velocity(rho: np.ndarray, q: np.ndarray, eps_vac: float = EPS_VAC) -> np.ndarray:
    occupied = rho > eps_vac
    return np.where(occupied, q / np.maximum(rho, eps_vac), 0.0)


def pressure(rho: np.ndarray, gamma: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0.0):
        raise NegativeDensityError("pressure of negative density")
    return np.power(rho, gamma)


def drag_source(kin: KineticState, u: np.ndarray) -> np.ndarray:
    """``int f (v - u) dv = m1 - n u`` per cell."""
    n, m1, _ = kin.moments()
    return m1 - n * u


def flux_divergence(s: np.ndarray, vel: np.ndarray, grid: SpatialGrid, axis: int) -> np.ndarray:
    """Upwind ``d/dx_axis (vel s)`` with face velocities averaged from the neighbours.

    Periodic grids wrap; clamped grids close the boundary faces (zero flux), so
    the sum over cells telescopes either way.
    """
    h = grid.spacing[axis]
    if grid.periodic:
        s_next = np.roll(s, -1, axis=axis)
        u_face = 0.5 * (vel + np.roll(vel, -1, axis=axis))
        flux = np.where(u_face > 0.0, u_face * s, u_face * s_next)
        return (flux - np.roll(flux, 1, axis=axis)) / h
    n = s.shape[axis]
    lo = np.take(s, np.arange(n - 1), axis=axis)
    hi = np.take(s, np.arange(1, n), axis=axis)
    u_face = 0.5 * (np.take(vel, np.arange(n - 1), axis=axis) + np.take(vel, np.arange(1, n), axis=axis))
    flux = np.where(u_face > 0.0, u_face * lo, u_face * hi)
    return np.diff(flux, axis=axis, prepend=0.0, append=0.0) / h


def divergence(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return sum(grad_x(u[k], grid)[k] for k in range(grid.dim))


def viscous_term(u: np.ndarray, grid: SpatialGrid, params: FluidParams) -> np.ndarray:
    """``mu Lap u + (mu + lambda) grad div u``; diagonal second derivatives use the compact stencil
    with mirrored walls on clamped axes."""
    d = grid.dim
    out = np.empty_like(u)
    first = [grad_x(u[j], grid) for j in range(d)]
    for i in range(d):
        lap = sum(second_diff(u[i], grid, k, WallClosure.MIRROR) for k in range(d))
        grad_div = second_diff(u[i], grid, i, WallClosure.MIRROR)
        for j in range(d):
            if j != i:
                grad_div = grad_div + grad_x(first[j][j], grid)[i]
        out[i] = params.mu * lap + (params.mu + params.lam) * grad_div
    return out


def pressure_gradient(rho: np.ndarray, grid: SpatialGrid, gamma: float) -> np.ndarray:
    return grad_x(pressure(rho, gamma), grid)


def fluid_rhs(
    rho: np.ndarray, q: np.ndarray, source: np.ndarray, grid: SpatialGrid, params: FluidParams
) -> Tuple[np.ndarray, np.ndarray]:
    u = velocity(rho, q, params.eps_vac)
    d = grid.dim
    drho = -sum(flux_divergence(rho, u[k], grid, k) for k in range(d))
    forcing = viscous_term(u, grid, params) - pressure_gradient(rho, grid, params.gamma) + source
    dq = np.empty_like(q)
    for i in range(d):
        dq[i] = forcing[i] - sum(flux_divergence(q[i], u[k], grid, k) for k in range(d))
    return drho, dq


def fluid_step(fl: FluidState, drag: np.ndarray, params: FluidParams, dt: float) -> FluidState:
    """One Heun step of the continuity and momentum equations with a frozen drag source.

    Drag only acts where the fluid is present (``rho > eps_vac`` at the start of
    the step). Raises `CflViolation` if the update produces negative density.
    """
    check_finite("rho", fl.rho)
    check_finite("q", fl.q)
    grid = fl.grid
    source = np.where(fl.rho > params.eps_vac, drag, 0.0)
    drho, dq = fluid_rhs(fl.rho, fl.q, source, grid, params)
    rho1 = fl.rho + dt * drho
    q1 = fl.q + dt * dq
    drho, dq = fluid_rhs(np.maximum(rho1, 0.0), q1, source, grid, params)
    rho_new = 0.5 * (fl.rho + (rho1 + dt * drho))
    q_new = 0.5 * (fl.q + (q1 + dt * dq))
    if np.any(rho_new < 0.0):
        logger.debug("negative density %.3e after fluid step dt=%g", float(rho_new.min()), dt)
        raise CflViolation(dt, 0.5 * dt)
    return fl.evolved(rho_new, q_new, fl.time + dt)
