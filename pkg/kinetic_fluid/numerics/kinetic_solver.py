"""Semi-Lagrangian advancement of the kinetic Cucker-Smale equation.

Over one step the force ``b - (1 + a) v + u`` is frozen at the arrival cell,
which makes the characteristic system an affine ODE in ``v`` with a closed-form
solution. Values are transported along it and multiplied by the phase-volume
factor ``exp(d (1 + a) dt)``.
"""

from __future__ import annotations

import logging
from typing import NamedTuple, Optional

import numpy as np

from kinetic_fluid.errors import SupportEscape, TimestepError
from kinetic_fluid.numerics.alignment import AlignmentFields
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, multilinear

logger = logging.getLogger(__name__)

MAX_EXPONENT = 30.0
GUARD_CELLS = 2


class CharTraceResult(NamedTuple):
    x_b: np.ndarray
    v_b: np.ndarray
    J: np.ndarray


def trace_back(x, v, a, b, u, dt: float, dim: Optional[int] = None) -> CharTraceResult:
    """Exact backward solution of ``X' = V``, ``V' = (b + u) - (1 + a) V`` over ``dt``.

    ``x``, ``v``, ``b`` and ``u`` carry the vector component on axis 0 and
    broadcast against each other and against ``a`` on the remaining axes.
    """
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if dim is None:
        dim = x.shape[0] if x.ndim else 1
    dt = np.asarray(dt, dtype=np.float64)
    if np.any(dt < 0.0):
        raise TimestepError(f"time step must be nonnegative, got {float(np.min(dt))}")
    if np.any(a < 0.0):
        raise ValueError("alignment coefficient a must be nonnegative")
    lam = 1.0 + a
    exponent = lam * dt
    if np.any(exponent > MAX_EXPONENT):
        raise TimestepError(f"characteristic exponent {float(np.max(exponent)):.3g} exceeds {MAX_EXPONENT}")
    c = (np.asarray(b) + np.asarray(u)) / lam
    growth = np.expm1(exponent)
    v_b = v + (v - c) * growth
    x_b = x - c * dt - (v - c) * (growth / lam)
    J = np.exp(dim * exponent)
    return CharTraceResult(x_b, v_b, J)


def _guard_band_mask(grid: PhaseGrid) -> np.ndarray:
    mask = np.zeros(grid.v_cells, dtype=bool)
    for k, n in enumerate(grid.v_cells):
        edge = [slice(None)] * grid.dim
        edge[k] = slice(0, GUARD_CELLS)
        mask[tuple(edge)] = True
        edge[k] = slice(n - GUARD_CELLS, n)
        mask[tuple(edge)] = True
    return mask


def _x_edge_mask(grid: PhaseGrid) -> np.ndarray:
    mask = np.zeros(grid.space.cells, dtype=bool)
    for k in range(grid.dim):
        edge = [slice(None)] * grid.dim
        edge[k] = 0
        mask[tuple(edge)] = True
        edge[k] = -1
        mask[tuple(edge)] = True
    return mask


def check_support(f: np.ndarray, grid: PhaseGrid) -> None:
    """Raise `SupportEscape` if ``f`` reaches the velocity guard band (or a clamped position edge)."""
    peak = float(np.max(f)) if f.size else 0.0
    if peak <= 0.0:
        return
    threshold = 1e-14 * peak
    d = grid.dim
    band = np.broadcast_to(_guard_band_mask(grid).reshape((1,) * d + grid.v_cells), grid.shape)
    if not grid.space.periodic:
        edge = _x_edge_mask(grid).reshape(grid.space.cells + (1,) * d)
        band = band | np.broadcast_to(edge, grid.shape)
    offending = band & (f > threshold)
    if offending.any():
        index = np.unravel_index(int(np.argmax(np.where(offending, f, -1.0))), grid.shape)
        x = tuple(float(grid.space.axis_centers(k)[index[k]]) for k in range(d))
        v = tuple(float(grid.v_axis_centers(k)[index[d + k]]) for k in range(d))
        raise SupportEscape((x, v), f"kinetic support reached the guard band at x={x}, v={v}; increase v_max")


def kinetic_step(kin: KineticState, u_field: np.ndarray, fields: AlignmentFields, dt: float) -> KineticState:
    """Advance ``f`` by ``dt``: ``f'(x, v) = J * f(x_b, v_b)`` with coefficients frozen at ``x``."""
    fields.ensure_fresh(kin.time)
    grid = kin.grid
    space = grid.space
    d = grid.dim
    if dt == 0.0:
        return kin.evolved(kin.f.copy(), kin.time)

    x_pad = (1,) * d
    a = fields.a.reshape(space.cells + x_pad)
    b = fields.b.reshape((d,) + space.cells + x_pad)
    u = np.asarray(u_field, dtype=np.float64).reshape((d,) + space.cells + x_pad)
    x = np.stack([np.broadcast_to(grid.x_component(k), grid.shape) for k in range(d)])
    v = np.stack([np.broadcast_to(grid.v_component(k), grid.shape) for k in range(d)])
    traced = trace_back(x, v, a, b, u, dt, d)

    frac = []
    for k in range(d):
        frac.append((traced.x_b[k] - space.lower[k]) / space.spacing[k] - 0.5)
    for k in range(d):
        frac.append((traced.v_b[k] + grid.v_max[k]) / grid.dv[k] - 0.5)
    periodic = [space.periodic] * d + [False] * d
    f_new = traced.J * multilinear(kin.f, frac, periodic)
    check_support(f_new, grid)
    return kin.evolved(f_new, kin.time + dt)


def support_radius(kin: KineticState, threshold: Optional[float] = None) -> float:
    """``R(t) = max |v|`` over cells with ``f > threshold`` (default ``1e-14 * max f``)."""
    f = kin.f
    peak = float(np.max(f)) if f.size else 0.0
    if peak <= 0.0:
        return 0.0
    if threshold is None:
        threshold = 1e-14 * peak
    occupied = (f > threshold).any(axis=kin.grid.x_axes)
    if not occupied.any():
        return 0.0
    speed = np.sqrt((kin.grid.v_mesh() ** 2).sum(axis=0))
    return float(np.max(speed[occupied]))
