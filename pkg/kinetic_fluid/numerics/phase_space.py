"""Grids, field storage, quadrature, interpolation and finite differences.

Layout conventions used across the package:

- spatial scalar fields have shape ``grid.cells``;
- spatial vector fields have shape ``(d, *grid.cells)``;
- a phase-space distribution has shape ``(*x_cells, *v_cells)``, position
  axes first.

Reductions go through ``numpy.sum`` over whole arrays, which uses pairwise
summation in a fixed order for a given shape, so results do not depend on how
the caller splits work.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from kinetic_fluid.errors import GridError, NonFiniteError, SupportEscape

logger = logging.getLogger(__name__)

# fractional indices closer than this to an integer snap onto the node
_NODE_SNAP = 1e-12


class Boundary(str, Enum):
    PERIODIC = "periodic"
    CLAMPED = "clamped"


class WallClosure(str, Enum):
    """Boundary rows of the second difference on clamped axes."""

    ONE_SIDED = "one_sided"
    MIRROR = "mirror"


def _as_tuple(values, dtype) -> tuple:
    return tuple(dtype(v) for v in np.atleast_1d(values))


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centred tensor grid over a position box."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    cells: Tuple[int, ...]
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "lower", _as_tuple(self.lower, float))
        object.__setattr__(self, "upper", _as_tuple(self.upper, float))
        object.__setattr__(self, "cells", _as_tuple(self.cells, int))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        d = len(self.cells)
        if not 1 <= d <= 3:
            raise GridError(f"spatial dimension must be 1..3, got {d}")
        if len(self.lower) != d or len(self.upper) != d:
            raise GridError("lower, upper and cells must have one entry per axis")
        for axis, (lo, hi, n) in enumerate(zip(self.lower, self.upper, self.cells)):
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise GridError(f"axis {axis}: upper bound {hi} must exceed lower bound {lo}")
            if n < 4:
                raise GridError(f"axis {axis}: need at least 4 cells, got {n}")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.cells

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def length(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def spacing(self) -> np.ndarray:
        return self.length / np.asarray(self.cells)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.lower[axis] + (np.arange(self.cells[axis]) + 0.5) * self.spacing[axis]

    def mesh(self) -> np.ndarray:
        """Cell-centre coordinates, shape ``(d, *cells)``."""
        axes = [self.axis_centers(k) for k in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """Cell centres as an ``(N, d)`` array in row-major cell order."""
        return self.mesh().reshape(self.dim, -1).T


@dataclass(frozen=True)
class PhaseGrid:
    """Position grid times a symmetric velocity box ``[-v_max, v_max]^d``."""

    space: SpatialGrid
    v_max: Tuple[float, ...]
    v_cells: Tuple[int, ...]
    r_guard: float = 0.0

    def __post_init__(self):
        d = self.space.dim
        v_max = _as_tuple(self.v_max, float)
        v_cells = _as_tuple(self.v_cells, int)
        if len(v_max) == 1 and d > 1:
            v_max = v_max * d
        if len(v_cells) == 1 and d > 1:
            v_cells = v_cells * d
        object.__setattr__(self, "v_max", v_max)
        object.__setattr__(self, "v_cells", v_cells)
        object.__setattr__(self, "r_guard", float(self.r_guard))
        if len(v_max) != d or len(v_cells) != d:
            raise GridError("velocity box must have one entry per spatial axis")
        for axis, (vm, n) in enumerate(zip(v_max, v_cells)):
            if not np.isfinite(vm) or vm <= 0.0:
                raise GridError(f"velocity axis {axis}: v_max must be positive, got {vm}")
            if n < 4:
                raise GridError(f"velocity axis {axis}: need at least 4 cells, got {n}")
        if self.r_guard > 0.0 and min(v_max) <= self.r_guard:
            raise GridError(f"v_max={min(v_max):g} must exceed the support guard radius {self.r_guard:g}")

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.space.cells + self.v_cells

    @property
    def x_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.dim))

    @property
    def v_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.dim, 2 * self.dim))

    @property
    def dv(self) -> np.ndarray:
        return 2.0 * np.asarray(self.v_max) / np.asarray(self.v_cells)

    @property
    def v_cell_volume(self) -> float:
        return float(np.prod(self.dv))

    @property
    def cell_volume(self) -> float:
        return self.space.cell_volume * self.v_cell_volume

    def v_axis_centers(self, axis: int) -> np.ndarray:
        return -self.v_max[axis] + (np.arange(self.v_cells[axis]) + 0.5) * self.dv[axis]

    def v_mesh(self) -> np.ndarray:
        """Velocity-cell centres, shape ``(d, *v_cells)``."""
        axes = [self.v_axis_centers(k) for k in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def v_component(self, k: int) -> np.ndarray:
        """``v_k`` broadcastable against a phase array."""
        shape = (1,) * self.dim + tuple(n if j == k else 1 for j, n in enumerate(self.v_cells))
        return self.v_axis_centers(k).reshape(shape)

    def speed_squared(self) -> np.ndarray:
        """``|v|^2`` broadcastable against a phase array."""
        return sum(self.v_component(k) ** 2 for k in range(self.dim))

    def x_component(self, k: int) -> np.ndarray:
        """``x_k`` broadcastable against a phase array."""
        shape = tuple(n if j == k else 1 for j, n in enumerate(self.space.cells)) + (1,) * self.dim
        return self.space.axis_centers(k).reshape(shape)


class Moments(NamedTuple):
    n: np.ndarray
    m1: np.ndarray
    m2: np.ndarray


def check_finite(name: str, values: np.ndarray) -> None:
    finite = np.isfinite(values)
    if not finite.all():
        index = np.unravel_index(int(np.argmin(finite)), values.shape)
        raise NonFiniteError(name, index)


def moments(f: np.ndarray, grid: PhaseGrid) -> Moments:
    """Midpoint quadratures ``n = int f dv``, ``m1 = int f v dv``, ``m2 = int f |v|^2 dv``."""
    check_finite("f", f)
    dv = grid.v_cell_volume
    axes = grid.v_axes
    n = f.sum(axis=axes) * dv
    m1 = np.stack([(f * grid.v_component(k)).sum(axis=axes) * dv for k in range(grid.dim)])
    m2 = (f * grid.speed_squared()).sum(axis=axes) * dv
    return Moments(n, m1, m2)


@dataclass
class KineticState:
    """Distribution ``f`` on a phase grid with lazily cached moments."""

    grid: PhaseGrid
    f: np.ndarray
    time: float = 0.0
    _moments: Optional[Moments] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=np.float64)
        if self.f.shape != self.grid.shape:
            raise GridError(f"f has shape {self.f.shape}, grid expects {self.grid.shape}")

    @property
    def moments_valid(self) -> bool:
        return self._moments is not None

    def moments(self) -> Moments:
        if self._moments is None:
            self._moments = moments(self.f, self.grid)
        return self._moments

    def invalidate(self) -> None:
        self._moments = None

    def evolved(self, f: np.ndarray, time: float) -> "KineticState":
        return KineticState(self.grid, f, time)


def _fractional_index(coord: np.ndarray, lower: float, spacing: float) -> np.ndarray:
    s = (np.asarray(coord, dtype=np.float64) - lower) / spacing - 0.5
    nearest = np.round(s)
    return np.where(np.abs(s - nearest) < _NODE_SNAP, nearest, s)


def multilinear(values: np.ndarray, frac: Sequence[np.ndarray], periodic: Sequence[bool]) -> np.ndarray:
    """Multilinear interpolation at fractional cell indices.

    Periodic axes wrap; on other axes, neighbours outside the array count as
    zero. The result is a convex combination of the corner values (and zero),
    accumulated in a fixed corner order.
    """
    shape = values.shape
    flat = values.ravel()
    lows, weights = [], []
    for s in frac:
        i0 = np.floor(s).astype(np.intp)
        lows.append(i0)
        weights.append(s - i0)
    out = np.zeros(np.broadcast(*frac).shape)
    for corner in itertools.product((0, 1), repeat=len(shape)):
        weight = 1.0
        valid = True
        index = []
        for bit, i0, w, n, wrap in zip(corner, lows, weights, shape, periodic):
            i = i0 + bit
            weight = weight * (w if bit else 1.0 - w)
            if wrap:
                i = np.mod(i, n)
            else:
                valid = valid & (i >= 0) & (i < n)
                i = np.clip(i, 0, n - 1)
            index.append(i)
        sample = flat[np.ravel_multi_index(tuple(np.broadcast_arrays(*index)), shape)]
        out += np.where(valid, weight * sample, 0.0)
    return out


def interpolate(f: np.ndarray, grid: PhaseGrid, x, v) -> Union[float, np.ndarray]:
    """Evaluate ``f`` at phase points ``(x, v)`` by multilinear interpolation.

    ``x`` and ``v`` have shape ``(d,)`` or ``(M, d)``. Periodic position axes
    wrap; on clamped axes and on velocity axes, points may sit up to one cell
    outside the box (zero extension). Points further out raise `SupportEscape`.
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    scalar = x.ndim <= 1
    x = np.atleast_2d(x)
    v = np.atleast_2d(v)
    space = grid.space
    h = space.spacing
    frac = []
    for k in range(grid.dim):
        xk = x[:, k]
        if space.periodic:
            xk = space.lower[k] + np.mod(xk - space.lower[k], space.length[k])
        else:
            outside = (xk < space.lower[k] - h[k]) | (xk > space.upper[k] + h[k])
            if outside.any():
                i = int(np.argmax(outside))
                raise SupportEscape((tuple(x[i]), tuple(v[i])))
        frac.append(_fractional_index(xk, space.lower[k], h[k]))
    for k in range(grid.dim):
        vk = v[:, k]
        outside = np.abs(vk) > grid.v_max[k] + grid.dv[k]
        if outside.any():
            i = int(np.argmax(outside))
            raise SupportEscape((tuple(x[i]), tuple(v[i])))
        frac.append(_fractional_index(vk, -grid.v_max[k], grid.dv[k]))
    periodic = [space.periodic] * grid.dim + [False] * grid.dim
    result = multilinear(f, frac, periodic)
    return float(result[0]) if scalar else result


def _diff(values: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)
    return np.gradient(values, h, axis=axis, edge_order=2)


def grad_x(values: np.ndarray, grid: Union[SpatialGrid, PhaseGrid]) -> np.ndarray:
    """Second-order central gradient over the position axes.

    Accepts a spatial field (shape ``cells``) or a phase field (position axes
    first). Clamped boundaries use second-order one-sided differences.
    """
    check_finite("field", values)
    space = grid.space if isinstance(grid, PhaseGrid) else grid
    return np.stack([_diff(values, k, space.spacing[k], space.periodic) for k in range(space.dim)])


def grad_v(f: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Second-order gradient over the velocity axes of a phase field."""
    check_finite("f", f)
    d = grid.dim
    return np.stack([_diff(f, d + k, grid.dv[k], False) for k in range(d)])


def second_diff(
    values: np.ndarray, grid: SpatialGrid, axis: int, closure: WallClosure = WallClosure.ONE_SIDED
) -> np.ndarray:
    """Compact second difference along one position axis of a spatial field.

    On clamped axes `closure` picks the boundary rows. `ONE_SIDED` is exact for
    cubics and meant for diagnostics; `MIRROR` reflects the boundary cell into a
    ghost cell, giving a symmetric negative semidefinite operator that explicit
    diffusion steps can use.
    """
    h2 = grid.spacing[axis] ** 2
    if grid.periodic:
        return (np.roll(values, -1, axis=axis) - 2.0 * values + np.roll(values, 1, axis=axis)) / h2
    def at(index):
        key = [slice(None)] * values.ndim
        key[axis] = index
        return tuple(key)

    out = np.empty_like(values)
    out[at(slice(1, -1))] = (
        values[at(slice(2, None))] - 2.0 * values[at(slice(1, -1))] + values[at(slice(0, -2))]
    ) / h2
    if closure is WallClosure.MIRROR:
        out[at(0)] = (values[at(1)] - values[at(0)]) / h2
        out[at(-1)] = (values[at(-2)] - values[at(-1)]) / h2
        return out
    out[at(0)] = (2.0 * values[at(0)] - 5.0 * values[at(1)] + 4.0 * values[at(2)] - values[at(3)]) / h2
    out[at(-1)] = (2.0 * values[at(-1)] - 5.0 * values[at(-2)] + 4.0 * values[at(-3)] - values[at(-4)]) / h2
    return out


def laplacian(
    values: np.ndarray, grid: SpatialGrid, closure: WallClosure = WallClosure.ONE_SIDED
) -> np.ndarray:
    return sum(second_diff(values, grid, k, closure) for k in range(grid.dim))
