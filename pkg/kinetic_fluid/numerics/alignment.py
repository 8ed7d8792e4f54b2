"""Interaction kernel, nonlocal alignment fields and the alignment dissipation.

The alignment operator ``L[f](x, v) = int int phi(|x - y|) f(y, w) (w - v) dy dw``
is affine in ``v``: ``L[f] = b(x) - a(x) v`` with ``a = phi * n`` and
``b = phi * m1``. Every quantity here is therefore built from velocity
moments and spatial convolutions only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.fft

from kinetic_fluid.errors import GridError, NegativeDensityError, StaleFieldsError
from kinetic_fluid.numerics.phase_space import SpatialGrid, check_finite

logger = logging.getLogger(__name__)


class KernelKind(str, Enum):
    SMOOTH = "smooth"
    TABLE = "table"
    CONSTANT = "constant"


@dataclass(frozen=True)
class Kernel:
    """Communication weight ``phi(r)``.

    ``smooth`` is ``(1 + r^2)^(-1/2)``; ``constant`` is ``phi = 1``; ``table``
    interpolates ``(r_i, phi_i)`` nodes linearly and is constant past the last
    node.
    """

    kind: KernelKind = KernelKind.SMOOTH
    table_r: Tuple[float, ...] = ()
    table_phi: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        object.__setattr__(self, "table_r", tuple(float(r) for r in self.table_r))
        object.__setattr__(self, "table_phi", tuple(float(p) for p in self.table_phi))
        if self.kind is KernelKind.TABLE:
            r = np.asarray(self.table_r)
            if r.size < 2 or r.size != len(self.table_phi):
                raise ValueError("table kernel needs at least two (r, phi) nodes")
            if r[0] != 0.0 or np.any(np.diff(r) <= 0.0):
                raise ValueError("table kernel nodes must start at r=0 and increase strictly")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if self.kind is KernelKind.CONSTANT:
            return np.ones_like(r)
        if self.kind is KernelKind.TABLE:
            return np.interp(r, self.table_r, self.table_phi)
        return 1.0 / np.sqrt(1.0 + r * r)

    def derivative(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if self.kind is KernelKind.CONSTANT:
            return np.zeros_like(r)
        if self.kind is KernelKind.TABLE:
            nodes = np.asarray(self.table_r)
            slopes = np.diff(self.table_phi) / np.diff(nodes)
            segment = np.searchsorted(nodes, r, side="right") - 1
            inside = segment < slopes.size
            return np.where(inside, slopes[np.clip(segment, 0, slopes.size - 1)], 0.0)
        return -r * (1.0 + r * r) ** -1.5

    def check_normalization(self, r_max: float = 1e3, samples: int = 4096) -> None:
        """Raise ``ValueError`` unless phi > 0, phi is nonincreasing and max{|phi|, |phi'|} <= 1."""
        r = np.concatenate(([0.0], np.logspace(-6, np.log10(r_max), samples)))
        if self.kind is KernelKind.TABLE:
            r = np.union1d(r, self.table_r)
        phi = self(r)
        if np.any(phi <= 0.0):
            raise ValueError("kernel must be positive")
        if np.any(np.diff(phi) > 0.0):
            raise ValueError("kernel must be nonincreasing")
        if np.max(np.abs(phi)) > 1.0 or np.max(np.abs(self.derivative(r))) > 1.0:
            raise ValueError("kernel must satisfy max{|phi|, |phi'|} <= 1")


def eval_kernel(kernel: Kernel, r: float) -> float:
    if r < 0:
        raise ValueError(f"kernel argument must be nonnegative, got {r}")
    return float(kernel(r))


@lru_cache(maxsize=8)
def kernel_matrix(grid: SpatialGrid, kernel: Kernel) -> np.ndarray:
    """``phi(dist(x_i, x_j))`` over all cell pairs, minimum image on periodic grids."""
    points = grid.points()
    dist2 = np.zeros((points.shape[0], points.shape[0]))
    for k in range(grid.dim):
        delta = points[:, None, k] - points[None, :, k]
        if grid.periodic:
            delta -= grid.length[k] * np.round(delta / grid.length[k])
        dist2 += delta * delta
    matrix = kernel(np.sqrt(dist2))
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=8)
def _kernel_spectrum(grid: SpatialGrid, kernel: Kernel) -> np.ndarray:
    offsets = np.stack(
        np.meshgrid(*[np.arange(n) * h for n, h in zip(grid.cells, grid.spacing)], indexing="ij")
    )
    length = grid.length.reshape((-1,) + (1,) * grid.dim)
    offsets = offsets - length * np.round(offsets / length)
    return scipy.fft.rfftn(kernel(np.sqrt((offsets**2).sum(axis=0))))


def convolve(values: np.ndarray, grid: SpatialGrid, kernel: Kernel, use_fft: bool = False) -> np.ndarray:
    """Quadrature ``(phi * g)(x_i) = sum_j phi(|x_i - x_j|) g(x_j) dx``.

    ``values`` has shape ``(..., *cells)``. The FFT path is only available on
    periodic grids, where the minimum-image kernel matrix is circulant.
    """
    lead = values.shape[: values.ndim - grid.dim]
    if use_fft:
        if not grid.periodic:
            raise GridError("FFT convolution requires a periodic grid")
        spectrum = _kernel_spectrum(grid, kernel)
        axes = tuple(range(len(lead), values.ndim))
        out = scipy.fft.irfftn(scipy.fft.rfftn(values, axes=axes) * spectrum, s=grid.cells, axes=axes)
        return out * grid.cell_volume
    flat = values.reshape(lead + (-1,))
    # einsum keeps the reduction single-threaded and in a fixed order
    out = np.einsum("ij,...j->...i", kernel_matrix(grid, kernel), flat)
    return out.reshape(values.shape) * grid.cell_volume


@dataclass
class AlignmentFields:
    a: np.ndarray
    b: np.ndarray
    time: float

    def ensure_fresh(self, time: float) -> None:
        if self.time != time:
            raise StaleFieldsError(f"alignment fields built at t={self.time!r}, state is at t={time!r}")


def alignment_fields(
    n: np.ndarray,
    m1: np.ndarray,
    grid: SpatialGrid,
    kernel: Kernel,
    time: float = 0.0,
    use_fft: bool = False,
) -> AlignmentFields:
    check_finite("n", n)
    check_finite("m1", m1)
    if np.any(n < 0.0):
        index = np.unravel_index(int(np.argmin(n)), n.shape)
        raise NegativeDensityError(f"negative kinetic density at cell {index}")
    stacked = np.concatenate([n[None], m1])
    conv = convolve(stacked, grid, kernel, use_fft)
    return AlignmentFields(a=conv[0], b=conv[1:], time=time)


def eval_L(fields: AlignmentFields, cell: Tuple[int, ...], v, time: float) -> np.ndarray:
    """``L[f](x_cell, v) = b(x_cell) - a(x_cell) v`` for fields built at ``time``."""
    fields.ensure_fresh(time)
    cell = tuple(cell)
    v = np.asarray(v, dtype=np.float64)
    b = fields.b[(slice(None),) + cell]
    return b - fields.a[cell] * v


def alignment_dissipation(
    n: np.ndarray,
    m1: np.ndarray,
    m2: np.ndarray,
    grid: SpatialGrid,
    kernel: Kernel,
    use_fft: bool = False,
) -> float:
    """``1/2 int int int int phi(|x-y|) f(y,w) f(x,v) |w - v|^2`` from moments.

    Expanding ``|w - v|^2`` reduces the four-fold integral to
    ``1/2 sum_x [n (phi*m2) + m2 (phi*n) - 2 m1 . (phi*m1)] dx``. The form is
    positive semidefinite; round-off negatives are returned as zero.
    """
    conv = convolve(np.concatenate([n[None], m1, m2[None]]), grid, kernel, use_fft)
    phi_n, phi_m1, phi_m2 = conv[0], conv[1:-1], conv[-1]
    total = n * phi_m2 + m2 * phi_n - 2.0 * (m1 * phi_m1).sum(axis=0)
    value = 0.5 * float(total.sum()) * grid.cell_volume
    scale = float(n.sum() * grid.cell_volume) * float(m2.sum() * grid.cell_volume)
    if value < 0.0:
        if value < -1e-10 * max(scale, np.finfo(float).tiny):
            logger.warning("alignment dissipation %.3e is negative beyond round-off", value)
        return 0.0
    return value
