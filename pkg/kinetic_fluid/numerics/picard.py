"""Picard iteration for the coupled system on a short window ``[0, T0]``.

Iterate 0 is the heat flow of ``u0``. Given ``u^n``, iterate ``n+1`` solves
the kinetic equation and the continuity equation transported by ``u^n``, then
a momentum equation that is linear in ``u^{n+1}``: convection by ``u^n``,
pressure from ``rho^{n+1}`` and drag ``m1^{n+1} - n^{n+1} u^{n+1}`` taken
pointwise-implicit. Successive differences are measured with the functional

    F^{n+1}(t) = |sqrt(rho^{n+1}) du|^2_L2 + |drho|^2_L2 + |drho|^2_L3/2
                 + |df Lambda|^2_L6/5 + |df (1 + v^2)^1/2|^2_L1

with ``Lambda(v) = (1 + v^2)^((1 + beta) / 2)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

import numpy as np

from kinetic_fluid.errors import GridError, TimestepError
from kinetic_fluid.numerics.alignment import Kernel, alignment_fields
from kinetic_fluid.numerics.coupling_driver import advance_fixed, cfl_dt, make_state
from kinetic_fluid.numerics.diagnostics import WeightParams, cumulative_trapezoid
from kinetic_fluid.numerics.fluid_solver import FluidParams, FluidState, flux_divergence, pressure_gradient, viscous_term
from kinetic_fluid.numerics.kinetic_solver import kinetic_step
from kinetic_fluid.numerics.phase_space import (
    KineticState,
    PhaseGrid,
    SpatialGrid,
    WallClosure,
    check_finite,
    grad_x,
    laplacian,
)
from kinetic_fluid.schemas.records import PicardRow

if TYPE_CHECKING:
    from kinetic_fluid.schemas.config import SimConfig

logger = logging.getLogger(__name__)

# rows above this ratio are flagged as non-contracting
CONTRACTION_LIMIT = 1.0


@dataclass
class PicardData:
    """Shared initial data and time sampling of every iterate."""

    kinetic: KineticState
    fluid: FluidState
    dt: float
    steps: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


@dataclass
class PicardIterate:
    """Trajectories of one iterate sampled at every step of ``[0, T0]``.

    Iterate 0 only carries ``u``.
    """

    index: int
    times: np.ndarray
    u: np.ndarray
    rho: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None


def heat_seed(u0: np.ndarray, grid: SpatialGrid, t0: float, dt: float, substeps: int = 1) -> np.ndarray:
    """Explicit heat flow ``u_t = Lap u`` from ``u0``, sampled every ``dt`` up to ``t0``.

    Each sample interval is split into ``substeps`` forward-Euler steps, each
    of which must satisfy ``h <= min(dx)^2 / (2 d)``. Clamped axes are insulated
    (mirrored walls).
    """
    h = dt / substeps
    limit = float(np.min(grid.spacing)) ** 2 / (2.0 * grid.dim)
    if h > limit * (1.0 + 1e-12):
        raise TimestepError(f"heat step {h:.3e} exceeds the explicit stability limit {limit:.3e}")
    steps = int(round(t0 / dt))
    u = np.array(u0, dtype=np.float64)
    samples = np.empty((steps + 1,) + u.shape)
    samples[0] = u
    for k in range(steps):
        for _ in range(substeps):
            u = u + h * np.stack([laplacian(u[i], grid, WallClosure.MIRROR) for i in range(grid.dim)])
        samples[k + 1] = u
    return samples


def _momentum_update(
    rho: np.ndarray,
    rho_next: np.ndarray,
    w: np.ndarray,
    u_prev: np.ndarray,
    n_next: np.ndarray,
    m1_next: np.ndarray,
    grid: SpatialGrid,
    params: FluidParams,
    dt: float,
) -> np.ndarray:
    """``u^{n+1}`` at the next step: explicit convection, viscosity and pressure, implicit drag."""
    d = grid.dim
    q = rho * w
    forcing = viscous_term(w, grid, params) - pressure_gradient(rho, grid, params.gamma)
    q_star = np.empty_like(q)
    for i in range(d):
        q_star[i] = q[i] + dt * (forcing[i] - sum(flux_divergence(q[i], u_prev[k], grid, k) for k in range(d)))
    occupied = rho_next > params.eps_vac
    denominator = np.where(occupied, rho_next + dt * n_next, 1.0)
    return np.where(occupied, (q_star + dt * m1_next) / denominator, 0.0)


def picard_iterate(
    prev: PicardIterate,
    data: PicardData,
    params: FluidParams,
    kernel: Kernel,
    use_fft: bool = False,
) -> PicardIterate:
    """Solve the system linearized about ``prev.u``; returns iterate ``prev.index + 1``."""
    grid = data.kinetic.grid
    space = grid.space
    d = space.dim
    dt = data.dt
    steps = data.steps
    if prev.u.shape != (steps + 1, d) + space.shape:
        raise GridError("previous iterate is not sampled on this window")

    f_traj = np.empty((steps + 1,) + grid.shape)
    rho_traj = np.empty((steps + 1,) + space.shape)
    u_traj = np.empty_like(prev.u)
    kin = KineticState(grid, data.kinetic.f.copy(), 0.0)
    rho = data.fluid.rho.copy()
    w = data.fluid.u
    f_traj[0], rho_traj[0], u_traj[0] = kin.f, rho, w

    for k in range(steps):
        u_prev = prev.u[k]
        n, m1, _ = kin.moments()
        fields = alignment_fields(n, m1, space, kernel, kin.time, use_fft)
        kin_next = kinetic_step(kin, u_prev, fields, dt)
        rho_next = rho - dt * sum(flux_divergence(rho, u_prev[axis], space, axis) for axis in range(d))
        if np.any(rho_next < 0.0):
            raise TimestepError(f"continuity update produced negative density at step {k}; reduce dt")
        n_next, m1_next, _ = kin_next.moments()
        w = _momentum_update(rho, rho_next, w, u_prev, n_next, m1_next, space, params, dt)
        check_finite("u", w)
        kin, rho = kin_next, rho_next
        f_traj[k + 1], rho_traj[k + 1], u_traj[k + 1] = kin.f, rho, w

    return PicardIterate(prev.index + 1, data.times, u_traj, rho_traj, f_traj)


def _lp_squared(values: np.ndarray, p: float, volume: float, axes) -> np.ndarray:
    return ((np.abs(values) ** p).sum(axis=axes) * volume) ** (2.0 / p)


def grad_integral(du: np.ndarray, times: np.ndarray, grid: SpatialGrid) -> float:
    """``int_0^T0 |grad du|^2_L2 dt`` for a sampled velocity difference ``(steps+1, d, *cells)``."""
    values = []
    for sample in du:
        total = sum(float((grad_x(sample[i], grid) ** 2).sum()) for i in range(grid.dim))
        values.append(total * grid.cell_volume)
    return float(cumulative_trapezoid(times, values)[-1])


@dataclass
class DiffFunctional:
    times: np.ndarray
    rho_u: np.ndarray
    rho_l2: np.ndarray
    rho_l32: np.ndarray
    f_lambda: np.ndarray
    f_l1: np.ndarray
    u_l2: np.ndarray
    grad_integral: float

    @property
    def F(self) -> np.ndarray:
        return self.rho_u + self.rho_l2 + self.rho_l32 + self.f_lambda + self.f_l1

    @property
    def sup_F(self) -> float:
        return float(self.F.max())


def diff_functional(a: PicardIterate, b: PicardIterate, grid: PhaseGrid, w: WeightParams) -> DiffFunctional:
    """Components of ``F`` between iterates ``a = n+1`` and ``b = n`` at every shared sample."""
    if a.f is None or b.f is None:
        raise ValueError("both iterates need kinetic and density trajectories")
    if a.f.shape != b.f.shape or a.u.shape != b.u.shape or a.f.shape[1:] != grid.shape:
        raise GridError("iterates do not share a grid")
    if not np.array_equal(a.times, b.times):
        raise GridError("iterates do not share time samples")
    space = grid.space
    x_axes = tuple(range(1, space.dim + 1))
    phase_axes = tuple(range(1, 2 * space.dim + 1))
    du = a.u - b.u
    drho = a.rho - b.rho
    df = a.f - b.f
    v2 = grid.speed_squared()
    big_lambda = (1.0 + v2) ** ((1.0 + w.beta) / 2.0)
    du2 = (du * du).sum(axis=1)
    return DiffFunctional(
        times=a.times,
        rho_u=(a.rho * du2).sum(axis=x_axes) * space.cell_volume,
        rho_l2=_lp_squared(drho, 2.0, space.cell_volume, x_axes),
        rho_l32=_lp_squared(drho, 1.5, space.cell_volume, x_axes),
        f_lambda=_lp_squared(df * big_lambda, 1.2, grid.cell_volume, phase_axes),
        f_l1=_lp_squared(df * np.sqrt(1.0 + v2), 1.0, grid.cell_volume, phase_axes),
        u_l2=np.sqrt(du2.sum(axis=x_axes) * space.cell_volume),
        grad_integral=grad_integral(du, a.times, space),
    )


def contraction_row(iteration: int, diff: DiffFunctional, previous_grad: float, mu: float, tol: float) -> PicardRow:
    """``r_n = [sup F^{n+1} + mu G^{n+1}] / [mu G^n]`` with ``G`` the gradient integral."""
    numerator = diff.sup_F + mu * diff.grad_integral
    denominator = mu * previous_grad
    if denominator > 0.0:
        ratio = numerator / denominator
    else:
        ratio = 0.0 if numerator == 0.0 else math.inf
    return PicardRow(
        iteration=iteration,
        sup_rho_u=float(diff.rho_u.max()),
        sup_rho_l2=float(diff.rho_l2.max()),
        sup_rho_l32=float(diff.rho_l32.max()),
        sup_f_lambda=float(diff.f_lambda.max()),
        sup_f_l1=float(diff.f_l1.max()),
        sup_F=diff.sup_F,
        grad_integral=diff.grad_integral,
        previous_grad_integral=previous_grad,
        ratio=ratio,
        sup_u_l2=float(diff.u_l2.max()),
        converged=diff.sup_F < tol,
        contracting=ratio <= CONTRACTION_LIMIT,
    )


@dataclass
class ContractionReport:
    rows: List[PicardRow]
    rate: float
    converged: bool
    limit_discrepancy: Dict[str, float] = field(default_factory=dict)
    dt: float = 0.0
    steps: int = 0

    @property
    def flagged(self) -> List[int]:
        return [row.iteration for row in self.rows if not row.contracting]


def geometric_rate(rows: List[PicardRow]) -> float:
    """``exp`` of the least-squares slope of ``log sup F`` against the iteration index."""
    usable = [(row.iteration, row.sup_F) for row in rows if row.sup_F > 0.0]
    if len(usable) < 2:
        return 0.0
    n, values = zip(*usable)
    slope, _ = np.polyfit(n, np.log(values), 1)
    return float(math.exp(slope))


def contraction_report(rows: List[PicardRow]) -> ContractionReport:
    for row in rows:
        if not row.contracting:
            logger.warning("picard iteration %d is not contracting (ratio %.4g)", row.iteration, row.ratio)
    converged = bool(rows) and rows[-1].converged
    return ContractionReport(rows, geometric_rate(rows), converged)


def l1_discrepancy(a: np.ndarray, b: np.ndarray, volume: float) -> float:
    """``|a - b|_L1 / |b|_L1`` (absolute when ``b = 0``)."""
    diff = float(np.abs(a - b).sum()) * volume
    scale = float(np.abs(b).sum()) * volume
    return diff / scale if scale > 0.0 else diff


def limit_discrepancy(
    iterate: PicardIterate, data: PicardData, params: FluidParams, kernel: Kernel, use_fft: bool = False
) -> Dict[str, float]:
    """Compare the last iterate at ``T0`` with a coupled run of the same step size."""
    start = make_state(data.kinetic, data.fluid, kernel, use_fft)
    final = advance_fixed(start, params, kernel, data.dt, data.steps, use_fft)[-1]
    grid = data.kinetic.grid
    space = grid.space
    rho = iterate.rho[-1]
    n_iter = KineticState(grid, iterate.f[-1]).moments().n
    return {
        "rho": l1_discrepancy(rho, final.fluid.rho, space.cell_volume),
        "q": l1_discrepancy(rho * iterate.u[-1], final.fluid.q, space.cell_volume),
        "n": l1_discrepancy(n_iter, final.kinetic.moments().n, space.cell_volume),
    }


def picard_window(kin: KineticState, fl: FluidState, params: FluidParams, config: "SimConfig", kernel: Kernel) -> PicardData:
    policy = config.cfl_policy()
    dt = min(cfl_dt(make_state(kin, fl, kernel, config.fft), params, policy), config.picard_t0)
    steps = max(1, math.ceil(config.picard_t0 / dt - 1e-9))
    return PicardData(kin, fl, config.picard_t0 / steps, steps)


def run_picard(
    config: "SimConfig",
    data: Optional[PicardData] = None,
    on_row: Optional[Callable[[PicardRow], None]] = None,
    check_limit: bool = True,
) -> ContractionReport:
    """Iterate until ``sup F < picard_tol`` or ``picard_max_iter`` iterations."""
    from kinetic_fluid.io.initial_data import generate_initial

    params = config.fluid_params()
    kernel = config.make_kernel()
    weights = config.weight_params()
    if data is None:
        kin, fl = generate_initial(config)
        data = picard_window(kin, fl, params, config, kernel)
    grid = data.kinetic.grid
    space = grid.space
    substeps = max(1, math.ceil(data.dt / (float(np.min(space.spacing)) ** 2 / (2.0 * space.dim)) - 1e-9))
    seed = heat_seed(data.fluid.u, space, data.steps * data.dt, data.dt, substeps)
    logger.info("picard window T0=%g: %d steps of %.4e, heat seed substeps %d", data.steps * data.dt, data.steps, data.dt, substeps)

    older = PicardIterate(0, data.times, seed)
    previous = picard_iterate(older, data, params, kernel, config.fft)
    previous_grad = grad_integral(previous.u - older.u, data.times, space)
    rows: List[PicardRow] = []
    for _ in range(1, config.picard_max_iter):
        current = picard_iterate(previous, data, params, kernel, config.fft)
        diff = diff_functional(current, previous, grid, weights)
        row = contraction_row(previous.index, diff, previous_grad, params.mu, config.picard_tol)
        rows.append(row)
        logger.info("picard n=%d: sup F=%.4e ratio=%.4g", row.iteration, row.sup_F, row.ratio)
        if on_row is not None:
            on_row(row)
        previous, previous_grad = current, diff.grad_integral
        if row.converged:
            break
    report = contraction_report(rows)
    report.dt, report.steps = data.dt, data.steps
    if check_limit:
        report.limit_discrepancy = limit_discrepancy(previous, data, params, kernel, config.fft)
        logger.info("picard limit vs coupled driver (L1 relative): %s", report.limit_discrepancy)
    return report
