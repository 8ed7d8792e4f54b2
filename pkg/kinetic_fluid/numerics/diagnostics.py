"""Scalar functionals of the coupled state.

Masses, the total energy and its dissipation terms, weighted Sobolev norms,
the velocity-support ceiling, the second-moment bound, the compatibility
residual of the initial data and the blowup-criterion monitor. Time integrals
use the trapezoid rule on whatever cadence the records were taken at.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.integrate

from kinetic_fluid.errors import ConfigError
from kinetic_fluid.numerics.alignment import Kernel, alignment_dissipation, alignment_fields
from kinetic_fluid.numerics.fluid_solver import (
    FluidParams,
    divergence,
    pressure,
    pressure_gradient,
    velocity,
    viscous_term,
)
from kinetic_fluid.numerics.kinetic_solver import support_radius
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, SpatialGrid, grad_v, grad_x, second_diff
from kinetic_fluid.schemas.records import DiagnosticsRecord

if TYPE_CHECKING:
    from kinetic_fluid.numerics.coupling_driver import SimState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightParams:
    """Parameters of ``omega(x, v) = (1 + v^2)^(2 + beta) (1 + |x - x_c|^2 + v^2)^alpha``."""

    alpha: float = 3.5
    beta: float = 1.0
    center: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        problems = []
        if not self.alpha > 3.0:
            problems.append(("alpha", "must satisfy alpha > 3 (weight omega requires alpha > 3, beta > 1/2)"))
        if not self.beta > 0.5:
            problems.append(("beta", "must satisfy beta > 1/2 (weight omega requires alpha > 3, beta > 1/2)"))
        if problems:
            raise ConfigError(problems)


def weight(grid: PhaseGrid, w: WeightParams) -> np.ndarray:
    center = grid.space.center if w.center is None else np.asarray(w.center, dtype=np.float64)
    v2 = grid.speed_squared()
    x2 = sum((grid.x_component(k) - center[k]) ** 2 for k in range(grid.dim))
    return (1.0 + v2) ** (2.0 + w.beta) * (1.0 + x2 + v2) ** w.alpha


def mass_l1(kin: KineticState) -> float:
    return float(kin.f.sum()) * kin.grid.cell_volume


def fluid_mass(rho: np.ndarray, grid: SpatialGrid) -> float:
    return float(rho.sum()) * grid.cell_volume


def kinetic_energy(kin: KineticState) -> float:
    return 0.5 * float(kin.moments().m2.sum()) * kin.grid.space.cell_volume


def fluid_energy(rho: np.ndarray, q: np.ndarray, grid: SpatialGrid, params: FluidParams) -> float:
    u = velocity(rho, q, params.eps_vac)
    density = 0.5 * (q * u).sum(axis=0) + pressure(rho, params.gamma) / (params.gamma - 1.0)
    return float(density.sum()) * grid.cell_volume


def energy(state: "SimState", params: FluidParams) -> float:
    """``E = int (rho |u|^2 / 2 + P / (gamma - 1)) dx + 1/2 int int f |v|^2``."""
    fl = state.fluid
    return fluid_energy(fl.rho, fl.q, fl.grid, params) + kinetic_energy(state.kinetic)


def viscous_dissipation_rate(u: np.ndarray, grid: SpatialGrid, params: FluidParams) -> float:
    """``mu |grad u|^2_L2 + (mu + lambda) |div u|^2_L2``."""
    grad2 = sum(float((grad_x(u[i], grid) ** 2).sum()) for i in range(grid.dim))
    div2 = float((divergence(u, grid) ** 2).sum())
    return (params.mu * grad2 + (params.mu + params.lam) * div2) * grid.cell_volume


def friction_rate(kin: KineticState, u: np.ndarray) -> float:
    """``int int f |u - v|^2 = sum (n |u|^2 - 2 u . m1 + m2) dx``."""
    n, m1, m2 = kin.moments()
    density = n * (u * u).sum(axis=0) - 2.0 * (u * m1).sum(axis=0) + m2
    return float(density.sum()) * kin.grid.space.cell_volume


def velocity_variance(kin: KineticState) -> float:
    n, m1, m2 = kin.moments()
    vol = kin.grid.space.cell_volume
    mass = float(n.sum()) * vol
    if mass <= 0.0:
        return 0.0
    momentum = m1.reshape(kin.grid.dim, -1).sum(axis=1) * vol
    return float(m2.sum()) * vol - float(momentum @ momentum) / mass


def second_moment(kin: KineticState) -> float:
    return float(kin.moments().m2.sum()) * kin.grid.space.cell_volume


def weighted_l2(f: np.ndarray, grid: PhaseGrid, w: WeightParams) -> float:
    return math.sqrt(float((f * f * weight(grid, w)).sum()) * grid.cell_volume)


def weighted_h1(f: np.ndarray, grid: PhaseGrid, w: WeightParams) -> float:
    """``(|f|^2_L2w + |grad_x f|^2_L2w + |grad_v f|^2_L2w)^(1/2)``."""
    omega = weight(grid, w)
    total = float((f * f * omega).sum())
    total += float(((grad_x(f, grid) ** 2).sum(axis=0) * omega).sum())
    total += float(((grad_v(f, grid) ** 2).sum(axis=0) * omega).sum())
    return math.sqrt(total * grid.cell_volume)


def l1_embedding_constant(grid: PhaseGrid, w: WeightParams) -> float:
    """Cauchy-Schwarz constant ``C`` with ``|f|_L1 <= C |f|_L2w`` on this grid."""
    omega = np.broadcast_to(weight(grid, w), grid.shape)
    return math.sqrt(float((1.0 / omega).sum()) * grid.cell_volume)


def grad_u_frobenius(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return np.sqrt(sum((grad_x(u[i], grid) ** 2).sum(axis=0) for i in range(grid.dim)))


def u_d1d2_norm(u: np.ndarray, grid: SpatialGrid) -> float:
    """``|grad u|_L2 + |grad^2 u|_L2``, the homogeneous D1 and D2 parts."""
    vol = grid.cell_volume
    d = grid.dim
    grad_sq = 0.0
    hess_sq = 0.0
    for i in range(d):
        gradient = grad_x(u[i], grid)
        grad_sq += float((gradient**2).sum())
        for j in range(d):
            for k in range(d):
                if j == k:
                    entry = second_diff(u[i], grid, j)
                else:
                    entry = grad_x(gradient[j], grid)[k]
                hess_sq += float((entry**2).sum())
    return math.sqrt(grad_sq * vol) + math.sqrt(hess_sq * vol)


@dataclass
class CompatibilityReport:
    weighted_l2: float
    vacuum_max: float
    vacuum_cells: int


def compatibility_residual(
    kin: KineticState, rho0: np.ndarray, u0: np.ndarray, params: FluidParams
) -> CompatibilityReport:
    """Residual of ``rho0^(1/2) g = mu Lap u0 + (mu+lambda) grad div u0 - grad P(rho0) + int f0 (v - u0)``.

    Reports ``|G / sqrt(rho0)|_L2`` over non-vacuum cells and ``max |G|`` over
    vacuum cells.
    """
    grid = kin.grid.space
    n, m1, _ = kin.moments()
    G = viscous_term(u0, grid, params) - pressure_gradient(rho0, grid, params.gamma) + (m1 - n * u0)
    G2 = (G * G).sum(axis=0)
    occupied = rho0 > params.eps_vac
    weighted = float((G2[occupied] / rho0[occupied]).sum()) * grid.cell_volume
    vacuum = ~occupied
    vacuum_max = float(np.sqrt(G2[vacuum].max())) if vacuum.any() else 0.0
    return CompatibilityReport(math.sqrt(weighted), vacuum_max, int(vacuum.sum()))


def cumulative_trapezoid(t: Sequence[float], values: Sequence[float]) -> np.ndarray:
    """Running trapezoid integral of ``values`` over ``t``, starting at 0."""
    t = np.asarray(t, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if t.size < 2:
        return np.zeros_like(t)
    return scipy.integrate.cumulative_trapezoid(values, t, initial=0.0)


def energy_identity_residual(records: Sequence[DiagnosticsRecord]) -> Tuple[np.ndarray, np.ndarray]:
    """Recompute ``E(t) + int dissipation - E0`` from recorded rates; returns (raw, relative)."""
    t = [r.t for r in records]
    rates = [r.viscous_rate + r.friction_rate + r.alignment_rate for r in records]
    E = np.array([r.energy for r in records])
    residual = E + cumulative_trapezoid(t, rates) - E[0]
    scale = E[0] if E[0] > 0.0 else 1.0
    return residual, residual / scale


@dataclass
class SupportCheck:
    t: float
    radius: float
    ceiling: float
    flagged: bool


def support_bound_report(records: Sequence[DiagnosticsRecord]) -> List[SupportCheck]:
    checks = []
    for r in records:
        flagged = r.support_radius > r.support_bound * (1.0 + 1e-12)
        if flagged:
            logger.warning("support radius %.6g exceeds ceiling %.6g at t=%.6g", r.support_radius, r.support_bound, r.t)
        checks.append(SupportCheck(r.t, r.support_radius, r.support_bound, flagged))
    return checks


def blowup_monitor(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    """``sup_{s<=t} |rho|_inf + int_0^t (|u|_inf + |grad u|_inf^2) ds`` from recorded samples."""
    t = [r.t for r in records]
    running = np.maximum.accumulate([r.rho_linf for r in records])
    integrand = [r.u_linf + r.grad_u_linf**2 for r in records]
    return running + cumulative_trapezoid(t, integrand)


@dataclass
class SecondMomentCheck:
    t: float
    root_second_moment: float
    bound: float
    flagged: bool


def second_moment_report(records: Sequence[DiagnosticsRecord], rtol: float = 1e-2) -> List[SecondMomentCheck]:
    """Compare ``sqrt(M2(t))`` with ``e^-t sqrt(M2(0)) + |f|_L1^(1/2) int_0^t e^-(t-s) |u(s)|_inf ds``."""
    if not records:
        return []
    t = np.array([r.t for r in records])
    root = np.sqrt(np.maximum([r.second_moment for r in records], 0.0))
    u_inf = np.array([r.u_linf for r in records])
    mass = records[0].mass_f
    checks = []
    for i, ti in enumerate(t):
        forcing = cumulative_trapezoid(t[: i + 1], np.exp(-(ti - t[: i + 1])) * u_inf[: i + 1])[-1]
        bound = math.exp(-(ti - t[0])) * root[0] + math.sqrt(mass) * forcing
        flagged = root[i] > bound * (1.0 + rtol) + 1e-14
        checks.append(SecondMomentCheck(float(ti), float(root[i]), float(bound), bool(flagged)))
    return checks


def h1_growth_trend(records: Sequence[DiagnosticsRecord]) -> Tuple[float, float]:
    """Least-squares fit of ``log(|f|_H1w / |f0|_H1w)`` against ``int (1 + R + |u|_inf + |grad u|_inf)``."""
    usable = [r for r in records if r.f_h1w > 0.0]
    if len(usable) < 2:
        return 0.0, 0.0
    t = [r.t for r in usable]
    driver = cumulative_trapezoid(t, [1.0 + r.support_radius + r.u_linf + r.grad_u_linf for r in usable])
    growth = np.log([r.f_h1w / usable[0].f_h1w for r in usable])
    slope, intercept = np.polyfit(driver, growth, 1)
    return float(slope), float(intercept)


def run_summary(records: Sequence[DiagnosticsRecord]) -> Dict[str, object]:
    """Trajectory-level checks: support ceiling, second-moment bound and weighted H1 growth."""
    support = support_bound_report(records)
    moments = second_moment_report(records)
    slope, intercept = h1_growth_trend(records)
    final = records[-1] if records else None
    return {
        "records": len(records),
        "t_final": final.t if final else 0.0,
        "energy_residual_rel": final.energy_residual_rel if final else 0.0,
        "blowup_monitor": final.blowup_monitor_cum if final else 0.0,
        "support_violations": [c.t for c in support if c.flagged],
        "second_moment_violations": [c.t for c in moments if c.flagged],
        "second_moment_final": {
            "root_second_moment": moments[-1].root_second_moment if moments else 0.0,
            "bound": moments[-1].bound if moments else 0.0,
        },
        "h1_growth": {"slope": slope, "intercept": intercept},
    }


@dataclass
class DiagnosticsTracker:
    """Builds one `DiagnosticsRecord` per recorded state and carries the running integrals."""

    params: FluidParams
    kernel: Kernel
    weights: WeightParams
    use_fft: bool = False
    records: List[DiagnosticsRecord] = field(default_factory=list)
    _r0: float = 0.0
    _drive_max: float = 0.0
    _rho_max: float = 0.0

    def record(self, state: "SimState", dt: float = 0.0) -> DiagnosticsRecord:
        kin = state.kinetic
        fl = state.fluid
        grid = fl.grid
        u = fl.u
        n, m1, m2 = kin.moments()
        fields = state.fields
        if fields is None or fields.time != kin.time:
            fields = alignment_fields(n, m1, grid, self.kernel, kin.time, self.use_fft)

        radius = support_radius(kin)
        u_inf = float(np.sqrt((u * u).sum(axis=0)).max())
        b_inf = float(np.sqrt((fields.b * fields.b).sum(axis=0)).max())
        grad_u_inf = float(grad_u_frobenius(u, grid).max())
        rho_inf = float(fl.rho.max())
        rates = (
            viscous_dissipation_rate(u, grid, self.params),
            friction_rate(kin, u),
            alignment_dissipation(n, m1, m2, grid, self.kernel, self.use_fft),
        )
        if not self.records:
            self._r0 = radius
            self._drive_max = b_inf + u_inf
            self._rho_max = rho_inf
        self._drive_max = max(self._drive_max, b_inf + u_inf)
        self._rho_max = max(self._rho_max, rho_inf)
        ceiling = max(self._r0, self._drive_max) + 2.0 * float(np.max(kin.grid.dv))

        E = energy(state, self.params)
        if self.records:
            prev = self.records[-1]
            span = state.time - prev.t
            viscous_cum = prev.viscous_dissipation_cum + 0.5 * span * (prev.viscous_rate + rates[0])
            friction_cum = prev.friction_cum + 0.5 * span * (prev.friction_rate + rates[1])
            alignment_cum = prev.alignment_cum + 0.5 * span * (prev.alignment_rate + rates[2])
            monitor_integral = (prev.blowup_monitor_cum - prev.monitor_rho_sup) + 0.5 * span * (
                prev.u_linf + prev.grad_u_linf**2 + u_inf + grad_u_inf**2
            )
            E0 = self.records[0].energy
        else:
            viscous_cum = friction_cum = alignment_cum = monitor_integral = 0.0
            E0 = E
        residual = E + viscous_cum + friction_cum + alignment_cum - E0

        record = DiagnosticsRecord(
            t=state.time,
            mass_f=mass_l1(kin),
            mass_rho=fluid_mass(fl.rho, grid),
            energy=E,
            viscous_dissipation_cum=viscous_cum,
            friction_cum=friction_cum,
            alignment_cum=alignment_cum,
            energy_residual=residual,
            support_radius=radius,
            support_bound=ceiling,
            f_l2w=weighted_l2(kin.f, kin.grid, self.weights),
            f_h1w=weighted_h1(kin.f, kin.grid, self.weights),
            rho_linf=rho_inf,
            u_linf=u_inf,
            grad_u_linf=grad_u_inf,
            blowup_monitor_cum=self._rho_max + monitor_integral,
            step=state.step,
            dt=dt,
            energy_residual_rel=residual / E0 if E0 > 0.0 else residual,
            viscous_rate=rates[0],
            friction_rate=rates[1],
            alignment_rate=rates[2],
            b_linf=b_inf,
            monitor_rho_sup=self._rho_max,
            velocity_variance=velocity_variance(kin),
            second_moment=second_moment(kin),
            u_d1d2=u_d1d2_norm(u, grid),
        )
        if radius > ceiling:
            logger.warning("support radius %.6g exceeds ceiling %.6g at t=%.6g", radius, ceiling, state.time)
        self.records.append(record)
        return record
