"""Invariant suite behind ``kinetic-fluid verify``.

Every check runs on a small grid derived from the given configuration (same
physics, reduced resolution and a short horizon) and compares the solver
against an independent oracle or a structural property.
"""

import logging
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.integrate

from kinetic_fluid.io.config_io import parse_config, render_config
from kinetic_fluid.io.initial_data import generate_initial
from kinetic_fluid.io.output import dump_snapshot, load_snapshot
from kinetic_fluid.numerics.alignment import alignment_dissipation, alignment_fields, eval_L
from kinetic_fluid.numerics.coupling_driver import (
    SimState,
    dt_from_terms,
    fluid_cfl_terms,
    kinetic_cfl_terms,
    make_state,
    run,
    step_coupled,
)
from kinetic_fluid.numerics.diagnostics import (
    energy_identity_residual,
    l1_embedding_constant,
    mass_l1,
    support_bound_report,
    weighted_h1,
    weighted_l2,
)
from kinetic_fluid.numerics.fluid_solver import drag_source, fluid_step
from kinetic_fluid.numerics.kinetic_solver import kinetic_step, trace_back
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, SpatialGrid
from kinetic_fluid.schemas.config import FluidInit, KineticInit, SimConfig

logger = logging.getLogger(__name__)

SHORT_STEPS = 8


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    value: float = 0.0


@dataclass
class VerifyReport:
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]


def reduced_config(config: SimConfig, **overrides) -> SimConfig:
    """``config`` at desk resolution with a short horizon, plus ``overrides``."""
    cells = 16 if config.dim == 1 else 8
    values = config.model_dump(by_alias=True)
    values.update(
        x_cells=(cells,),
        v_cells=(cells,),
        t_end=min(config.t_end, SHORT_STEPS * config.max_dt),
        diagnostics_every=1,
        monitor_abort=None,
        fft=False,
    )
    values.update(overrides)
    return SimConfig.build(values)


def _tiny_grid(config: SimConfig) -> PhaseGrid:
    space = SpatialGrid((0.0,), (1.0,), (6,), config.boundary)
    return PhaseGrid(space, (2.0,), (6,))


def _min_image(delta: float, length: float, periodic: bool) -> float:
    return delta - length * round(delta / length) if periodic else delta


def check_alignment_operator(config: SimConfig, rng: np.random.Generator) -> CheckResult:
    grid = _tiny_grid(config)
    space = grid.space
    kernel = config.make_kernel()
    f = rng.random(grid.shape)
    kin = KineticState(grid, f)
    n, m1, _ = kin.moments()
    fields = alignment_fields(n, m1, space, kernel)
    xs = space.axis_centers(0)
    vs = grid.v_axis_centers(0)
    worst = 0.0
    for i in range(space.cells[0]):
        for v in rng.uniform(-2.0, 2.0, size=3):
            total = 0.0
            for j in range(space.cells[0]):
                r = abs(_min_image(xs[i] - xs[j], space.length[0], space.periodic))
                for k in range(grid.v_cells[0]):
                    total += float(kernel(r)) * f[j, k] * (vs[k] - v)
            oracle = total * grid.cell_volume
            value = float(eval_L(fields, (i,), v, 0.0)[0])
            worst = max(worst, abs(value - oracle) / max(abs(oracle), 1.0))
    return CheckResult("alignment_operator", worst <= 1e-10, f"max relative error {worst:.3e}", worst)


def check_alignment_dissipation(config: SimConfig, rng: np.random.Generator) -> CheckResult:
    grid = _tiny_grid(config)
    space = grid.space
    kernel = config.make_kernel()
    f = rng.random(grid.shape)
    n, m1, m2 = KineticState(grid, f).moments()
    value = alignment_dissipation(n, m1, m2, space, kernel)
    xs = space.axis_centers(0)
    vs = grid.v_axis_centers(0)
    terms = []
    for i in range(space.cells[0]):
        for j in range(space.cells[0]):
            phi = float(kernel(abs(_min_image(xs[i] - xs[j], space.length[0], space.periodic))))
            for a in range(grid.v_cells[0]):
                for b in range(grid.v_cells[0]):
                    terms.append(phi * f[j, b] * f[i, a] * (vs[b] - vs[a]) ** 2)
    oracle = 0.5 * math.fsum(terms) * grid.cell_volume**2
    error = abs(value - oracle) / max(abs(oracle), 1e-300)
    return CheckResult("alignment_dissipation", error <= 1e-10, f"relative error {error:.3e}", error)


def check_drag_source(config: SimConfig, rng: np.random.Generator) -> CheckResult:
    grid = _tiny_grid(config)
    f = rng.random(grid.shape)
    u = rng.uniform(-1.0, 1.0, size=(1,) + grid.space.shape)
    value = drag_source(KineticState(grid, f), u)
    vs = grid.v_axis_centers(0)
    worst = 0.0
    for i in range(grid.space.cells[0]):
        oracle = math.fsum(f[i, k] * (vs[k] - u[0, i]) for k in range(grid.v_cells[0])) * grid.v_cell_volume
        scale = math.fsum(f[i, k] * (abs(vs[k]) + abs(u[0, i])) for k in range(grid.v_cells[0])) * grid.v_cell_volume
        worst = max(worst, abs(value[0, i] - oracle) / scale)
    return CheckResult("drag_source", worst <= 1e-13, f"max relative error {worst:.3e}", worst)


def reference_backtrace(x, v, a, g, dt) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate ``X' = V``, ``V' = g - (1 + a) V`` from ``dt`` back to 0 with DOP853.

    Time is rescaled per draw to ``s = (dt - t) / dt`` so every draw shares ``s in [0, 1]``.
    """
    lam = 1.0 + np.asarray(a, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    dt = np.asarray(dt, dtype=np.float64)
    n = lam.size

    def rhs(_, y):
        V = y[n:]
        return np.concatenate((-dt * V, -dt * (g - lam * V)))

    y0 = np.concatenate((np.asarray(x, dtype=np.float64), np.asarray(v, dtype=np.float64)))
    sol = scipy.integrate.solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=1e-13, atol=1e-14)
    return sol.y[:n, -1], sol.y[n:, -1]


def check_characteristics(config: SimConfig, rng: np.random.Generator, draws: int = 10_000) -> CheckResult:
    x = rng.uniform(-1.0, 1.0, draws)
    v = rng.uniform(-2.0, 2.0, draws)
    a = rng.uniform(0.0, 1.0, draws)
    b = rng.uniform(-1.0, 1.0, draws)
    u = rng.uniform(-1.0, 1.0, draws)
    dt = rng.uniform(0.0, 0.05, draws)
    traced = trace_back(x[None], v[None], a, b[None], u[None], dt, dim=1)
    X, V = reference_backtrace(x, v, a, b + u, dt)
    scale = np.maximum(np.maximum(np.abs(X), np.abs(V)), 1.0)
    error = float(np.max(np.maximum(np.abs(traced.x_b[0] - X), np.abs(traced.v_b[0] - V)) / scale))
    return CheckResult("characteristics", error <= 1e-10, f"max relative error vs DOP853 {error:.3e}", error)


def check_decoupled_fluid(config: SimConfig) -> CheckResult:
    """``f0 = 0``: the coupled fluid equals a standalone fluid run bitwise."""
    small = reduced_config(config, kinetic_init=KineticInit.ZERO)
    params, kernel, policy = small.fluid_params(), small.make_kernel(), small.cfl_policy()
    kin, fl = generate_initial(small)
    state = make_state(kin, fl, kernel)
    alone = fl
    zero = np.zeros_like(fl.q)
    for _ in range(SHORT_STEPS):
        state = step_coupled(state, params, policy, kernel)
        dt = dt_from_terms(fluid_cfl_terms(alone, params), policy)
        alone = fluid_step(alone, zero, params, dt)
    same = np.array_equal(state.fluid.rho, alone.rho) and np.array_equal(state.fluid.q, alone.q)
    return CheckResult("decoupled_fluid", same, "bitwise equal" if same else "fluid trajectories differ")


def check_one_way_kinetic(config: SimConfig) -> CheckResult:
    """``rho0 = 0``: the coupled kinetic part equals a pure kinetic run with ``u = 0`` bitwise."""
    small = reduced_config(config, fluid_init=FluidInit.VACUUM, fluid_vacuum_inner=None, fluid_vacuum_outer=None)
    params, kernel, policy = small.fluid_params(), small.make_kernel(), small.cfl_policy()
    kin, fl = generate_initial(small)
    state = make_state(kin, fl, kernel)
    alone = kin
    fields = state.fields
    zero = np.zeros((kin.grid.dim,) + kin.grid.space.shape)
    for _ in range(SHORT_STEPS):
        state = step_coupled(state, params, policy, kernel)
        dt = dt_from_terms(kinetic_cfl_terms(alone, fields), policy)
        alone = kinetic_step(alone, zero, fields, dt)
        n, m1, _ = alone.moments()
        fields = alignment_fields(n, m1, alone.grid.space, kernel, alone.time)
    same = np.array_equal(state.kinetic.f, alone.f)
    return CheckResult("one_way_kinetic", same, "bitwise equal" if same else "kinetic trajectories differ")


def check_short_run(config: SimConfig) -> List[CheckResult]:
    small = reduced_config(config)
    states: List[SimState] = []
    trajectory = run(small, on_record=lambda state, record: states.append(state))
    results = [CheckResult("short_run", trajectory.ok, trajectory.failure.cause if trajectory.failure else "completed")]
    if not trajectory.ok:
        return results
    records = trajectory.records
    if small.boundary.value == "periodic" and records[0].mass_rho > 0.0:
        drift = abs(records[-1].mass_rho - records[0].mass_rho) / records[0].mass_rho
        results.append(CheckResult("fluid_mass", drift <= 1e-10, f"relative drift {drift:.3e}", drift))
    flags = sum(check.flagged for check in support_bound_report(records))
    results.append(CheckResult("support_ceiling", flags == 0, f"{flags} violations", float(flags)))
    residual, _ = energy_identity_residual(records)
    excess = max(r.energy - records[0].energy - abs(res) for r, res in zip(records, residual))
    results.append(CheckResult("energy_bound", excess <= 1e-12, f"max excess {excess:.3e}", excess))
    negative = min(min(float(s.kinetic.f.min()), float(s.fluid.rho.min())) for s in states)
    results.append(CheckResult("positivity", negative >= 0.0, f"min value {negative:.3e}", negative))
    final = trajectory.final
    grid = final.kinetic.grid
    weights = small.weight_params()
    l2w = weighted_l2(final.kinetic.f, grid, weights)
    bound = l1_embedding_constant(grid, weights) * l2w
    mass = mass_l1(final.kinetic)
    results.append(CheckResult("l1_embedding", mass <= bound * (1.0 + 1e-12), f"|f|_L1={mass:.6g} <= {bound:.6g}"))
    h1w = weighted_h1(final.kinetic.f, grid, weights)
    results.append(CheckResult("norm_ordering", l2w <= h1w, f"L2w={l2w:.6g} <= H1w={h1w:.6g}"))
    again = run(small)
    same = again.records == records
    results.append(CheckResult("determinism", same, "identical records" if same else "records differ"))
    with tempfile.TemporaryDirectory() as tmp:
        path = dump_snapshot(final, Path(tmp) / "final.bin")
        loaded = load_snapshot(path)
    exact = (
        np.array_equal(loaded.kinetic.f, final.kinetic.f)
        and np.array_equal(loaded.fluid.q, final.fluid.q)
        and loaded.time == final.time
    )
    results.append(CheckResult("snapshot_roundtrip", exact, "bitwise equal" if exact else "snapshot differs"))
    return results


def check_config_roundtrip(config: SimConfig) -> CheckResult:
    same = parse_config(render_config(config)) == config
    return CheckResult("config_roundtrip", same, "parse(render(c)) == c" if same else "round trip changed the config")


def run_verify(config: SimConfig, seed: Optional[int] = None) -> VerifyReport:
    """Run every check; failures are reported, not raised."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    report = VerifyReport()
    checks: List[Callable[[], object]] = [
        lambda: check_config_roundtrip(config),
        lambda: check_alignment_operator(config, rng),
        lambda: check_alignment_dissipation(config, rng),
        lambda: check_drag_source(config, rng),
        lambda: check_characteristics(config, rng),
        lambda: check_decoupled_fluid(config),
        lambda: check_one_way_kinetic(config),
        lambda: check_short_run(config),
    ]
    for check in checks:
        outcome = check()
        for result in outcome if isinstance(outcome, list) else [outcome]:
            level = logging.INFO if result.passed else logging.WARNING
            logger.log(level, "%-22s %s  %s", result.name, "ok" if result.passed else "FAILED", result.detail)
            report.results.append(result)
    return report
