"""The coupled time loop.

Each step is a Lie splitting: transport ``f`` with the pre-step fluid
velocity, evaluate the drag from the post-kinetic moments and the pre-step
velocity, advance the fluid, then rebuild the alignment fields so they match
the new kinetic state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

import numpy as np

from kinetic_fluid.errors import CflViolation, KineticFluidError, TimestepError
from kinetic_fluid.numerics.alignment import AlignmentFields, Kernel, alignment_fields
from kinetic_fluid.numerics.diagnostics import DiagnosticsTracker, mass_l1
from kinetic_fluid.numerics.fluid_solver import FluidParams, FluidState, drag_source, fluid_step
from kinetic_fluid.numerics.kinetic_solver import kinetic_step, support_radius
from kinetic_fluid.numerics.phase_space import KineticState
from kinetic_fluid.schemas.records import DiagnosticsRecord, FailureReport

if TYPE_CHECKING:
    from kinetic_fluid.schemas.config import SimConfig

logger = logging.getLogger(__name__)

MIN_DT = 1e-12
MAX_RETRIES = 4


@dataclass
class SimState:
    time: float
    kinetic: KineticState
    fluid: FluidState
    fields: AlignmentFields
    step: int = 0


@dataclass(frozen=True)
class CflPolicy:
    safety: float = 0.4
    max_dt: float = 1e-2

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise ValueError("CFL safety factor must lie in (0, 1]")
        if not self.max_dt > 0.0:
            raise ValueError("max_dt must be positive")


def make_state(kin: KineticState, fl: FluidState, kernel: Kernel, use_fft: bool = False, step: int = 0) -> SimState:
    """Assemble a `SimState` with alignment fields built from ``kin``."""
    n, m1, _ = kin.moments()
    fields = alignment_fields(n, m1, kin.grid.space, kernel, kin.time, use_fft)
    return SimState(kin.time, kin, fl, fields, step)


def fluid_cfl_terms(fl: FluidState, params: FluidParams) -> Dict[str, float]:
    """Acoustic and viscous candidate steps, before the safety factor."""
    grid = fl.grid
    dx = float(np.min(grid.spacing))
    rho = fl.rho
    u = fl.u
    u_max = float(np.sqrt((u * u).sum(axis=0)).max())
    rho_max = float(rho.max())
    c_s = math.sqrt(params.gamma * rho_max ** (params.gamma - 1.0)) if rho_max > 0.0 else 0.0
    terms = {"acoustic": dx / (u_max + c_s) if u_max + c_s > 0.0 else math.inf}
    occupied = rho > params.eps_vac
    stiffness = 2.0 * params.mu + params.lam
    if occupied.any() and stiffness > 0.0:
        terms["viscous"] = dx * dx * float(rho[occupied].min()) / (2.0 * grid.dim * stiffness)
    else:
        terms["viscous"] = math.inf
    return terms


def kinetic_cfl_terms(kin: KineticState, fields: AlignmentFields) -> Dict[str, float]:
    """Transport, characteristic-exponent and drag candidate steps; empty when ``f = 0``."""
    if mass_l1(kin) <= 0.0:
        return {}
    dx = float(np.min(kin.grid.space.spacing))
    radius = support_radius(kin)
    n_max = float(kin.moments().n.max())
    return {
        "transport": dx / radius if radius > 0.0 else math.inf,
        "exponent": 0.5 / float((1.0 + fields.a).max()),
        "drag": 0.5 / n_max if n_max > 0.0 else math.inf,
    }


def cfl_terms(s: SimState, params: FluidParams, policy: Optional[CflPolicy] = None) -> Dict[str, float]:
    """Candidate step sizes before the safety factor; kinetic terms are omitted when ``f = 0``."""
    terms = fluid_cfl_terms(s.fluid, params)
    terms.update(kinetic_cfl_terms(s.kinetic, s.fields))
    return terms


def dt_from_terms(terms: Dict[str, float], policy: CflPolicy) -> float:
    """``min(safety * min(terms), max_dt)``; raises `TimestepError` below `MIN_DT`."""
    dt = min(policy.safety * min(terms.values(), default=math.inf), policy.max_dt)
    if not dt >= MIN_DT:
        raise TimestepError(f"time step {dt:.3e} underflows {MIN_DT:g}", terms)
    logger.debug("dt=%.6e terms=%s", dt, terms)
    return dt


def cfl_dt(s: SimState, params: FluidParams, policy: CflPolicy) -> float:
    return dt_from_terms(cfl_terms(s, params, policy), policy)


def step_coupled(
    s: SimState,
    params: FluidParams,
    policy: CflPolicy,
    kernel: Kernel,
    dt: Optional[float] = None,
    use_fft: bool = False,
) -> SimState:
    """Advance the coupled system by one Lie-split step."""
    s.fields.ensure_fresh(s.kinetic.time)
    if dt is None:
        dt = cfl_dt(s, params, policy)
    u_pre = s.fluid.u
    kin = kinetic_step(s.kinetic, u_pre, s.fields, dt)
    drag = drag_source(kin, u_pre)
    fl = fluid_step(s.fluid, drag, params, dt)
    t = s.time + dt
    kin = replace(kin, time=t)
    fl.time = t
    n, m1, _ = kin.moments()
    fields = alignment_fields(n, m1, kin.grid.space, kernel, t, use_fft)
    return SimState(t, kin, fl, fields, s.step + 1)


def advance_fixed(
    s: SimState,
    params: FluidParams,
    kernel: Kernel,
    dt: float,
    steps: int,
    use_fft: bool = False,
) -> List[SimState]:
    """Take ``steps`` coupled steps of size ``dt``; returns every state including ``s``."""
    policy = CflPolicy()
    states = [s]
    for _ in range(steps):
        states.append(step_coupled(states[-1], params, policy, kernel, dt=dt, use_fft=use_fft))
    return states


@dataclass
class Trajectory:
    records: List[DiagnosticsRecord]
    final: SimState
    failure: Optional[FailureReport] = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def _step_with_retry(s, params, policy, kernel, dt, use_fft, retries: int = MAX_RETRIES):
    """Take one step, shrinking ``dt`` to the suggested value on `CflViolation`."""
    while True:
        try:
            return step_coupled(s, params, policy, kernel, dt=dt, use_fft=use_fft), dt
        except CflViolation as exc:
            if retries == 0 or exc.suggested_dt < MIN_DT:
                raise
            logger.warning("step %d rejected at dt=%.3e, retrying with %.3e", s.step, dt, exc.suggested_dt)
            dt = exc.suggested_dt
            retries -= 1


def _failure(state: SimState, tracker: DiagnosticsTracker, cause: str, error_type: str, threshold, terms=None):
    if not tracker.records or tracker.records[-1].step != state.step:
        tracker.record(state)
    monitor = tracker.records[-1].blowup_monitor_cum
    report = FailureReport(
        step=state.step,
        time=state.time,
        cause=cause,
        error_type=error_type,
        blowup_monitor=monitor,
        monitor_threshold=threshold,
        cfl_terms={k: v for k, v in (terms or {}).items() if math.isfinite(v)},
    )
    logger.error("run stopped at step %d (t=%.6g): %s; blowup monitor %.6g", state.step, state.time, cause, monitor)
    return report


def run(
    config: "SimConfig",
    initial: Optional[SimState] = None,
    on_record: Optional[Callable[[SimState, DiagnosticsRecord], None]] = None,
) -> Trajectory:
    """Integrate the coupled system to ``config.t_end``.

    Records diagnostics every ``config.diagnostics_every`` steps and at the
    final time. Sub-step errors and a tripped monitor threshold end the run
    with a `FailureReport` instead of raising.
    """
    from kinetic_fluid.io.initial_data import generate_initial

    params = config.fluid_params()
    kernel = config.make_kernel()
    policy = config.cfl_policy()
    if initial is None:
        kin, fl = generate_initial(config)
        state = make_state(kin, fl, kernel, config.fft)
    else:
        state = initial
    tracker = DiagnosticsTracker(params, kernel, config.weight_params(), config.fft)
    record = tracker.record(state)
    if on_record is not None:
        on_record(state, record)
    logger.info("run start: t=%.6g, t_end=%.6g, E0=%.6e", state.time, config.t_end, record.energy)

    failure = None
    threshold = config.monitor_abort
    t_end = config.t_end
    while state.time < t_end - 1e-12 * max(1.0, t_end):
        try:
            dt = min(cfl_dt(state, params, policy), t_end - state.time)
            state, dt = _step_with_retry(state, params, policy, kernel, dt, config.fft)
        except KineticFluidError as exc:
            failure = _failure(state, tracker, str(exc), type(exc).__name__, threshold, getattr(exc, "terms", None))
            break
        if state.step % config.diagnostics_every == 0 or state.time >= t_end - 1e-12 * max(1.0, t_end):
            record = tracker.record(state, dt)
            if on_record is not None:
                on_record(state, record)
            if threshold is not None and record.blowup_monitor_cum > threshold:
                failure = _failure(
                    state, tracker, f"blowup monitor {record.blowup_monitor_cum:.6g} exceeded {threshold:g}",
                    "MonitorThreshold", threshold,
                )
                break
    if failure is None:
        logger.info("run finished: %d steps, t=%.6g", state.step, state.time)
    return Trajectory(tracker.records, state, failure)
