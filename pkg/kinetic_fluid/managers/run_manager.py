"""High-level run store API (register configurations, open, finish and compare runs)."""

import hashlib
from typing import Optional, Dict, Any, List
from datetime import datetime
from sqlalchemy import select
from sqlalchemy.orm import Session

from kinetic_fluid.models import Simulation, SimulationRun, DiagnosticsRow
from kinetic_fluid.schemas.records import DiagnosticsRecord, FailureReport


def config_hash(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()


class RunManager:
    """Manager for simulations (configurations) and their runs."""

    def __init__(self, session: Session):
        self.session = session

    def get_or_create_simulation(
        self,
        name: str,
        config_text: str,
        dim: int,
        description: Optional[str] = None,
    ) -> Simulation:
        """Return the simulation for this rendered configuration, creating it if needed."""
        digest = config_hash(config_text)
        sim = self.session.execute(
            select(Simulation).where(Simulation.config_hash == digest)
        ).scalar_one_or_none()
        if sim is not None:
            return sim
        sim = Simulation(
            name=name,
            description=description,
            config_text=config_text,
            config_hash=digest,
            dim=dim,
        )
        self.session.add(sim)
        self.session.commit()
        self.session.refresh(sim)
        return sim

    def create_run(
        self,
        simulation: Simulation,
        name: str,
        kind: str = 'run',
        parent_run_id: Optional[str] = None,
        start_step: int = 0,
        threads: int = 1,
    ) -> SimulationRun:
        """Open a new run in the ``active`` state."""
        if kind not in ('run', 'picard'):
            raise ValueError(f"unknown run kind {kind!r}")
        run = SimulationRun(
            simulation_id=simulation.id,
            name=name,
            kind=kind,
            parent_run_id=parent_run_id,
            start_step=start_step,
            threads=threads,
            status='active',
            started_at=datetime.utcnow()
        )
        self.session.add(run)
        self.session.commit()
        self.session.refresh(run)
        return run

    def complete_run(
        self,
        run: SimulationRun,
        total_steps: int,
        final_time: Optional[float] = None,
        summary: Optional[Dict[str, Any]] = None,
    ):
        """Mark a run as completed."""
        run.status = 'completed'
        run.total_steps = total_steps
        run.final_time = final_time
        run.summary = summary
        run.completed_at = datetime.utcnow()
        self.session.commit()

    def fail_run(self, run: SimulationRun, report: FailureReport):
        """Mark a run as failed and keep its failure report."""
        run.status = 'failed'
        run.total_steps = report.step
        run.final_time = report.time
        run.failure_cause = report.cause
        run.failure_type = report.error_type
        run.monitor_at_failure = report.blowup_monitor
        run.summary = {"cfl_terms": report.cfl_terms, "monitor_threshold": report.monitor_threshold}
        run.completed_at = datetime.utcnow()
        self.session.commit()

    def get_run(self, run_id: str) -> Optional[SimulationRun]:
        return self.session.get(SimulationRun, run_id)

    def list_runs(self, simulation_id: Optional[str] = None, status: Optional[str] = None) -> List[SimulationRun]:
        """Runs, newest first, optionally filtered by simulation and status."""
        stmt = select(SimulationRun).order_by(SimulationRun.created_at.desc())
        if simulation_id is not None:
            stmt = stmt.where(SimulationRun.simulation_id == simulation_id)
        if status is not None:
            stmt = stmt.where(SimulationRun.status == status)
        return list(self.session.execute(stmt).scalars())

    def get_run_tree(self, simulation_id: str) -> List[Dict[str, Any]]:
        """Runs of a simulation nested under the runs they were restarted from."""
        runs = self.list_runs(simulation_id)
        run_map = {r.id: r for r in runs}
        return [self._build_run_subtree(r, run_map) for r in runs if r.parent_run_id is None]

    def _build_run_subtree(self, run: SimulationRun, run_map: Dict[str, SimulationRun]) -> Dict[str, Any]:
        children = [
            self._build_run_subtree(run_map[child.id], run_map)
            for child in run.child_runs
            if child.id in run_map
        ]
        return {
            'id': run.id,
            'name': run.name,
            'kind': run.kind,
            'status': run.status,
            'total_steps': run.total_steps,
            'start_step': run.start_step,
            'children': children
        }

    def compare_runs(self, run1: SimulationRun, run2: SimulationRun) -> dict:
        """Compare the recorded diagnostics of two runs step by step.

        Returns a dict with:
        - identical: True if both series match exactly (values and length)
        - shared_steps: number of leading records that match exactly
        - first_difference: step number of the first differing record, or None
        - differing_fields: names of the fields that differ there
        """
        series1 = self._records(run1)
        series2 = self._records(run2)
        shared = 0
        first_difference = None
        differing: List[str] = []
        for r1, r2 in zip(series1, series2):
            if r1 == r2:
                shared += 1
                continue
            first_difference = r1.step
            differing = [name for name in DiagnosticsRecord.header() if getattr(r1, name) != getattr(r2, name)]
            break
        if first_difference is None and len(series1) != len(series2):
            longer = series1 if len(series1) > len(series2) else series2
            first_difference = longer[shared].step
        return {
            'identical': first_difference is None,
            'shared_steps': shared,
            'first_difference': first_difference,
            'differing_fields': differing,
        }

    def _records(self, run: SimulationRun) -> List[DiagnosticsRecord]:
        stmt = select(DiagnosticsRow).where(DiagnosticsRow.run_id == run.id).order_by(DiagnosticsRow.step)
        rows = self.session.execute(stmt).scalars()
        return [DiagnosticsRecord.model_validate(row, from_attributes=True) for row in rows]
