"""SimulationRun model - one execution of a Simulation.

A run is either a coupled time integration (``kind='run'``) or a Picard
study (``kind='picard'``). Runs restarted from another run's snapshot point
back to it through ``parent_run_id``.
"""

from sqlalchemy import Column, String, Integer, Float, DateTime, ForeignKey, JSON, Text, Index
from sqlalchemy.orm import relationship
from datetime import datetime
import uuid

from .base import Base


class SimulationRun(Base):
    __tablename__ = 'simulation_runs'

    id = Column(String, primary_key=True, default=lambda: str(uuid.uuid4()))
    simulation_id = Column(String, ForeignKey('simulations.id', ondelete='CASCADE'), nullable=False, index=True)

    name = Column(String, nullable=False, index=True)
    kind = Column(String, default='run', nullable=False)  # run, picard
    status = Column(String, default='active', nullable=False, index=True)  # active, completed, failed

    parent_run_id = Column(String, ForeignKey('simulation_runs.id'), nullable=True, index=True)
    start_step = Column(Integer, default=0, nullable=False)

    total_steps = Column(Integer, default=0, nullable=False)
    final_time = Column(Float, nullable=True)
    threads = Column(Integer, default=1, nullable=False)

    # Failure report
    failure_cause = Column(Text, nullable=True)
    failure_type = Column(String, nullable=True)
    monitor_at_failure = Column(Float, nullable=True)

    # Picard summary (rate, limit discrepancy) or other run-specific data
    summary = Column(JSON, nullable=True)

    created_at = Column(DateTime, default=datetime.utcnow, nullable=False, index=True)
    started_at = Column(DateTime, nullable=True)
    completed_at = Column(DateTime, nullable=True)

    simulation = relationship("Simulation", back_populates="runs")
    parent_run = relationship(
        "SimulationRun",
        remote_side=[id],
        backref="child_runs",
        foreign_keys=[parent_run_id]
    )
    records = relationship(
        "DiagnosticsRow",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="DiagnosticsRow.step",
        lazy="dynamic"
    )
    picard_rows = relationship(
        "PicardResultRow",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="PicardResultRow.iteration",
        lazy="dynamic"
    )

    __table_args__ = (
        Index('ix_sim_status', 'simulation_id', 'status'),
    )

    def __repr__(self):
        return f"<SimulationRun(id={self.id[:8]}, name='{self.name}', kind='{self.kind}', status='{self.status}')>"
