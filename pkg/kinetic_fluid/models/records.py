"""Per-step diagnostics and per-iteration Picard rows of a run.

Column names match the fields of `DiagnosticsRecord` and `PicardRow`, so rows
convert to and from the pydantic schemas by name.
"""

from sqlalchemy import Column, String, Integer, Float, Boolean, ForeignKey, Index
from sqlalchemy.orm import relationship
import uuid

from .base import Base


class DiagnosticsRow(Base):
    """One recorded `DiagnosticsRecord`."""
    __tablename__ = 'diagnostics'

    id = Column(String, primary_key=True, default=lambda: str(uuid.uuid4()))
    run_id = Column(String, ForeignKey('simulation_runs.id', ondelete='CASCADE'), nullable=False)

    t = Column(Float, nullable=False)
    mass_f = Column(Float, nullable=False)
    mass_rho = Column(Float, nullable=False)
    energy = Column(Float, nullable=False)
    viscous_dissipation_cum = Column(Float, nullable=False)
    friction_cum = Column(Float, nullable=False)
    alignment_cum = Column(Float, nullable=False)
    energy_residual = Column(Float, nullable=False)
    support_radius = Column(Float, nullable=False)
    support_bound = Column(Float, nullable=False)
    f_l2w = Column(Float, nullable=False)
    f_h1w = Column(Float, nullable=False)
    rho_linf = Column(Float, nullable=False)
    u_linf = Column(Float, nullable=False)
    grad_u_linf = Column(Float, nullable=False)
    blowup_monitor_cum = Column(Float, nullable=False)
    step = Column(Integer, nullable=False)
    dt = Column(Float, nullable=False)
    energy_residual_rel = Column(Float, nullable=False)
    viscous_rate = Column(Float, nullable=False)
    friction_rate = Column(Float, nullable=False)
    alignment_rate = Column(Float, nullable=False)
    b_linf = Column(Float, nullable=False)
    monitor_rho_sup = Column(Float, nullable=False)
    velocity_variance = Column(Float, nullable=False)
    second_moment = Column(Float, nullable=False)
    u_d1d2 = Column(Float, nullable=False)

    run = relationship("SimulationRun", back_populates="records")

    __table_args__ = (
        Index('ix_run_step', 'run_id', 'step'),
    )

    def __repr__(self):
        return f"<DiagnosticsRow(run={self.run_id[:8]}, step={self.step}, t={self.t:g})>"


class PicardResultRow(Base):
    """One `PicardRow` of a contraction study."""
    __tablename__ = 'picard_rows'

    id = Column(String, primary_key=True, default=lambda: str(uuid.uuid4()))
    run_id = Column(String, ForeignKey('simulation_runs.id', ondelete='CASCADE'), nullable=False)

    iteration = Column(Integer, nullable=False)
    sup_rho_u = Column(Float, nullable=False)
    sup_rho_l2 = Column(Float, nullable=False)
    sup_rho_l32 = Column(Float, nullable=False)
    sup_f_lambda = Column(Float, nullable=False)
    sup_f_l1 = Column(Float, nullable=False)
    sup_F = Column(Float, nullable=False)
    grad_integral = Column(Float, nullable=False)
    previous_grad_integral = Column(Float, nullable=False)
    ratio = Column(Float, nullable=False)
    sup_u_l2 = Column(Float, nullable=False)
    converged = Column(Boolean, nullable=False)
    contracting = Column(Boolean, nullable=False)

    run = relationship("SimulationRun", back_populates="picard_rows")

    __table_args__ = (
        Index('ix_run_iteration', 'run_id', 'iteration'),
    )
