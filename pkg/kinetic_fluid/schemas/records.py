"""Pydantic schemas for recorded simulation output."""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class DiagnosticsRecord(BaseModel):
    """One row of the diagnostics time series.

    Field order is the CSV column order. The first sixteen fields are the core
    schema; the remainder carry the instantaneous rates and extra functionals
    the reports are recomputed from.
    """

    model_config = ConfigDict(frozen=True)

    t: float = Field(..., description="Simulation time")
    mass_f: float = Field(..., description="Kinetic mass |f|_L1")
    mass_rho: float = Field(..., description="Fluid mass int rho dx")
    energy: float = Field(..., description="Total energy E(t)")
    viscous_dissipation_cum: float = Field(..., description="int_0^t mu|grad u|^2 + (mu+lambda)|div u|^2")
    friction_cum: float = Field(..., description="int_0^t int int f |u - v|^2")
    alignment_cum: float = Field(..., description="int_0^t alignment dissipation")
    energy_residual: float = Field(..., description="E(t) + cumulative dissipation - E0")
    support_radius: float = Field(..., description="R(t) = max |v| over supp f")
    support_bound: float = Field(..., description="Ceiling max(R0, sup(|b|+|u|)) + 2 dv")
    f_l2w: float = Field(..., description="|f|_L2w")
    f_h1w: float = Field(..., description="|f|_H1w")
    rho_linf: float = Field(..., description="max rho")
    u_linf: float = Field(..., description="max |u|")
    grad_u_linf: float = Field(..., description="max Frobenius |grad u|")
    blowup_monitor_cum: float = Field(..., description="sup|rho| + int (|u|_inf + |grad u|_inf^2)")
    step: int = Field(0, description="Step counter")
    dt: float = Field(0.0, description="Step size that produced this state")
    energy_residual_rel: float = Field(0.0, description="energy_residual / E0")
    viscous_rate: float = Field(0.0, description="Instantaneous viscous dissipation")
    friction_rate: float = Field(0.0, description="Instantaneous friction dissipation")
    alignment_rate: float = Field(0.0, description="Instantaneous alignment dissipation")
    b_linf: float = Field(0.0, description="max |b|")
    monitor_rho_sup: float = Field(0.0, description="Running sup of max rho")
    velocity_variance: float = Field(0.0, description="int m2 - |int m1|^2 / int n")
    second_moment: float = Field(0.0, description="int int f |v|^2")
    u_d1d2: float = Field(0.0, description="|grad u|_L2 + |grad^2 u|_L2")

    @classmethod
    def header(cls) -> List[str]:
        return list(cls.model_fields)


class PicardRow(BaseModel):
    """One iteration of the Picard contraction study."""

    iteration: int = Field(..., description="n: the row compares iterates n+1 and n")
    sup_rho_u: float = Field(..., description="sup_t |sqrt(rho) du|^2_L2")
    sup_rho_l2: float = Field(..., description="sup_t |drho|^2_L2")
    sup_rho_l32: float = Field(..., description="sup_t |drho|^2_L3/2")
    sup_f_lambda: float = Field(..., description="sup_t |df Lambda|^2_L6/5")
    sup_f_l1: float = Field(..., description="sup_t |df (1+v^2)^1/2|^2_L1")
    sup_F: float = Field(..., description="sup_t F^{n+1}(t)")
    grad_integral: float = Field(..., description="int_0^T0 |grad du^{n+1}|^2_L2")
    previous_grad_integral: float = Field(..., description="int_0^T0 |grad du^n|^2_L2")
    ratio: float = Field(..., description="[sup F + mu int|grad du^{n+1}|^2] / [mu int|grad du^n|^2]")
    sup_u_l2: float = Field(0.0, description="sup_t |du|_L2, unweighted")
    converged: bool = Field(False)
    contracting: bool = Field(True)

    @classmethod
    def header(cls) -> List[str]:
        return list(cls.model_fields)


class FailureReport(BaseModel):
    """Why and where a run stopped early."""

    step: int
    time: float
    cause: str
    error_type: str
    blowup_monitor: float
    monitor_threshold: Optional[float] = None
    cfl_terms: Dict[str, float] = Field(default_factory=dict)
