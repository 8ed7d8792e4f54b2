"""Tests for the scalar functionals, weighted norms and the trajectory reports."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kinetic_fluid.errors import ConfigError
from kinetic_fluid.io.initial_data import generate_initial
from kinetic_fluid.numerics.coupling_driver import run
from kinetic_fluid.numerics.diagnostics import (
    WeightParams,
    blowup_monitor,
    compatibility_residual,
    cumulative_trapezoid,
    energy_identity_residual,
    fluid_energy,
    fluid_mass,
    friction_rate,
    h1_growth_trend,
    l1_embedding_constant,
    mass_l1,
    run_summary,
    second_moment_report,
    support_bound_report,
    u_d1d2_norm,
    velocity_variance,
    weighted_h1,
    weighted_l2,
)
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, SpatialGrid
from kinetic_fluid.schemas.records import DiagnosticsRecord

CORE_FIELDS = list(DiagnosticsRecord.model_fields)[:16]


def _record(t, **values):
    data = {name: 0.0 for name in CORE_FIELDS}
    data.update(t=t, **values)
    return DiagnosticsRecord(**data)


def _phase():
    return PhaseGrid(SpatialGrid((0.0,), (1.0,), (8,)), (2.0,), (8,))


@pytest.mark.parametrize("alpha, beta, key", [(3.0, 1.0, "alpha"), (3.5, 0.5, "beta")])
def test_weight_params_constraints(alpha, beta, key):
    with pytest.raises(ConfigError) as info:
        WeightParams(alpha, beta)
    assert info.value.key == key


def test_masses():
    grid = _phase()
    kin = KineticState(grid, np.ones(grid.shape))
    assert mass_l1(kin) == pytest.approx(4.0)
    assert fluid_mass(np.full(8, 2.0), grid.space) == pytest.approx(2.0)


def test_fluid_energy_at_rest_is_internal_energy(config):
    grid = config.spatial_grid()
    rho = np.ones(grid.shape)
    energy = fluid_energy(rho, np.zeros((1,) + grid.shape), grid, config.fluid_params())
    assert energy == pytest.approx(1.0 / 0.4)


def test_friction_rate_matches_direct_quadrature(rng):
    grid = _phase()
    f = rng.random(grid.shape)
    u = rng.uniform(-1.0, 1.0, (1, 8))
    vs = grid.v_axis_centers(0)
    direct = math.fsum(f[i, k] * (u[0, i] - vs[k]) ** 2 for i in range(8) for k in range(8)) * grid.cell_volume
    assert friction_rate(KineticState(grid, f), u) == pytest.approx(direct, rel=1e-12)


def test_velocity_variance_vanishes_for_monokinetic_data():
    grid = _phase()
    f = np.zeros(grid.shape)
    f[:, 5] = 1.0
    assert velocity_variance(KineticState(grid, f)) == pytest.approx(0.0, abs=1e-14)
    f[:, 2] = 1.0
    assert velocity_variance(KineticState(grid, f)) > 0.0
    assert velocity_variance(KineticState(grid, np.zeros(grid.shape))) == 0.0


def test_weighted_norm_ordering_and_l1_embedding(rng):
    grid = _phase()
    w = WeightParams()
    f = rng.random(grid.shape)
    l2w = weighted_l2(f, grid, w)
    assert l2w <= weighted_h1(f, grid, w)
    assert mass_l1(KineticState(grid, f)) <= l1_embedding_constant(grid, w) * l2w


def test_cumulative_trapezoid_is_exact_for_linear_integrands(rng):
    t = np.cumsum(rng.uniform(0.1, 0.5, 12))
    t -= t[0]
    assert_allclose(cumulative_trapezoid(t, 3.0 * t + 1.0), 1.5 * t**2 + t, rtol=1e-13, atol=1e-14)
    assert_allclose(cumulative_trapezoid([0.5], [2.0]), [0.0])


def test_u_d1d2_norm_of_constant_velocity_is_zero():
    grid = SpatialGrid((0.0,), (1.0,), (8,))
    assert u_d1d2_norm(np.full((1, 8), 0.3), grid) == pytest.approx(0.0, abs=1e-12)


def test_compatibility_residual_of_rest_state(config):
    kin, fl = generate_initial(config.model_copy(update={"kinetic_amplitude": 0.0}))
    report = compatibility_residual(kin, fl.rho, fl.u, config.fluid_params())
    assert report.weighted_l2 == pytest.approx(0.0, abs=1e-14)
    assert report.vacuum_cells == 0
    assert report.vacuum_max == 0.0


def test_compatibility_residual_sees_drag_imbalance(config_factory):
    config = config_factory(kinetic_center_v=0.5, fluid_vacuum_inner=0.1, fluid_vacuum_outer=0.2)
    kin, fl = generate_initial(config)
    report = compatibility_residual(kin, fl.rho, fl.u, config.fluid_params())
    assert report.weighted_l2 > 0.0
    assert report.vacuum_cells > 0
    assert report.vacuum_max > 0.0


def test_recorded_integrals_match_recomputation(config):
    records = run(config).records
    raw, relative = energy_identity_residual(records)
    assert_allclose(raw, [r.energy_residual for r in records], atol=1e-12)
    assert_allclose(relative, [r.energy_residual_rel for r in records], atol=1e-12)
    assert_allclose(blowup_monitor(records), [r.blowup_monitor_cum for r in records], rtol=1e-12)
    assert not any(check.flagged for check in support_bound_report(records))


def test_blowup_monitor_from_samples():
    records = [_record(0.0, rho_linf=1.0, u_linf=1.0), _record(1.0, rho_linf=2.0, u_linf=1.0), _record(2.0, rho_linf=1.5, u_linf=1.0)]
    assert_allclose(blowup_monitor(records), [1.0, 3.0, 4.0])


def test_support_bound_report_flags_escapes():
    records = [_record(0.0, support_radius=1.0, support_bound=1.5), _record(0.1, support_radius=1.6, support_bound=1.5)]
    assert [check.flagged for check in support_bound_report(records)] == [False, True]


def test_second_moment_report():
    t = np.linspace(0.0, 1.0, 11)
    decaying = [_record(ti, second_moment=4.0 * math.exp(-2.0 * ti), mass_f=1.0) for ti in t]
    checks = second_moment_report(decaying)
    assert not any(check.flagged for check in checks)
    assert_allclose([c.bound for c in checks], 2.0 * np.exp(-t))
    growing = decaying[:-1] + [_record(1.0, second_moment=4.0, mass_f=1.0)]
    assert second_moment_report(growing)[-1].flagged
    assert second_moment_report([]) == []


def test_second_moment_report_without_particles():
    checks = second_moment_report([_record(0.0), _record(0.5, u_linf=1.0)])
    assert [c.bound for c in checks] == [0.0, 0.0]
    assert not any(c.flagged for c in checks)


def test_h1_growth_trend_recovers_exponent():
    t = np.linspace(0.0, 1.0, 21)
    records = [_record(ti, f_h1w=2.0 * math.exp(0.7 * ti)) for ti in t]
    slope, intercept = h1_growth_trend(records)
    assert slope == pytest.approx(0.7, rel=1e-10)
    assert intercept == pytest.approx(0.0, abs=1e-10)
    assert h1_growth_trend(records[:1]) == (0.0, 0.0)


def test_run_summary_collects_trajectory_checks():
    t = np.linspace(0.0, 1.0, 11)
    records = [
        _record(ti, second_moment=4.0 * math.exp(-2.0 * ti), mass_f=1.0, f_h1w=math.exp(0.5 * ti), support_bound=1.0)
        for ti in t
    ]
    records[-1] = _record(1.0, second_moment=4.0, mass_f=1.0, f_h1w=math.exp(0.5), support_bound=-1.0)
    summary = run_summary(records)
    assert summary["records"] == 11
    assert summary["t_final"] == 1.0
    assert summary["support_violations"] == [1.0]
    assert summary["second_moment_violations"] == [1.0]
    assert summary["second_moment_final"]["root_second_moment"] == pytest.approx(2.0)
    assert summary["h1_growth"]["slope"] == pytest.approx(0.5, rel=1e-10)
    assert run_summary([])["records"] == 0
