"""Tests for configuration parsing, validation and rendering."""

import pytest

from kinetic_fluid.errors import ConfigError
from kinetic_fluid.io.config_io import load_config, parse_config, render_config
from kinetic_fluid.numerics.alignment import KernelKind
from kinetic_fluid.numerics.phase_space import Boundary
from kinetic_fluid.schemas.config import GUARD_FACTOR, FluidInit, KineticInit

from .conftest import CONFIG_TEXT


def _problems(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return dict(info.value.problems)


def test_minimal_config_uses_documented_defaults():
    config = parse_config(CONFIG_TEXT)
    assert config.dim == 1
    assert config.x_cells == (16,)
    assert config.x_lower == (0.0,) and config.x_upper == (1.0,)
    assert config.boundary is Boundary.PERIODIC
    assert config.kernel is KernelKind.SMOOTH
    assert config.lam == 0.0
    assert (config.alpha, config.beta) == (3.5, 1.0)
    assert config.kinetic_init is KineticInit.BUMP
    assert config.fluid_init is FluidInit.UNIFORM
    assert config.cfl == 0.4
    assert config.monitor_abort is None
    assert config.fft is False


def test_load_config_reads_file(config_file):
    assert load_config(config_file) == parse_config(CONFIG_TEXT)


def test_load_config_rejects_undecodable_bytes(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_bytes(b"dim = 1\n\xff\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.key == "config"


def test_gamma_violation_cites_pressure_law():
    problems = _problems(CONFIG_TEXT.replace("gamma = 1.4", "gamma = 0.9"))
    assert "gamma > 1" in problems["gamma"]
    assert "P = rho^gamma" in problems["gamma"]


def test_alpha_violation_cites_weight_constraint():
    problems = _problems(CONFIG_TEXT + "alpha = 2.0\n")
    assert "alpha > 3" in problems["alpha"]


def test_every_violation_is_reported_at_once():
    text = CONFIG_TEXT.replace("mu = 0.1", "mu = -1").replace("r0 = 1.0", "r0 = 0") + "beta = 0.4\n"
    problems = _problems(text)
    assert set(problems) == {"mu", "r0", "beta"}


def test_unknown_and_missing_keys():
    problems = _problems(CONFIG_TEXT.replace("mu = 0.1\n", "") + "colour = blue\n")
    assert problems["mu"] == "required key is missing"
    assert problems["colour"] == "unknown key"


def test_malformed_and_duplicate_lines():
    problems = _problems(CONFIG_TEXT + "just words\nmu = 0.2\n")
    assert "line 11" in problems
    assert "assigned twice" in problems["mu"]


def test_lambda_restriction_depends_on_dimension():
    problems = _problems(CONFIG_TEXT + "lambda = -0.3\n")
    assert "2*mu + 1*lambda >= 0" in problems["lambda"]
    assert parse_config(CONFIG_TEXT + "lambda = -0.1\n").lam == -0.1


def test_per_axis_lists_and_broadcast():
    text = CONFIG_TEXT.replace("dim = 1", "dim = 2").replace("x_cells = 16", "x_cells = 8, 12")
    config = parse_config(text)
    assert config.axis("x_cells") == (8, 12)
    assert config.axis("v_max") == (4.0, 4.0)
    assert config.phase_grid().shape == (8, 12, 16, 16)
    problems = _problems(text.replace("x_cells = 8, 12", "x_cells = 8, 12, 4"))
    assert "x_cells" in problems


def test_velocity_box_must_clear_the_guard():
    problems = _problems(CONFIG_TEXT.replace("v_max = 4", "v_max = 1.1"))
    assert "guard" in problems["v_max"]
    config = parse_config(CONFIG_TEXT)
    assert config.r_guard == pytest.approx(GUARD_FACTOR * 1.0)


def test_bump_with_wide_box_is_accepted():
    text = CONFIG_TEXT.replace("v_max = 4", "v_max = 3") + "kinetic_center_v = 0.5\nmax_fluid_speed = 0.5\n"
    config = parse_config(text)
    assert config.predicted_ceiling == pytest.approx(1.5)
    assert config.r_guard == pytest.approx(1.8)


def test_table_kernel_parsing_and_validation():
    config = parse_config(CONFIG_TEXT + "kernel = table\nkernel_table = 0:1, 1:0.5, 2:0.25\n")
    assert config.kernel_table == ((0.0, 1.0), (1.0, 0.5), (2.0, 0.25))
    assert _problems(CONFIG_TEXT + "kernel = table\n") == {"kernel_table": "required when kernel = table"}
    problems = _problems(CONFIG_TEXT + "kernel = table\nkernel_table = 0:1, 0.2:0.5\n")
    assert "kernel_table" in problems


def test_fft_needs_periodic_boundary():
    problems = _problems(CONFIG_TEXT + "boundary = clamped\nfft = true\n")
    assert "periodic" in problems["fft"]


def test_vacuum_annulus_keys_go_together():
    problems = _problems(CONFIG_TEXT + "fluid_vacuum_inner = 0.1\n")
    assert "fluid_vacuum_outer" in problems
    problems = _problems(CONFIG_TEXT + "fluid_vacuum_inner = 0.3\nfluid_vacuum_outer = 0.2\n")
    assert "fluid_vacuum_outer" in problems


def test_off_values_for_optional_keys():
    config = parse_config(CONFIG_TEXT + "monitor_abort = off\nkinetic_center_x = none\n")
    assert config.monitor_abort is None
    assert config.kinetic_center_x is None


def test_render_then_parse_round_trips():
    text = (
        CONFIG_TEXT.replace("dim = 1", "dim = 2").replace("x_cells = 16", "x_cells = 8, 12")
        + "lambda = 0.05\nkernel = table\nkernel_table = 0:1, 1:0.5\nmonitor_abort = 40\n"
        + "fluid_vacuum_inner = 0.1\nfluid_vacuum_outer = 0.2\nfft = true\nt_end = 0.1\n"
    ).replace("t_end = 0.02\n", "")
    config = parse_config(text)
    rendered = render_config(config)
    assert "lambda = 0.05" in rendered
    assert parse_config(rendered) == config
