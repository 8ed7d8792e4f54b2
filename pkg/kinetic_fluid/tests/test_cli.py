"""Tests for the ``kinetic-fluid`` command line."""

import json
import logging

import pytest

from kinetic_fluid import config as settings
from kinetic_fluid.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, build_parser, main
from kinetic_fluid.database import make_session
from kinetic_fluid.io.output import load_snapshot, read_timeseries
from kinetic_fluid.managers import RecordManager, RunManager

from .conftest import CONFIG_TEXT


@pytest.fixture(autouse=True)
def no_store(monkeypatch):
    monkeypatch.setattr(settings, "DATABASE_URL", None)


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def _write(tmp_path, text, name="small.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_parser_requires_a_command_and_config():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args([])
    with pytest.raises(SystemExit):
        parser.parse_args(["run"])
    args = parser.parse_args(["run", "--config", "a.cfg", "--snapshots", "3"])
    assert args.snapshots == 3 and args.from_snapshot is None


def test_run_writes_outputs(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--quiet"]) == EXIT_OK
    records = read_timeseries(out / "timeseries.csv")
    final = load_snapshot(out / "final.bin")
    assert records[-1].step == final.step
    assert final.time == pytest.approx(0.02)
    assert not (out / "failure.json").exists()
    summary = json.loads((out / "run_summary.json").read_text(encoding="utf-8"))
    assert summary["records"] == len(records)
    assert summary["support_violations"] == []
    assert set(summary["h1_growth"]) == {"slope", "intercept"}


def test_run_writes_periodic_snapshots(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--snapshots", "2", "--quiet"]) == EXIT_OK
    snapshots = sorted(out.glob("snapshot_*.bin"))
    records = read_timeseries(out / "timeseries.csv")
    assert len(snapshots) == len(records) // 2
    assert load_snapshot(snapshots[0]).step == records[1].step


def test_restart_from_snapshot_continues_the_clock(config_file, tmp_path):
    first = tmp_path / "first"
    main(["run", "--config", str(config_file), "--out", str(first), "--quiet"])
    longer = _write(tmp_path, CONFIG_TEXT.replace("t_end = 0.02", "t_end = 0.03"), "longer.cfg")
    second = tmp_path / "second"
    code = main(
        ["run", "--config", str(longer), "--out", str(second), "--from-snapshot", str(first / "final.bin"), "--quiet"]
    )
    assert code == EXIT_OK
    records = read_timeseries(second / "timeseries.csv")
    assert records[0].t == pytest.approx(0.02)
    assert records[-1].t == pytest.approx(0.03)


def test_invalid_config_exits_with_config_code(tmp_path, capsys):
    path = _write(tmp_path, CONFIG_TEXT.replace("gamma = 1.4", "gamma = 0.5"))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "config gamma" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_missing_config_exits_with_io_code(tmp_path):
    assert main(["check-data", "--config", str(tmp_path / "absent.cfg"), "--quiet"]) == EXIT_IO


def test_undecodable_config_exits_with_config_code(tmp_path, capsys):
    path = tmp_path / "latin1.cfg"
    path.write_bytes(CONFIG_TEXT.encode("utf-8") + b"# caf\xe9 \xff\n")
    assert main(["check-data", "--config", str(path)]) == EXIT_CONFIG
    assert "not valid UTF-8" in capsys.readouterr().err


def test_corrupt_snapshot_exits_with_io_code(config_file, tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"garbage\n")
    code = main(["run", "--config", str(config_file), "--out", str(tmp_path), "--from-snapshot", str(bad), "--quiet"])
    assert code == EXIT_IO


def test_monitor_abort_exits_with_numerical_code(tmp_path):
    path = _write(tmp_path, CONFIG_TEXT + "monitor_abort = 0.5\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out", str(out), "--quiet"]) == EXIT_NUMERICAL
    failure = json.loads((out / "failure.json").read_text(encoding="utf-8"))
    assert failure["error_type"] == "MonitorThreshold"
    assert failure["monitor_threshold"] == 0.5
    assert (out / "timeseries.csv").exists()
    assert (out / "final.bin").exists()


def test_check_data_prints_the_compatibility_residual(config_file, capsys):
    assert main(["check-data", "--config", str(config_file), "--quiet"]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "compatibility residual" in printed
    assert "L1 embedding constant" in printed


def test_picard_writes_report_and_summary(config_file, tmp_path):
    out = tmp_path / "picard"
    assert main(["picard", "--config", str(config_file), "--out", str(out), "--quiet"]) == EXIT_OK
    summary = json.loads((out / "picard_summary.json").read_text(encoding="utf-8"))
    lines = (out / "picard.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("iteration,")
    assert len(lines) == 1 + summary["iterations"]
    assert summary["converged"] is True


def test_verify_passes_on_the_small_config(config_file, capsys):
    assert main(["verify", "--config", str(config_file), "--quiet"]) == EXIT_OK
    assert "FAIL" not in capsys.readouterr().out


def test_run_is_stored_when_a_database_is_given(config_file, tmp_path):
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--db", url, "--name", "smoke", "--quiet"]) == 0
    session = make_session(url)
    try:
        (stored,) = RunManager(session).list_runs()
        assert stored.name == "smoke"
        assert stored.status == "completed"
        assert RecordManager(session).get_records(stored) == read_timeseries(out / "timeseries.csv")
    finally:
        session.close()


def test_snapshot_from_another_grid_is_a_config_error(config_file, tmp_path):
    first = tmp_path / "first"
    main(["run", "--config", str(config_file), "--out", str(first), "--quiet"])
    finer = _write(tmp_path, CONFIG_TEXT.replace("x_cells = 16", "x_cells = 32"), "finer.cfg")
    code = main(
        ["run", "--config", str(finer), "--out", str(tmp_path / "b"), "--from-snapshot", str(first / "final.bin"), "--quiet"]
    )
    assert code == EXIT_CONFIG
