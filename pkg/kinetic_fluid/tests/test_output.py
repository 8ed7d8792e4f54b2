"""Tests for the CSV writers and the snapshot format."""

import json

import pytest

from kinetic_fluid.errors import SnapshotError
from kinetic_fluid.io.output import (
    SNAPSHOT_MAGIC,
    dump_snapshot,
    load_snapshot,
    read_timeseries,
    write_picard_report,
    write_timeseries,
)
from kinetic_fluid.numerics.coupling_driver import run
from kinetic_fluid.schemas.records import DiagnosticsRecord, PicardRow


@pytest.fixture
def trajectory(config):
    return run(config)


def test_timeseries_header_and_row_count(trajectory, tmp_path):
    path = tmp_path / "out" / "timeseries.csv"
    assert write_timeseries(trajectory.records, path) == len(trajectory.records)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + len(trajectory.records)
    columns = lines[0].split(",")
    assert columns[:4] == ["t", "mass_f", "mass_rho", "energy"]
    assert columns[15] == "blowup_monitor_cum"
    assert columns == DiagnosticsRecord.header()


def test_timeseries_values_survive_the_text_format(trajectory, tmp_path):
    path = tmp_path / "timeseries.csv"
    write_timeseries(trajectory.records, path)
    assert read_timeseries(path) == trajectory.records


def test_read_timeseries_rejects_foreign_header(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_timeseries(path)


def test_picard_report_writes_booleans_as_words(tmp_path):
    row = PicardRow(
        iteration=1,
        sup_rho_u=0.5,
        sup_rho_l2=0.0,
        sup_rho_l32=0.0,
        sup_f_lambda=0.0,
        sup_f_l1=0.0,
        sup_F=0.5,
        grad_integral=0.1,
        previous_grad_integral=1.0,
        ratio=0.6,
        converged=False,
        contracting=True,
    )
    path = tmp_path / "picard.csv"
    write_picard_report([row], path)
    header, line = path.read_text(encoding="utf-8").splitlines()
    values = dict(zip(header.split(","), line.split(",")))
    assert values["converged"] == "false"
    assert values["contracting"] == "true"
    assert values["ratio"] == "0.59999999999999998"


def test_snapshot_restores_state_bitwise(trajectory, tmp_path):
    state = trajectory.final
    path = dump_snapshot(state, tmp_path / "final.bin")
    loaded = load_snapshot(path)
    assert loaded.step == state.step
    assert loaded.time == state.time
    assert loaded.kinetic.grid == state.kinetic.grid
    assert loaded.fluid.eps_vac == state.fluid.eps_vac
    for mine, theirs in [
        (loaded.kinetic.f, state.kinetic.f),
        (loaded.fluid.rho, state.fluid.rho),
        (loaded.fluid.q, state.fluid.q),
        (loaded.fields.a, state.fields.a),
        (loaded.fields.b, state.fields.b),
    ]:
        assert mine.tobytes() == theirs.tobytes()
    loaded.fields.ensure_fresh(loaded.kinetic.time)


def test_snapshot_header_is_readable_json(trajectory, tmp_path):
    path = dump_snapshot(trajectory.final, tmp_path / "s.bin")
    magic, header, _ = path.read_bytes().split(b"\n", 2)
    assert magic == SNAPSHOT_MAGIC
    meta = json.loads(header)
    assert [entry["name"] for entry in meta["fields"]] == ["f", "rho", "q", "a", "b"]
    assert meta["dtype"] == "<f8"
    assert meta["x_cells"] == [16]


def _corrupt(path, transform):
    path.write_bytes(transform(path.read_bytes()))
    return path


@pytest.mark.parametrize(
    "transform, message",
    [
        (lambda data: b"NOTSNAP" + data[8:], "magic"),
        (lambda data: data + b"\x00" * 8, "trailing"),
        (lambda data: data[:-8], "payload ends"),
        (lambda data: data.replace(b'"x_cells":[16]', b'"x_cells":[17]', 1), "shape"),
        (lambda data: data.split(b"\n", 1)[0], "truncated"),
    ],
)
def test_corrupt_snapshots_are_rejected(trajectory, tmp_path, transform, message):
    path = _corrupt(dump_snapshot(trajectory.final, tmp_path / "s.bin"), transform)
    with pytest.raises(SnapshotError, match=message):
        load_snapshot(path)


def test_snapshot_error_is_an_os_error(tmp_path):
    with pytest.raises(OSError):
        load_snapshot(tmp_path / "missing.bin")
    assert issubclass(SnapshotError, OSError)
