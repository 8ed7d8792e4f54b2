"""CSV time series and binary snapshots.

Snapshot layout: the line ``KFSNAP/1``, one line of JSON describing the grids,
time, step and field list, then each field as row-major little-endian float64
in the listed order. See ``docs/FORMATS.md``.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Type, Union

import numpy as np
from pydantic import BaseModel

from kinetic_fluid.errors import SnapshotError
from kinetic_fluid.numerics.alignment import AlignmentFields
from kinetic_fluid.numerics.coupling_driver import SimState
from kinetic_fluid.numerics.fluid_solver import FluidState
from kinetic_fluid.numerics.phase_space import KineticState, PhaseGrid, SpatialGrid
from kinetic_fluid.schemas.records import DiagnosticsRecord, PicardRow

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"KFSNAP/1"
SNAPSHOT_VERSION = 1
SNAPSHOT_FIELDS = ("f", "rho", "q", "a", "b")
_DTYPE = "<f8"

PathLike = Union[str, Path]


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_rows(rows: Iterable[BaseModel], schema: Type[BaseModel], path: PathLike) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = schema.header()
    count = 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(getattr(row, name)) for name in header])
            count += 1
    logger.info("wrote %d rows to %s", count, path)
    return count


def write_timeseries(records: Sequence[DiagnosticsRecord], path: PathLike) -> int:
    """One header line plus one row per record, columns in `DiagnosticsRecord` order."""
    return _write_rows(records, DiagnosticsRecord, path)


def write_picard_report(rows: Sequence[PicardRow], path: PathLike) -> int:
    return _write_rows(rows, PicardRow, path)


def read_timeseries(path: PathLike) -> List[DiagnosticsRecord]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != DiagnosticsRecord.header():
            raise ValueError(f"{path}: header does not match the diagnostics schema")
        return [DiagnosticsRecord.model_validate(row) for row in reader]


def _snapshot_header(state: SimState) -> dict:
    grid = state.kinetic.grid
    space = grid.space
    return {
        "version": SNAPSHOT_VERSION,
        "dim": grid.dim,
        "x_lower": list(space.lower),
        "x_upper": list(space.upper),
        "x_cells": list(space.cells),
        "boundary": space.boundary.value,
        "v_max": list(grid.v_max),
        "v_cells": list(grid.v_cells),
        "r_guard": grid.r_guard,
        "eps_vac": state.fluid.eps_vac,
        "time": state.time,
        "step": state.step,
        "endianness": "little",
        "dtype": _DTYPE,
        "fields": [
            {"name": "f", "shape": list(grid.shape)},
            {"name": "rho", "shape": list(space.shape)},
            {"name": "q", "shape": [grid.dim] + list(space.shape)},
            {"name": "a", "shape": list(space.shape)},
            {"name": "b", "shape": [grid.dim] + list(space.shape)},
        ],
    }


def dump_snapshot(state: SimState, path: PathLike) -> Path:
    """Write ``state`` so that `load_snapshot` restores it bitwise."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps(_snapshot_header(state), separators=(",", ":"))
    arrays = (state.kinetic.f, state.fluid.rho, state.fluid.q, state.fields.a, state.fields.b)
    with path.open("wb") as handle:
        handle.write(SNAPSHOT_MAGIC + b"\n")
        handle.write(header.encode("utf-8") + b"\n")
        for values in arrays:
            handle.write(np.ascontiguousarray(values, dtype=_DTYPE).tobytes(order="C"))
    logger.debug("snapshot of step %d written to %s", state.step, path)
    return path


def load_snapshot(path: PathLike) -> SimState:
    """Read a snapshot written by `dump_snapshot`; raises `SnapshotError` on any mismatch."""
    data = Path(path).read_bytes()
    magic, _, rest = data.partition(b"\n")
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: not a version-{SNAPSHOT_VERSION} snapshot (magic {magic[:16]!r})")
    header_line, sep, payload = rest.partition(b"\n")
    if not sep:
        raise SnapshotError(f"{path}: truncated header")
    try:
        header = json.loads(header_line.decode("utf-8"))
    except ValueError as exc:
        raise SnapshotError(f"{path}: unreadable header ({exc})") from None
    if header.get("version") != SNAPSHOT_VERSION or header.get("dtype") != _DTYPE:
        raise SnapshotError(f"{path}: unsupported version or dtype")
    names = tuple(entry["name"] for entry in header["fields"])
    if names != SNAPSHOT_FIELDS:
        raise SnapshotError(f"{path}: expected fields {SNAPSHOT_FIELDS}, found {names}")

    space = SpatialGrid(header["x_lower"], header["x_upper"], header["x_cells"], header["boundary"])
    grid = PhaseGrid(space, header["v_max"], header["v_cells"], header["r_guard"])
    expected = _snapshot_header_shapes(grid)
    arrays = {}
    offset = 0
    for entry in header["fields"]:
        shape = tuple(entry["shape"])
        if shape != expected[entry["name"]]:
            raise SnapshotError(f"{path}: field {entry['name']} has shape {shape}, grid implies {expected[entry['name']]}")
        size = int(np.prod(shape)) * 8
        if offset + size > len(payload):
            raise SnapshotError(f"{path}: payload ends inside field {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(payload, dtype=_DTYPE, count=size // 8, offset=offset).reshape(shape).astype(np.float64)
        offset += size
    if offset != len(payload):
        raise SnapshotError(f"{path}: {len(payload) - offset} trailing bytes")

    time = float(header["time"])
    kin = KineticState(grid, arrays["f"], time)
    fl = FluidState(space, arrays["rho"], arrays["q"], time, float(header["eps_vac"]))
    fields = AlignmentFields(arrays["a"], arrays["b"], time)
    return SimState(time, kin, fl, fields, int(header["step"]))


def _snapshot_header_shapes(grid: PhaseGrid) -> dict:
    space = grid.space.shape
    vector = (grid.dim,) + space
    return {"f": grid.shape, "rho": space, "q": vector, "a": space, "b": vector}
