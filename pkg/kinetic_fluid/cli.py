"""Command-line entry point (``kinetic-fluid``).

Subcommands:
    run         coupled simulation; writes timeseries.csv, run_summary.json, final.bin and snapshots
    picard      Picard contraction study; writes picard.csv and picard_summary.json
    verify      invariant suite on reduced grids
    check-data  kernel, weight and initial-data checks including the compatibility residual

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from kinetic_fluid import __version__
from kinetic_fluid import config as settings
from kinetic_fluid.errors import ConfigError, KineticFluidError, NumericalFailure
from kinetic_fluid.io.config_io import load_config, render_config
from kinetic_fluid.io.initial_data import generate_initial
from kinetic_fluid.io.output import dump_snapshot, load_snapshot, write_picard_report, write_timeseries
from kinetic_fluid.numerics.coupling_driver import run
from kinetic_fluid.numerics.diagnostics import compatibility_residual, l1_embedding_constant, run_summary
from kinetic_fluid.numerics.picard import run_picard
from kinetic_fluid.schemas.config import SimConfig
from kinetic_fluid.verify import run_verify

logger = logging.getLogger("kinetic_fluid.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinetic-fluid", description="Kinetic Cucker-Smale / Navier-Stokes simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "coupled simulation"),
        ("picard", "Picard iteration contraction study"),
        ("verify", "invariant suite on small grids"),
        ("check-data", "validate kernel, weight and initial data"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, type=Path, help="key = value configuration file")
        cmd.add_argument("--out", type=Path, default=None, help="output directory (default: output_dir key)")
        cmd.add_argument("--quiet", action="store_true", help="only log warnings and errors")
        cmd.add_argument("--db", default=None, help="run store URL (default: DATABASE_URL, if set)")
        if name == "run":
            cmd.add_argument("--snapshots", type=int, default=0, metavar="N", help="snapshot every N recorded steps")
            cmd.add_argument("--from-snapshot", type=Path, default=None, help="start from a snapshot instead of t=0")
            cmd.add_argument("--parent-run", default=None, help="run-store id of the run the snapshot came from")
        if name in ("run", "picard"):
            cmd.add_argument("--name", default=None, help="run name in the store (default: config file stem)")
    return parser


def setup_logging(quiet: bool) -> None:
    level = logging.WARNING if quiet else getattr(logging, settings.LOG_LEVEL, logging.INFO)
    logging.basicConfig(level=level, format=settings.LOG_FORMAT, datefmt=settings.LOG_DATE_FORMAT, force=True)


def _open_store(args):
    url = args.db or settings.DATABASE_URL
    if not url:
        return None
    from kinetic_fluid.database import make_session
    from kinetic_fluid.managers import RecordManager, RunManager

    session = make_session(url)
    return session, RunManager(session), RecordManager(session)


def _register(store, config: SimConfig, args, kind: str, start_step: int = 0):
    if store is None:
        return None
    _, runs, _ = store
    name = args.name or args.config.stem
    sim = runs.get_or_create_simulation(name, render_config(config), config.dim)
    return runs.create_run(
        sim, name, kind, parent_run_id=getattr(args, "parent_run", None), start_step=start_step, threads=settings.THREADS
    )


def cmd_run(config: SimConfig, args, out: Path) -> int:
    initial = load_snapshot(args.from_snapshot) if args.from_snapshot else None
    if initial is not None and initial.kinetic.grid != config.phase_grid():
        raise ConfigError([("from_snapshot", "snapshot grid does not match the configured grid")])
    store = _open_store(args)
    stored = _register(store, config, args, "run", initial.step if initial else 0)
    recorded = 0

    def on_record(state, record):
        nonlocal recorded
        recorded += 1
        if args.snapshots and recorded % args.snapshots == 0:
            dump_snapshot(state, out / f"snapshot_{state.step:06d}.bin")

    trajectory = run(config, initial, on_record)
    write_timeseries(trajectory.records, out / "timeseries.csv")
    summary = run_summary(trajectory.records)
    (out / "run_summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if summary["support_violations"] or summary["second_moment_violations"]:
        logger.warning(
            "%d support and %d second-moment violations",
            len(summary["support_violations"]),
            len(summary["second_moment_violations"]),
        )
    dump_snapshot(trajectory.final, out / "final.bin")
    if store is not None:
        _, runs, records = store
        records.add_records(stored, trajectory.records)
        if trajectory.failure is None:
            runs.complete_run(stored, trajectory.final.step, trajectory.final.time)
        else:
            runs.fail_run(stored, trajectory.failure)
        logger.info("stored run %s", stored.id)
    if trajectory.failure is not None:
        (out / "failure.json").write_text(trajectory.failure.model_dump_json(indent=2) + "\n", encoding="utf-8")
        raise NumericalFailure(trajectory.failure)
    logger.info("outputs written to %s", out)
    return EXIT_OK


def cmd_picard(config: SimConfig, args, out: Path) -> int:
    store = _open_store(args)
    stored = _register(store, config, args, "picard")
    on_row = None
    if store is not None:
        on_row = lambda row: store[2].add_picard_row(stored, row)  # noqa: E731
    report = run_picard(config, on_row=on_row)
    write_picard_report(report.rows, out / "picard.csv")
    summary = {
        "iterations": len(report.rows),
        "converged": report.converged,
        "geometric_rate": report.rate,
        "non_contracting": report.flagged,
        "dt": report.dt,
        "steps": report.steps,
        "limit_discrepancy": report.limit_discrepancy,
    }
    (out / "picard_summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if store is not None:
        store[1].complete_run(stored, report.steps, report.steps * report.dt, summary)
    logger.info("picard: %d rows, rate %.4g, converged=%s", len(report.rows), report.rate, report.converged)
    return EXIT_OK


def cmd_verify(config: SimConfig, args, out: Path) -> int:
    report = run_verify(config)
    for result in report.results:
        print(f"{'ok  ' if result.passed else 'FAIL'} {result.name:<22} {result.detail}")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def cmd_check_data(config: SimConfig, args, out: Path) -> int:
    kin, fl = generate_initial(config)
    weights = config.weight_params()
    compat = compatibility_residual(kin, fl.rho, fl.u, config.fluid_params())
    print(f"kernel {config.kernel.value}: normalization ok")
    print(f"weight alpha={weights.alpha:g} beta={weights.beta:g}: ok")
    print(f"support guard radius {config.r_guard:g} < v_max {min(config.axis('v_max')):g}: ok")
    print(f"L1 embedding constant on this grid: {l1_embedding_constant(kin.grid, weights):.6g}")
    print(f"compatibility residual |G/sqrt(rho0)|_L2 = {compat.weighted_l2:.6e}")
    print(f"compatibility residual max|G| on {compat.vacuum_cells} vacuum cells = {compat.vacuum_max:.6e}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "picard": cmd_picard, "verify": cmd_verify, "check-data": cmd_check_data}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.quiet)
    try:
        config = load_config(args.config)
        out = args.out or Path(config.output_dir)
        if args.command in ("run", "picard"):
            out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, args, out)
    except ConfigError as exc:
        for key, constraint in exc.problems:
            logger.error("config %s: %s", key, constraint)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        logger.error("%s (blowup monitor %.6g)", exc, exc.report.blowup_monitor)
        return EXIT_NUMERICAL
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except KineticFluidError as exc:
        logger.error("numerical error: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
