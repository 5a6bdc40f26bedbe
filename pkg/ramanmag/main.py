"""
Command-line interface.

    ramanmag run <config.json> [--out DIR] [--workers N]
    ramanmag preset <figure2|figure3a|...|figure4b> [--out DIR] [--workers N]
    ramanmag verify <config.json> <baseline.csv> [--rtol X]
    ramanmag history [--limit N]

Exit codes: 0 success, 1 a task failed or verify found a mismatch,
2 configuration error.
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__, database
from .config import ExperimentConfig, parse_config
from .errors import ConfigError
from .sweeps.coordinator import run, verify
from .sweeps.presets import PRESET_NAMES, load_preset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TASK_FAILED = 1
EXIT_CONFIG_ERROR = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramanmag",
        description="Laser-threshold magnetometry sweeps: laser curves, threshold shifts and sensitivity.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=os.environ.get("RAMANMAG_LOG_LEVEL", "INFO"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper,
                        help="logging level (default: $RAMANMAG_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a sweep from a JSON config")
    p_run.add_argument("config", help="path to the experiment config")
    p_run.add_argument("--out", help="output directory (default: the config's output.directory)")
    p_run.add_argument("--workers", type=int, help="parallel workers (default: $RAMANMAG_WORKERS or CPU count)")

    p_preset = sub.add_parser("preset", help="run a built-in figure preset")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    p_preset.add_argument("--out", help="output directory (default: results/<name>)")
    p_preset.add_argument("--workers", type=int)

    p_verify = sub.add_parser("verify", help="re-run a config and compare with a baseline CSV")
    p_verify.add_argument("config", help="path to the experiment config, or a preset name")
    p_verify.add_argument("baseline", help="baseline CSV written by an earlier run")
    p_verify.add_argument("--rtol", type=float, default=1e-6, help="relative tolerance per cell (default 1e-6)")
    p_verify.add_argument("--workers", type=int)

    p_history = sub.add_parser("history", help="list recent runs from the run registry")
    p_history.add_argument("--limit", type=int, default=20)

    return parser


def load_config(source: str) -> ExperimentConfig:
    """Read a config file; a bare preset name loads that preset"""
    path = Path(source)
    if not path.exists() and source in PRESET_NAMES:
        return load_preset(source)
    try:
        text = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config {source}: {e}") from e
    return parse_config(text)


def _check_workers(workers: Optional[int]):
    if workers is not None and workers < 1:
        raise ConfigError(f"--workers must be at least 1, got {workers}")


def _report_run(report) -> int:
    print(f"wrote {report.csv_path}")
    print(f"wrote {report.summary_path}")
    print(f"wrote {report.manifest_path}")
    if report.failed:
        for task in report.failed:
            print(f"task {task['index']} failed: {task['error']}", file=sys.stderr)
        return EXIT_TASK_FAILED
    return EXIT_OK


def cmd_run(args) -> int:
    _check_workers(args.workers)
    config = load_config(args.config)
    return _report_run(run(config, out_dir=args.out, workers=args.workers))


def cmd_preset(args) -> int:
    _check_workers(args.workers)
    config = load_preset(args.name)
    out = args.out or str(Path(config.output.directory) / args.name)
    return _report_run(run(config, out_dir=out, workers=args.workers))


def cmd_verify(args) -> int:
    _check_workers(args.workers)
    if not args.rtol >= 0:
        raise ConfigError(f"--rtol must be non-negative, got {args.rtol}")
    config = load_config(args.config)
    report = verify(config, args.baseline, rtol=args.rtol, workers=args.workers)
    if report.passed:
        print(f"PASS: {report.comparison.message}")
        return EXIT_OK
    if not report.comparison.passed:
        print(f"FAIL: {report.comparison.message}")
    else:
        print(f"FAIL: {len(report.failed)} task(s) failed during the re-run")
    return EXIT_TASK_FAILED


def cmd_history(args) -> int:
    try:
        database.create_tables(database.engine)
        db = database.SessionLocal()
        try:
            runs = database.list_runs(db, limit=args.limit)
            for r in runs:
                started = r.started_at.isoformat(timespec="seconds") if r.started_at else "-"
                wall = f"{r.wall_time_seconds:.1f}s" if r.wall_time_seconds is not None else "-"
                print(f"{r.id:>5}  {started}  {r.name:<12} {r.kind:<16} {r.status:<10} "
                      f"{r.task_count - (r.failed_count or 0)}/{r.task_count} ok  {wall}  {r.config_hash[:12]}")
            if not runs:
                print("no runs recorded")
        finally:
            db.close()
    except Exception as e:
        logger.error(f"Run registry unavailable: {e}")
        return EXIT_TASK_FAILED
    return EXIT_OK


COMMANDS = {"run": cmd_run, "preset": cmd_preset, "verify": cmd_verify, "history": cmd_history}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
