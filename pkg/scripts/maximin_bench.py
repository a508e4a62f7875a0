"""Command-line runner for binary-maximin experiments."""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
from pathlib import Path
import sys
from typing import Sequence

from binary_maximin.bench import (
    EmptyTraceError,
    read_trace,
    run_experiment,
    trace_histogram,
    write_histogram,
)
from binary_maximin.config import ConfigError, Settings, load_experiment, load_settings
from binary_maximin.const import (
    DEFAULT_HISTOGRAM_BINS,
    ENV_LOG_LEVEL,
    ENV_OUTPUT_DIR,
    ENV_WORKERS,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RUNTIME_ERROR,
)
from binary_maximin.models import ExperimentConfig
from binary_maximin.telemetry import RunRecorder

_LOGGER = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maximin-bench",
        description="Run binary-weights regression experiments",
    )
    parser.add_argument(
        "--log-level",
        default=os.getenv(ENV_LOG_LEVEL, "INFO"),
        help=f"logging level (env {ENV_LOG_LEVEL})",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment file and write the results CSV")
    run.add_argument("config", type=Path)
    run.add_argument("--output", type=Path, default=None, help="results CSV path")
    run.add_argument(
        "--output-dir",
        type=Path,
        default=os.getenv(ENV_OUTPUT_DIR) or None,
        help=f"directory overriding the configured output location (env {ENV_OUTPUT_DIR})",
    )
    run.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"concurrent runs (env {ENV_WORKERS})",
    )

    check = commands.add_parser("check", help="validate an experiment file")
    check.add_argument("config", type=Path)

    histogram = commands.add_parser("histogram", help="turn a trace CSV into weight histograms")
    histogram.add_argument("trace", type=Path)
    histogram.add_argument("--bins", type=int, default=DEFAULT_HISTOGRAM_BINS)
    histogram.add_argument("--output", type=Path, default=None)
    return parser


def _settings(args: argparse.Namespace) -> Settings:
    settings = load_settings()
    output_dir = Path(args.output_dir) if args.output_dir else settings.output_dir
    workers = args.workers if args.workers and args.workers > 0 else settings.workers
    return Settings(output_dir=output_dir, workers=workers, log_level=settings.log_level)


def _describe(config: ExperimentConfig) -> str:
    source = "dataset" if config.dataset is not None else "generator"
    return (
        f"{config.name}: {len(config.methods)} methods x {len(config.sweep_values)} "
        f"{config.sweep} values x {config.repetitions} repetitions ({source})"
    )


async def _run(args: argparse.Namespace) -> int:
    config = load_experiment(args.config)
    planned = len(config.methods) * len(config.sweep_values) * config.repetitions
    recorder = RunRecorder(max_events=max(1, planned))
    result = await run_experiment(config, settings=_settings(args), output=args.output, recorder=recorder)
    failed = sum(1 for event in recorder.iter_recent() if event.error is not None)
    print(f"wrote {len(result.rows)} rows to {result.output_path} ({failed} failed runs)")
    for path in result.trace_paths:
        print(f"trace {path}")
    return EXIT_OK


def _histogram(args: argparse.Namespace) -> int:
    if args.bins < 1:
        print("error: --bins must be positive", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    histogram = trace_histogram(read_trace(args.trace), bins=args.bins)
    output = args.output or args.trace.with_name(f"{args.trace.stem}.histogram.csv")
    write_histogram(output, histogram)
    print(f"wrote {len(histogram)} histogram rows to {output}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    level = getattr(logging, str(args.log_level).upper(), None)
    logging.basicConfig(level=level if isinstance(level, int) else logging.INFO)
    try:
        if args.command == "check":
            print(f"ok {_describe(load_experiment(args.config))}")
            return EXIT_OK
        if args.command == "run":
            return asyncio.run(_run(args))
        return _histogram(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (EmptyTraceError, OSError, ValueError) as exc:
        _LOGGER.debug("command_failed command=%s", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":  # pragma: no cover - manual execution only
    raise SystemExit(main())
