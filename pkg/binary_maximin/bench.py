"""Benchmark sweeps: instances, method runs, metrics, result CSVs and weight traces."""

from __future__ import annotations

import asyncio
import csv
from dataclasses import dataclass
import logging
import math
from pathlib import Path
import re
import time
from typing import Any, Iterable, Sequence

import numpy as np

from . import baselines
from .config import Settings, load_settings
from .const import (
    DEFAULT_HISTOGRAM_BINS,
    HISTOGRAM_RANGE,
    RESULT_COLUMNS,
    ROW_TYPE_AGGREGATE,
    ROW_TYPE_RUN,
)
from .data import derive_seed, generate, load_table, split_and_corrupt
from .lagrangian import binarize
from .losses import LossModel
from .models import DatasetSpec, ExperimentConfig, GeneratorSpec, MethodSpec, MetricRow
from .optimizers import SolverDivergedError, TracePoint, solve
from .telemetry import RunRecorder

LOGGER = logging.getLogger(__name__)

__all__ = [
    "EmptyTraceError",
    "RunSpec",
    "RunOutcome",
    "ExperimentResult",
    "hamming_error",
    "nrmse",
    "plan_runs",
    "execute_run",
    "assemble_rows",
    "run_experiment",
    "resolve_output",
    "write_results",
    "read_results",
    "write_trace",
    "read_trace",
    "trace_histogram",
    "write_histogram",
]

_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


class EmptyTraceError(ValueError):
    """Raised when a histogram is requested for a trace without iterations."""


@dataclass(frozen=True)
class RunSpec:
    """One (method, sweep point, repetition) cell; ``seed`` is shared by every method."""

    method_index: int
    method: MethodSpec
    sweep_index: int
    sweep_value: float
    repetition: int
    seed: int


@dataclass(frozen=True, eq=False)
class RunOutcome:
    run: RunSpec
    row: MetricRow
    trace: tuple[TracePoint, ...] | None = None


@dataclass(frozen=True)
class ExperimentResult:
    rows: list[MetricRow]
    output_path: Path
    trace_paths: list[Path]


@dataclass(frozen=True, eq=False)
class _Instance:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    w_star: np.ndarray | None


@dataclass(frozen=True, eq=False)
class _Fit:
    w_binary: np.ndarray | None
    converged: bool
    iterations: int | None
    trace: tuple[TracePoint, ...] | None = None
    error: str | None = None


def hamming_error(w_star: np.ndarray, w_hat: np.ndarray) -> float:
    """``||w* - w_hat||_1 / (2 n)``: the fraction of sign disagreements."""

    w_star = np.asarray(w_star, dtype=float)
    w_hat = np.asarray(w_hat, dtype=float)
    if w_star.shape != w_hat.shape or w_star.ndim != 1:
        raise ValueError("weight vectors must have the same length")
    return float(np.sum(np.abs(w_star - w_hat))) / (2.0 * w_star.shape[0])


def nrmse(u: np.ndarray, u_hat: np.ndarray) -> float:
    """``||u - u_hat||_2 / ||u||_2``."""

    u = np.asarray(u, dtype=float)
    error = float(np.linalg.norm(u - np.asarray(u_hat, dtype=float)))
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        return 0.0 if error == 0.0 else math.inf
    return error / norm


def plan_runs(config: ExperimentConfig) -> list[RunSpec]:
    """All runs in output order: method, then sweep value, then repetition."""

    return [
        RunSpec(
            method_index=method_index,
            method=method,
            sweep_index=sweep_index,
            sweep_value=value,
            repetition=repetition,
            seed=derive_seed(config.seed, sweep_index, repetition),
        )
        for method_index, method in enumerate(config.methods)
        for sweep_index, value in enumerate(config.sweep_values)
        for repetition in range(config.repetitions)
    ]


def _synthetic_instance(config: ExperimentConfig, value: float, seed: int) -> _Instance:
    assert config.generator is not None
    base = config.generator.model_dump()
    spec = GeneratorSpec.model_validate({**base, config.sweep: value, "seed": seed})
    X, truth, y = generate(spec)
    test_spec = spec.model_copy(update={"seed": derive_seed(seed, 2)})
    X_test, _, y_test = generate(test_spec, w_star=truth.w_star)
    return _Instance(X, y, X_test, y_test, truth.w_star)


def _dataset_instance(
    dataset: DatasetSpec,
    table: tuple[np.ndarray, np.ndarray],
    value: float,
    seed: int,
) -> _Instance:
    X, y = table
    split = split_and_corrupt(
        X,
        y,
        train_fraction=dataset.train_fraction,
        outlier_fraction=value,
        magnitude=dataset.outlier_magnitude,
        seed=seed,
        standardize_data=dataset.normalize,
    )
    X_train, X_test = split.X_train, split.X_test
    if dataset.add_bias:
        X_train = np.hstack([X_train, np.ones((X_train.shape[0], 1))])
        X_test = np.hstack([X_test, np.ones((X_test.shape[0], 1))])
    return _Instance(X_train, split.y_train, X_test, split.y_test, None)


def _fit(method: MethodSpec, model: LossModel, *, seed: int, trace_every: int) -> _Fit:
    match method.kind:
        case "maximin":
            config = method.solver.model_copy(
                update={"seed": seed, "trace_every": trace_every or method.solver.trace_every}
            )
            try:
                result = solve(model, config)
            except SolverDivergedError as exc:
                return _Fit(binarize(exc.w), False, exc.iteration, error=str(exc))
            return _Fit(result.w_binary, result.converged, result.iters, result.trace)
        case "lr":
            outcome = baselines.lr_round(model)
        case "lpr":
            outcome = baselines.lpr(model)
        case "ste":
            outcome = baselines.ste(model, steps=method.steps, step_size=method.step_size, seed=seed)
        case "sdr":
            outcome = baselines.sdr(model, rank=method.rank, restarts=method.restarts, seed=seed)
        case _:
            raise ValueError(f"unknown method kind {method.kind!r}")
    return _Fit(outcome.w_binary, outcome.converged, outcome.iters)


def execute_run(
    config: ExperimentConfig,
    run: RunSpec,
    table: tuple[np.ndarray, np.ndarray] | None = None,
) -> RunOutcome:
    """Build the instance for ``run``, fit its method and score it. Never raises for run failures."""

    method = run.method
    started = time.perf_counter()
    fields: dict[str, Any] = {
        "row_type": ROW_TYPE_RUN,
        "method": method.label,
        "loss": method.loss.value,
        "sweep": config.sweep,
        "sweep_value": run.sweep_value,
        "repetition": run.repetition,
        "seed": run.seed,
    }
    trace = None
    try:
        if config.dataset is not None:
            assert table is not None
            instance = _dataset_instance(config.dataset, table, run.sweep_value, run.seed)
        else:
            instance = _synthetic_instance(config, run.sweep_value, run.seed)
        model = LossModel(kind=method.loss, X=instance.X_train, y=instance.y_train, delta=method.delta)
        fit = _fit(method, model, seed=derive_seed(run.seed, 1), trace_every=config.trace_every)
        trace = fit.trace
        fields.update(converged=fit.converged, iterations=fit.iterations, error=fit.error)
        if fit.w_binary is not None:
            if instance.w_star is not None:
                fields["hamming_error"] = hamming_error(instance.w_star, fit.w_binary)
            fields["nrmse"] = nrmse(instance.y_test, instance.X_test @ fit.w_binary)
    except Exception as exc:  # noqa: BLE001 - a failed run becomes a row
        LOGGER.warning(
            "run_failed method=%s sweep_value=%s repetition=%d error=%s",
            method.label,
            run.sweep_value,
            run.repetition,
            exc,
        )
        fields.update(converged=False, error=f"{type(exc).__name__}: {exc}")
    fields["wall_time"] = time.perf_counter() - started
    return RunOutcome(run=run, row=MetricRow.model_validate(fields), trace=trace)


def _mean_std(values: Iterable[float | None]) -> tuple[float | None, float | None]:
    present = [value for value in values if value is not None]
    if not present:
        return None, None
    array = np.asarray(present, dtype=float)
    return float(np.mean(array)), float(np.std(array))


def _aggregate(rows: Sequence[MetricRow]) -> MetricRow:
    first = rows[0]
    hamming, hamming_std = _mean_std(row.hamming_error for row in rows)
    error, error_std = _mean_std(row.nrmse for row in rows)
    failed = sum(1 for row in rows if row.error is not None)
    return MetricRow(
        row_type=ROW_TYPE_AGGREGATE,
        method=first.method,
        loss=first.loss,
        sweep=first.sweep,
        sweep_value=first.sweep_value,
        hamming_error=hamming,
        hamming_error_std=hamming_std,
        nrmse=error,
        nrmse_std=error_std,
        converged=all(row.converged for row in rows),
        error=f"{failed}/{len(rows)} runs failed" if failed else None,
        wall_time=sum(row.wall_time for row in rows),
    )


def assemble_rows(outcomes: Sequence[RunOutcome]) -> list[MetricRow]:
    """Run rows in plan order, each ``(method, sweep_value)`` group followed by its aggregate."""

    rows: list[MetricRow] = []
    group: list[MetricRow] = []
    key: tuple[int, int] | None = None
    for outcome in outcomes:
        current = (outcome.run.method_index, outcome.run.sweep_index)
        if key is not None and current != key:
            rows.extend([*group, _aggregate(group)])
            group = []
        key = current
        group.append(outcome.row)
    if group:
        rows.extend([*group, _aggregate(group)])
    return rows


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(path: str | Path, rows: Sequence[MetricRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            payload = row.model_dump()
            writer.writerow([_format_cell(payload[column]) for column in RESULT_COLUMNS])
    return path


def read_results(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def write_trace(path: str | Path, trace: Sequence[TracePoint]) -> Path:
    """Write ``iter, lagrangian, gamma, w_0.., z_0..`` rows for a solver trace."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = trace[0].w.shape[0] if trace else 0
    header = ["iter", "lagrangian", "gamma", *(f"w_{i}" for i in range(n)), *(f"z_{i}" for i in range(n))]
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for point in trace:
            writer.writerow(
                [
                    point.iteration,
                    repr(float(point.lagrangian)),
                    repr(float(point.gamma)),
                    *(repr(float(v)) for v in point.w),
                    *(repr(float(v)) for v in point.z),
                ]
            )
    return path


def read_trace(path: str | Path) -> tuple[TracePoint, ...]:
    """Parse a trace CSV written by :func:`write_trace`."""

    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[:3] != ["iter", "lagrangian", "gamma"] or (len(header) - 3) % 2:
            raise ValueError(f"{path}: not a trace file")
        n = (len(header) - 3) // 2
        points = []
        for line_number, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise ValueError(f"{path}: line {line_number} has {len(cells)} cells, expected {len(header)}")
            values = np.array(cells[1:], dtype=float)
            points.append(
                TracePoint(
                    iteration=int(cells[0]),
                    w=values[2 : 2 + n],
                    z=values[2 + n :],
                    lagrangian=float(values[0]),
                    gamma=float(values[1]),
                )
            )
    return tuple(points)


def trace_histogram(
    trace: Sequence[TracePoint] | None,
    bins: int = DEFAULT_HISTOGRAM_BINS,
    value_range: tuple[float, float] = HISTOGRAM_RANGE,
) -> list[tuple[int, np.ndarray]]:
    """Per traced iteration, counts of weights in ``bins`` equal bins over ``value_range``.

    Weights outside the range are counted in the edge bins, so every row sums to ``n``.
    """

    if not trace:
        raise EmptyTraceError("trace has no iterations")
    low, high = value_range
    return [
        (
            point.iteration,
            np.histogram(np.clip(point.w, low, high), bins=bins, range=(low, high))[0],
        )
        for point in trace
    ]


def write_histogram(path: str | Path, histogram: Sequence[tuple[int, np.ndarray]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    bins = len(histogram[0][1]) if histogram else 0
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["iter", *(f"bin_{i}" for i in range(bins))])
        for iteration, counts in histogram:
            writer.writerow([iteration, *(int(count) for count in counts)])
    return path


def resolve_output(config: ExperimentConfig, settings: Settings, output: str | Path | None = None) -> Path:
    """Explicit ``output`` wins; otherwise the configured file, moved into the override directory."""

    if output is not None:
        return Path(output)
    configured = Path(config.output)
    if settings.output_dir is not None:
        return settings.output_dir / configured.name
    return configured


def _trace_path(output: Path, run: RunSpec) -> Path:
    label = _UNSAFE.sub("_", run.method.label)
    return output.parent / f"{output.stem}.traces" / f"{label}-v{run.sweep_index}-r{run.repetition}.csv"


async def run_experiment(
    config: ExperimentConfig,
    *,
    settings: Settings | None = None,
    output: str | Path | None = None,
    recorder: RunRecorder | None = None,
) -> ExperimentResult:
    """Run every planned cell concurrently and write the results (and traces) in plan order."""

    settings = settings or load_settings()
    output_path = resolve_output(config, settings, output)
    workers = config.workers or settings.workers
    table = None
    if config.dataset is not None:
        table = load_table(config.dataset.path, config.dataset.target, header=config.dataset.header)
    runs = plan_runs(config)
    LOGGER.info(
        "experiment_start name=%s runs=%d workers=%d output=%s",
        config.name,
        len(runs),
        workers,
        output_path,
    )

    semaphore = asyncio.Semaphore(workers)

    async def _bounded(run: RunSpec) -> RunOutcome:
        async with semaphore:
            return await asyncio.to_thread(execute_run, config, run, table)

    outcomes = await asyncio.gather(*(_bounded(run) for run in runs))
    if recorder is not None:
        for outcome in outcomes:
            recorder.record(outcome.row)

    rows = assemble_rows(outcomes)
    write_results(output_path, rows)
    trace_paths = [
        write_trace(_trace_path(output_path, outcome.run), outcome.trace)
        for outcome in outcomes
        if outcome.trace
    ]
    LOGGER.info(
        "experiment_complete name=%s rows=%d traces=%d output=%s",
        config.name,
        len(rows),
        len(trace_paths),
        output_path,
    )
    return ExperimentResult(rows=rows, output_path=output_path, trace_paths=trace_paths)
