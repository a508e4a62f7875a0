"""Synthetic instance generators and the delimited-table regression pipeline."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from pathlib import Path
import re
from typing import Sequence

import numpy as np

from .const import DEFAULT_OUTLIER_STD_MULTIPLE, DEFAULT_TRAIN_FRACTION
from .models import GeneratorSpec, GroundTruth

LOGGER = logging.getLogger(__name__)

__all__ = [
    "TableParseError",
    "Split",
    "derive_seed",
    "generate",
    "read_table",
    "load_table",
    "write_table",
    "standardize",
    "split_and_corrupt",
]

_WHITESPACE = re.compile(r"\s+")


class TableParseError(ValueError):
    """Raised when a table cell cannot be parsed; ``row`` and ``column`` are 1-based."""

    def __init__(self, message: str, *, row: int, column: int) -> None:
        super().__init__(f"row {row}, column {column}: {message}")
        self.row = row
        self.column = column


@dataclass(frozen=True, eq=False)
class Split:
    """Train/test partition with the original row indices of every part."""

    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray
    corrupted_index: np.ndarray
    y_train_clean: np.ndarray


def derive_seed(base: int, *keys: int) -> int:
    """A 64-bit seed derived from ``base`` and a path of non-negative integer keys."""

    sequence = np.random.SeedSequence(entropy=base, spawn_key=tuple(int(key) for key in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _outlier_count(fraction: float, size: int) -> int:
    return int(math.floor(fraction * size + 1e-9))


def generate(
    spec: GeneratorSpec,
    w_star: np.ndarray | None = None,
) -> tuple[np.ndarray, GroundTruth, np.ndarray]:
    """Draw ``(X, truth, y)`` with ``y = X @ w_star + e``.

    Passing ``w_star`` replaces the drawn weights (the random stream is consumed identically), so
    a second design can share the truth of a first one.
    """

    rng = np.random.default_rng(spec.seed)
    drawn = rng.choice(np.array([-1.0, 1.0]), size=spec.n)
    if w_star is None:
        w_star = drawn
    else:
        w_star = np.asarray(w_star, dtype=float)
        if w_star.shape != (spec.n,):
            raise ValueError(f"w_star must have length {spec.n}")

    X = rng.standard_normal((spec.m, spec.n))
    if spec.x_scale == "inv-n":
        X /= math.sqrt(spec.n)

    outlier_mask = None
    if spec.noise == "laplace":
        e = rng.laplace(0.0, spec.sigma, spec.m) if spec.sigma > 0.0 else np.zeros(spec.m)
    else:
        e = spec.sigma * rng.standard_normal(spec.m)
    if spec.noise == "sparse-outliers":
        count = _outlier_count(spec.outlier_fraction, spec.m)
        index = rng.choice(spec.m, size=count, replace=False)
        signs = rng.choice(np.array([-1.0, 1.0]), size=count)
        e[index] = signs * spec.magnitude
        outlier_mask = np.zeros(spec.m, dtype=bool)
        outlier_mask[index] = True

    truth = GroundTruth(w_star=w_star, e=e, sigma=spec.sigma, outlier_mask=outlier_mask)
    return X, truth, X @ truth.w_star + e


def _split_line(line: str) -> list[str]:
    if "," in line:
        return [cell.strip() for cell in line.split(",")]
    return _WHITESPACE.split(line.strip())


def read_table(path: str | Path, *, header: bool = False) -> tuple[np.ndarray, list[str] | None]:
    """Parse a comma- or whitespace-delimited numeric table.

    Blank lines and lines starting with ``#`` are skipped. Errors report 1-based file lines.
    """

    names: list[str] | None = None
    rows: list[list[float]] = []
    width: int | None = None
    text = Path(path).read_text(encoding="utf-8")
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = _split_line(line)
        if header and names is None:
            names = cells
            width = len(cells)
            continue
        if width is None:
            width = len(cells)
        if len(cells) != width:
            raise TableParseError(
                f"expected {width} cells, found {len(cells)}",
                row=line_number,
                column=min(len(cells), width) + 1,
            )
        values = []
        for column, cell in enumerate(cells, start=1):
            try:
                number = float(cell)
            except ValueError:
                raise TableParseError(f"non-numeric cell {cell!r}", row=line_number, column=column) from None
            if not math.isfinite(number):
                raise TableParseError(f"non-finite cell {cell!r}", row=line_number, column=column)
            values.append(number)
        rows.append(values)
    if not rows:
        raise TableParseError("table has no data rows", row=0, column=0)
    return np.array(rows, dtype=float), names


def _target_index(target: str | int, names: list[str] | None, width: int) -> int:
    if isinstance(target, str):
        if names is not None and target in names:
            return names.index(target)
        try:
            target = int(target)
        except ValueError:
            raise ValueError(f"unknown target column {target!r}") from None
    if not -width <= target < width:
        raise ValueError(f"target column {target} out of range for {width} columns")
    return target % width


def load_table(
    path: str | Path,
    target: str | int = -1,
    *,
    normalize: bool = False,
    header: bool = False,
    add_bias: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Load ``(X, y)`` from a table; ``target`` is a column index or header name.

    ``normalize`` standardizes the feature columns with this table's statistics; a bias column of
    ones is appended after normalization.
    """

    table, names = read_table(path, header=header)
    if table.shape[1] < 2:
        raise ValueError("a table needs at least one feature column and a target column")
    index = _target_index(target, names, table.shape[1])
    y = table[:, index].copy()
    X = np.delete(table, index, axis=1)
    if normalize:
        (X,) = standardize(X)
    if add_bias:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    LOGGER.debug("table_loaded path=%s rows=%d features=%d", path, X.shape[0], X.shape[1])
    return X, y


def write_table(
    path: str | Path,
    X: np.ndarray,
    y: np.ndarray,
    *,
    header: Sequence[str] | None = None,
) -> None:
    """Write ``X`` with ``y`` as the last column using shortest round-trip float formatting."""

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for features, target in zip(X, y):
        lines.append(",".join(repr(float(value)) for value in (*features, target)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def standardize(train: np.ndarray, *others: np.ndarray) -> tuple[np.ndarray, ...]:
    """Scale columns to mean 0 and variance 1 using statistics of ``train`` only.

    Works on matrices and on target vectors. Constant columns are centered only.
    """

    train = np.asarray(train, dtype=float)
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return tuple((np.asarray(part, dtype=float) - mean) / std for part in (train, *others))


def split_and_corrupt(
    X: np.ndarray,
    y: np.ndarray,
    *,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    outlier_fraction: float = 0.0,
    magnitude: float | None = None,
    seed: int = 0,
    standardize_data: bool = False,
) -> Split:
    """Shuffle-split into train/test and add outliers to train targets only.

    ``round(train_fraction * m)`` rows go to train; ``floor(outlier_fraction * m_train)`` of them
    receive ``+/- magnitude`` (default: ten times the train target standard deviation). With
    ``standardize_data`` the features and targets are standardized on the clean train split before
    corruption.
    """

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    if not 0.0 <= outlier_fraction < 1.0:
        raise ValueError("outlier_fraction must lie in [0, 1)")
    m = X.shape[0]
    if m < 2 or y.shape != (m,):
        raise ValueError("need at least two rows and one target per row")

    rng = np.random.default_rng(seed)
    order = rng.permutation(m)
    m_train = min(max(int(round(train_fraction * m)), 1), m - 1)
    train_index, test_index = order[:m_train], order[m_train:]
    X_train, X_test = X[train_index], X[test_index]
    y_train, y_test = y[train_index], y[test_index]
    if standardize_data:
        X_train, X_test = standardize(X_train, X_test)
        y_train, y_test = standardize(y_train, y_test)
    y_clean = y_train.copy()

    count = _outlier_count(outlier_fraction, m_train)
    positions = np.sort(rng.choice(m_train, size=count, replace=False))
    if magnitude is None:
        spread = float(np.std(y_clean))
        magnitude = DEFAULT_OUTLIER_STD_MULTIPLE * (spread if spread > 0.0 else 1.0)
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    y_train = y_clean.copy()
    y_train[positions] += signs * magnitude
    return Split(
        X_train=X_train,
        y_train=y_train,
        X_test=X_test,
        y_test=y_test,
        train_index=train_index,
        test_index=test_index,
        corrupted_index=np.sort(train_index[positions]),
        y_train_clean=y_clean,
    )
