"""Shared data models for binary-maximin solvers, checks, and experiments."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
import math
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .const import (
    DEFAULT_ADAM_EPS,
    DEFAULT_BETAS,
    DEFAULT_BINARIZE_TOL,
    DEFAULT_DIVERGENCE_CAP,
    DEFAULT_ETA,
    DEFAULT_GAMMA0,
    DEFAULT_GAMMA_GROWTH,
    DEFAULT_GRAD_TOL,
    DEFAULT_HISTOGRAM_BINS,
    DEFAULT_MAX_ITERS,
    DEFAULT_METHOD,
    DEFAULT_OUTLIER_MAGNITUDE,
    DEFAULT_TRAIN_FRACTION,
    GAMMA_STABILITY_MARGIN,
    ROW_TYPE_RUN,
    SDR_DEFAULT_RESTARTS,
    STE_DEFAULT_STEP,
    STE_DEFAULT_STEPS,
)

__all__ = [
    "LossKind",
    "SolveMethod",
    "SolveConfig",
    "GroundTruth",
    "ConditionReport",
    "ProbeReport",
    "MaximinCheck",
    "RateReport",
    "GeneratorSpec",
    "DatasetSpec",
    "MethodSpec",
    "ExperimentConfig",
    "MetricRow",
]

_SEED_LIMIT = 2**64


class LossKind(StrEnum):
    """Convex objectives supported by :class:`~binary_maximin.losses.LossModel`."""

    SQUARED = "squared"
    HUBER = "huber"
    L1 = "l1"
    CROSS_ENTROPY = "cross-entropy"


class SolveMethod(StrEnum):
    """First-order saddle-point iterations."""

    GDA = "gda"
    GDA_ALTERNATING = "gda-alternating"
    OGDA = "ogda"
    EXTRAGRADIENT = "extragradient"


class SolveConfig(BaseModel):
    """Settings for :func:`binary_maximin.optimizers.solve`.

    Step sizes are expressed in curvature-normalized units: the primal step is ``eta`` and the
    dual step is ``eta * gamma`` (``eta / gamma`` for the ``dual-slow`` timescale).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    method: SolveMethod = SolveMethod(DEFAULT_METHOD)
    eta: float = Field(default=DEFAULT_ETA, gt=0.0)
    gamma0: float = Field(default=DEFAULT_GAMMA0, ge=1.0)
    gamma_growth: float = Field(default=DEFAULT_GAMMA_GROWTH, ge=1.0)
    gamma_max: float | None = Field(default=None, gt=0.0)
    timescale: Literal["dual-fast", "dual-slow"] = "dual-fast"
    adaptive: bool = False
    beta1: float = Field(default=DEFAULT_BETAS[0], ge=0.0, lt=1.0)
    beta2: float = Field(default=DEFAULT_BETAS[1], ge=0.0, lt=1.0)
    adam_eps: float = Field(default=DEFAULT_ADAM_EPS, gt=0.0)
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, gt=0)
    binarize_tol: float = Field(default=DEFAULT_BINARIZE_TOL, gt=0.0)
    grad_tol: float = Field(default=DEFAULT_GRAD_TOL, gt=0.0)
    divergence_cap: float = Field(default=DEFAULT_DIVERGENCE_CAP, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=_SEED_LIMIT)
    trace_every: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_step_product(self) -> SolveConfig:
        if not math.isfinite(self.eta * self.gamma0):
            raise ValueError("eta * gamma0 must be finite")
        return self

    @property
    def gamma_ceiling(self) -> float:
        """Upper limit applied to the growing ratio under the dual-fast timescale."""

        if self.gamma_max is not None:
            return self.gamma_max
        return max(self.gamma0, GAMMA_STABILITY_MARGIN[self.method.value] / self.eta**2)


@dataclass(frozen=True, slots=True, eq=False)
class GroundTruth:
    """The planted binary weights and noise behind a synthetic instance."""

    w_star: np.ndarray
    e: np.ndarray
    sigma: float = 0.0
    outlier_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        w_star = np.asarray(self.w_star, dtype=float)
        e = np.asarray(self.e, dtype=float)
        if w_star.ndim != 1 or not np.all(np.abs(w_star) == 1.0):
            raise ValueError("w_star must be a vector of +1/-1 entries")
        if e.ndim != 1:
            raise ValueError("noise must be a vector")
        object.__setattr__(self, "w_star", w_star)
        object.__setattr__(self, "e", e)
        if self.outlier_mask is not None:
            mask = np.asarray(self.outlier_mask, dtype=bool)
            if mask.shape != e.shape:
                raise ValueError("outlier_mask must match the noise length")
            object.__setattr__(self, "outlier_mask", mask)

    @property
    def outlier_fraction(self) -> float:
        if self.outlier_mask is None:
            return 0.0
        return float(np.mean(self.outlier_mask))


class ConditionReport(BaseModel):
    """Outcome of a global-optimality condition check: ``holds`` iff ``lhs < rhs`` (and any extra screens)."""

    model_config = ConfigDict(extra="forbid")

    holds: bool
    lhs: float
    rhs: float
    margin: float
    detail: dict[str, Any] = Field(default_factory=dict)


class ProbeReport(BaseModel):
    """Sampled verification of the (strong) sub-quadratic inequality."""

    model_config = ConfigDict(extra="forbid")

    trials: int
    violations: int
    strong_violations: int
    worst_margin: float
    max_strong_residual: float
    swaps: int = 0


class MaximinCheck(BaseModel):
    """Second-order sufficient conditions for a local maximin point."""

    model_config = ConfigDict(extra="forbid")

    holds: bool
    grad_w_norm: float
    grad_z_norm: float
    hess_w_min_eig: float
    min_abs_w: float


class RateReport(BaseModel):
    """Monte-Carlo pass rate of a condition checker against its closed-form bound."""

    model_config = ConfigDict(extra="forbid")

    regime: Literal["gaussian", "sparse-outliers"]
    m: int
    n: int
    trials: int
    passes: int
    frequency: float
    bound: float
    meets_bound: bool


class GeneratorSpec(BaseModel):
    """Synthetic binary-regression generator ``y = X w* + e``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    m: int = Field(gt=0)
    n: int = Field(gt=0)
    x_scale: Literal["unit", "inv-n"] = "unit"
    noise: Literal["gaussian", "laplace", "sparse-outliers"] = "gaussian"
    sigma: float = Field(default=0.0, ge=0.0)
    outlier_fraction: float = Field(default=0.0, ge=0.0, lt=0.5)
    magnitude: float = Field(default=DEFAULT_OUTLIER_MAGNITUDE, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=_SEED_LIMIT)


class DatasetSpec(BaseModel):
    """A delimited numeric table used for the tabular regression pipeline."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    path: str
    target: str | int = -1
    header: bool = False
    normalize: bool = True
    add_bias: bool = True
    train_fraction: float = Field(default=DEFAULT_TRAIN_FRACTION, gt=0.0, lt=1.0)
    outlier_magnitude: float | None = Field(default=None, gt=0.0)


class MethodSpec(BaseModel):
    """One compared method: a maximin solve or a baseline, with its loss."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    label: str = Field(min_length=1)
    kind: Literal["maximin", "lr", "lpr", "ste", "sdr"] = "maximin"
    loss: LossKind = LossKind.SQUARED
    delta: float = Field(default=1.0, gt=0.0)
    steps: int = Field(default=STE_DEFAULT_STEPS, gt=0)
    step_size: float = Field(default=STE_DEFAULT_STEP, gt=0.0)
    rank: int | None = Field(default=None, gt=0)
    restarts: int = Field(default=SDR_DEFAULT_RESTARTS, gt=0)
    solver: SolveConfig = Field(default_factory=SolveConfig)

    @model_validator(mode="after")
    def _check_sdr_loss(self) -> MethodSpec:
        if self.kind == "sdr" and self.loss != LossKind.SQUARED:
            raise ValueError("sdr only supports the squared loss")
        return self


class ExperimentConfig(BaseModel):
    """A sweep of methods over noise levels (or outlier fractions) and repetitions."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "experiment"
    output: str = "results.csv"
    repetitions: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=_SEED_LIMIT)
    sweep: Literal["sigma", "outlier_fraction"] = "sigma"
    sweep_values: list[float] = Field(min_length=1)
    trace_every: int = Field(default=0, ge=0)
    histogram_bins: int = Field(default=DEFAULT_HISTOGRAM_BINS, gt=0)
    workers: int | None = Field(default=None, gt=0)
    generator: GeneratorSpec | None = None
    dataset: DatasetSpec | None = None
    methods: list[MethodSpec] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_source(self) -> ExperimentConfig:
        if (self.generator is None) == (self.dataset is None):
            raise ValueError("exactly one of generator or dataset must be configured")
        if self.dataset is not None and self.sweep != "outlier_fraction":
            raise ValueError("dataset experiments sweep outlier_fraction")
        if self.sweep == "outlier_fraction" and any(not 0.0 <= v < 1.0 for v in self.sweep_values):
            raise ValueError("outlier fractions must lie in [0, 1)")
        if (
            self.generator is not None
            and self.sweep == "outlier_fraction"
            and any(v >= 0.5 for v in self.sweep_values)
        ):
            raise ValueError("generated outlier fractions must lie below 0.5")
        if self.sweep == "sigma" and any(v < 0.0 for v in self.sweep_values):
            raise ValueError("noise levels must be non-negative")
        labels = [method.label for method in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError("method labels must be unique")
        return self


class MetricRow(BaseModel):
    """One result row: a single run or the aggregate of a ``(method, sweep_value)`` group."""

    model_config = ConfigDict(extra="forbid")

    row_type: str = ROW_TYPE_RUN
    method: str
    loss: str
    sweep: str
    sweep_value: float
    repetition: int | None = None
    seed: int | None = None
    hamming_error: float | None = Field(default=None, ge=0.0, le=1.0)
    hamming_error_std: float | None = None
    nrmse: float | None = Field(default=None, ge=0.0)
    nrmse_std: float | None = None
    converged: bool = False
    iterations: int | None = None
    error: str | None = None
    wall_time: float = 0.0
