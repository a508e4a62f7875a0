"""Executable optimality conditions, sub-quadratic probes and exact oracles."""

from __future__ import annotations

from collections.abc import Callable
import logging
import math
from typing import Literal, NamedTuple

import numpy as np
from scipy import linalg

from . import losses
from .const import (
    ENUMERATION_CHUNK,
    EIGENVALUE_FLOOR,
    MAX_ENUMERATION_N,
    MAXIMIN_TOL,
    PROBE_MAX_RESAMPLES,
    PROBE_REL_TOL,
)
from .data import derive_seed, generate
from .lagrangian import (
    DualPair,
    NotSignVectorError,
    cross_hess,
    grad_w,
    grad_z,
    hess_w,
    is_sign_vector,
)
from .losses import DimensionError, LossModel
from .models import (
    ConditionReport,
    GeneratorSpec,
    GroundTruth,
    MaximinCheck,
    ProbeReport,
    RateReport,
)
from .optimizers import inner_min

LOGGER = logging.getLogger(__name__)

__all__ = [
    "SamplerExhaustedError",
    "EnumerationTooLargeError",
    "DualityGap",
    "BruteForceResult",
    "PairSampler",
    "min_eigenvalue",
    "check_general",
    "check_linear",
    "check_huber",
    "sign_pair_sampler",
    "gaussian_pair_sampler",
    "subquadratic_probe",
    "verify_local_maximin",
    "duality_gap",
    "brute_force_min",
    "probability_bound",
    "empirical_condition_rate",
]

PairSampler = Callable[[], tuple[np.ndarray, np.ndarray]]


class SamplerExhaustedError(RuntimeError):
    """Raised when a pair sampler keeps producing pairs with equal objective values."""


class EnumerationTooLargeError(ValueError):
    """Raised when exhaustive enumeration is requested for too many weights."""


class DualityGap(NamedTuple):
    p_hat: float
    d_hat: float
    gap: float


class BruteForceResult(NamedTuple):
    w_opt: np.ndarray
    p_star: float


def min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix, with values inside the relative floor set to 0."""

    eigenvalues = linalg.eigh(matrix, eigvals_only=True)
    floor = EIGENVALUE_FLOOR * max(1.0, abs(float(eigenvalues[-1])))
    smallest = float(eigenvalues[0])
    return 0.0 if abs(smallest) <= floor else smallest


def _report(lhs: float, rhs: float, *, extra_ok: bool = True, **detail: object) -> ConditionReport:
    return ConditionReport(
        holds=bool(lhs < rhs and extra_ok),
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        detail=dict(detail),
    )


def _require_sign_vector(w: np.ndarray) -> np.ndarray:
    if not is_sign_vector(w):
        raise NotSignVectorError("expected a +1/-1 vector")
    return np.asarray(w, dtype=float)


def _check_truth(X: np.ndarray, truth: GroundTruth) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape != (truth.e.shape[0], truth.w_star.shape[0]):
        raise DimensionError(f"design of shape {X.shape} does not match the ground truth")
    return X


def check_general(model: LossModel, w_star: np.ndarray) -> ConditionReport:
    """``||grad f(w*)||_inf < lambda_min(hess f(w*))``."""

    w_star = _require_sign_vector(w_star)
    g = np.abs(losses.gradient(model, w_star))
    return _report(
        float(np.max(g)),
        min_eigenvalue(losses.hessian(model, w_star)),
        tightest_index=int(np.argmax(g)),
    )


def check_linear(X: np.ndarray, truth: GroundTruth) -> ConditionReport:
    """``||X^T e||_inf < lambda_min(X^T X)`` for ``y = X w* + e``."""

    X = _check_truth(X, truth)
    g = np.abs(X.T @ truth.e)
    return _report(float(np.max(g)), min_eigenvalue(X.T @ X), tightest_index=int(np.argmax(g)))


def check_huber(X: np.ndarray, truth: GroundTruth, delta: float) -> ConditionReport:
    """Robust-regression condition: ``||X^T c||_inf < lambda_min(sum_i d_i x_i x_i^T)``.

    ``c_i`` is ``e_i`` inside ``[-delta, delta]`` and ``sign(e_i)`` outside; ``d_i`` marks the
    inliers. Additionally no residual may fall in ``(delta, delta + 2 ||x_i||)``. The
    ``delta * sign(e_i)`` variant of ``c`` is reported under ``scaled_lhs``.
    """

    if not delta > 0.0:
        raise ValueError("delta must be positive")
    X = _check_truth(X, truth)
    e = truth.e
    inlier = np.abs(e) <= delta
    c = np.where(inlier, e, np.sign(e))
    c_scaled = np.where(inlier, e, delta * np.sign(e))
    gram = X.T @ (inlier.astype(float)[:, None] * X)
    row_norms = np.linalg.norm(X, axis=1)
    gap_band = (np.abs(e) > delta) & (np.abs(e) < delta + 2.0 * row_norms)
    violators = [int(i) for i in np.flatnonzero(gap_band)]
    g = np.abs(X.T @ c)
    rhs = min_eigenvalue(gram)
    scaled_lhs = float(np.max(np.abs(X.T @ c_scaled)))
    return _report(
        float(np.max(g)),
        rhs,
        extra_ok=not violators,
        tightest_index=int(np.argmax(g)),
        violators=violators,
        inliers=int(np.sum(inlier)),
        scaled_lhs=scaled_lhs,
        scaled_holds=bool(scaled_lhs < rhs and not violators),
    )


def sign_pair_sampler(reference: np.ndarray, rng: np.random.Generator) -> PairSampler:
    """Pairs ``(reference, s)`` with ``s`` uniform over sign vectors."""

    reference = np.asarray(reference, dtype=float)

    def sample() -> tuple[np.ndarray, np.ndarray]:
        return reference, rng.choice(np.array([-1.0, 1.0]), size=reference.shape[0])

    return sample


def gaussian_pair_sampler(n: int, rng: np.random.Generator, scale: float = 1.0) -> PairSampler:
    def sample() -> tuple[np.ndarray, np.ndarray]:
        return scale * rng.standard_normal(n), scale * rng.standard_normal(n)

    return sample


def subquadratic_probe(model: LossModel, pair_sampler: PairSampler, trials: int) -> ProbeReport:
    """Sample pairs with ``f(w1) < f(w2)`` and test the second-order model at ``w2``.

    With ``q = (w1 - w2)^T grad f(w2) + 0.5 (w1 - w2)^T hess f(w2) (w1 - w2)``, a violation is
    ``q >= 0`` and a strong violation is ``f(w1) - f(w2) < q`` beyond a relative tolerance. Pairs
    drawn in the wrong order are swapped; ties are redrawn.
    """

    if trials < 1:
        raise ValueError("trials must be positive")
    violations = strong_violations = swaps = 0
    worst_margin = -math.inf
    max_residual = 0.0
    for _ in range(trials):
        for _attempt in range(PROBE_MAX_RESAMPLES):
            w1, w2 = pair_sampler()
            f1, f2 = losses.value(model, w1), losses.value(model, w2)
            if f1 != f2:
                break
        else:
            raise SamplerExhaustedError(
                f"no pair with distinct objective values after {PROBE_MAX_RESAMPLES} draws"
            )
        if f1 > f2:
            w1, w2, f1, f2 = w2, w1, f2, f1
            swaps += 1
        step = np.asarray(w1, dtype=float) - np.asarray(w2, dtype=float)
        quadratic = float(step @ losses.gradient(model, w2)) + 0.5 * float(
            step @ losses.hessian(model, w2) @ step
        )
        worst_margin = max(worst_margin, quadratic)
        if quadratic >= 0.0:
            violations += 1
        scale = max(1.0, abs(f1), abs(f2))
        residual = ((f1 - f2) - quadratic) / scale
        max_residual = max(max_residual, abs(residual))
        if residual < -PROBE_REL_TOL:
            strong_violations += 1
    LOGGER.debug(
        "subquadratic_probe trials=%d violations=%d strong_violations=%d",
        trials,
        violations,
        strong_violations,
    )
    return ProbeReport(
        trials=trials,
        violations=violations,
        strong_violations=strong_violations,
        worst_margin=worst_margin,
        max_strong_residual=max_residual,
        swaps=swaps,
    )


def verify_local_maximin(model: LossModel, p: DualPair, tol: float = MAXIMIN_TOL) -> MaximinCheck:
    """Second-order sufficient conditions: stationary, ``hess_w > 0`` and invertible cross-Hessian."""

    grad_w_norm = float(np.max(np.abs(grad_w(model, p))))
    grad_z_norm = float(np.max(np.abs(grad_z(model, p))))
    hess_min = min_eigenvalue(hess_w(model, p))
    min_abs_w = float(np.min(np.abs(np.diag(cross_hess(model, p))))) / 2.0
    return MaximinCheck(
        holds=bool(grad_w_norm <= tol and grad_z_norm <= tol and hess_min > tol and min_abs_w > tol),
        grad_w_norm=grad_w_norm,
        grad_z_norm=grad_z_norm,
        hess_w_min_eig=hess_min,
        min_abs_w=min_abs_w,
    )


def duality_gap(model: LossModel, w_hat: np.ndarray, z_hat: np.ndarray) -> DualityGap:
    """``p_hat = f(w_hat)``, ``d_hat = min_w L(w, z_hat)`` and their difference."""

    w_hat = _require_sign_vector(w_hat)
    p_hat = losses.value(model, w_hat)
    inner = inner_min(model, z_hat)
    if not inner.bounded:
        return DualityGap(p_hat=p_hat, d_hat=-math.inf, gap=math.inf)
    return DualityGap(p_hat=p_hat, d_hat=inner.value, gap=p_hat - inner.value)


def brute_force_min(model: LossModel) -> BruteForceResult:
    """Exact minimizer over ``{-1, +1}^n``; ties go to the lexicographically first vector (+1 < -1)."""

    n = model.n
    if n > MAX_ENUMERATION_N:
        raise EnumerationTooLargeError(f"enumeration is limited to n <= {MAX_ENUMERATION_N}, got {n}")
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_value = math.inf
    best_index = 0
    total = 1 << n
    for start in range(0, total, ENUMERATION_CHUNK):
        index = np.arange(start, min(start + ENUMERATION_CHUNK, total), dtype=np.int64)
        candidates = 1.0 - 2.0 * ((index[:, None] >> shifts) & 1)
        values = losses.batch_value(model, candidates)
        position = int(np.argmin(values))
        if values[position] < best_value:
            best_value = float(values[position])
            best_index = int(index[position])
    w_opt = 1.0 - 2.0 * ((best_index >> shifts) & 1).astype(float)
    return BruteForceResult(w_opt=w_opt, p_star=best_value)


def probability_bound(regime: Literal["gaussian", "sparse-outliers"], m: int, n: int) -> float:
    """Closed-form lower bound on the probability that the matching condition holds."""

    if regime == "gaussian":
        return 1.0 - 13.0 * n * math.sqrt(2.0 / math.pi) * math.exp(-m / 8.0)
    if regime == "sparse-outliers":
        return 1.0 - 5.0 * n * math.sqrt(m / math.pi) * math.exp(-m / 16.0)
    raise ValueError(f"unknown regime {regime!r}")


def empirical_condition_rate(spec: GeneratorSpec, trials: int, *, delta: float = 1.0) -> RateReport:
    """Monte-Carlo frequency of the linear (Gaussian noise) or Huber (sparse outliers) condition.

    Trial ``t`` uses the seed ``derive_seed(spec.seed, t)``.
    """

    if trials < 1:
        raise ValueError("trials must be positive")
    if spec.noise == "gaussian":
        regime: Literal["gaussian", "sparse-outliers"] = "gaussian"
    elif spec.noise == "sparse-outliers":
        regime = "sparse-outliers"
    else:
        raise ValueError(f"no closed-form bound for {spec.noise!r} noise")

    passes = 0
    for trial in range(trials):
        X, truth, _ = generate(spec.model_copy(update={"seed": derive_seed(spec.seed, trial)}))
        report = check_linear(X, truth) if regime == "gaussian" else check_huber(X, truth, delta)
        passes += int(report.holds)
    frequency = passes / trials
    bound = probability_bound(regime, spec.m, spec.n)
    LOGGER.info(
        "condition_rate regime=%s m=%d n=%d trials=%d frequency=%.4f bound=%.4g",
        regime,
        spec.m,
        spec.n,
        trials,
        frequency,
        bound,
    )
    return RateReport(
        regime=regime,
        m=spec.m,
        n=spec.n,
        trials=trials,
        passes=passes,
        frequency=frequency,
        bound=bound,
        meets_bound=frequency >= bound,
    )
