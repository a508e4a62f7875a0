"""Comparison methods returning binary weights: LR, LPR, STE and a low-rank SDR."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy import linalg

from . import losses
from .const import (
    BASELINE_MAX_ITERS,
    LPR_STEP_TOL,
    LR_RIDGE,
    SDR_DEFAULT_RESTARTS,
    SDR_MAX_N,
    SDR_STEP_TOL,
    STE_DEFAULT_STEP,
    STE_DEFAULT_STEPS,
    STE_LATENT_CLIP,
)
from .lagrangian import binarize
from .losses import LossModel
from .models import LossKind

LOGGER = logging.getLogger(__name__)

__all__ = [
    "UnsupportedLossError",
    "BaselineResult",
    "lr_round",
    "lpr",
    "projected_gradient_residual",
    "ste",
    "homogenized_quadratic",
    "sdr",
]


class UnsupportedLossError(ValueError):
    """Raised when a baseline is asked to handle a loss it does not support."""


@dataclass(frozen=True, eq=False)
class BaselineResult:
    method: str
    w_binary: np.ndarray
    w_relaxed: np.ndarray | None
    iters: int
    objective: float
    relaxed_objective: float | None = None
    converged: bool = True


def _result(
    method: str,
    model: LossModel,
    relaxed: np.ndarray | None,
    w_binary: np.ndarray,
    *,
    iters: int,
    relaxed_objective: float | None,
    converged: bool,
) -> BaselineResult:
    return BaselineResult(
        method=method,
        w_binary=w_binary,
        w_relaxed=relaxed,
        iters=iters,
        objective=losses.value(model, w_binary),
        relaxed_objective=relaxed_objective,
        converged=converged,
    )


def _unconstrained_squared(model: LossModel) -> np.ndarray:
    X, y = model.X, model.y
    if np.linalg.matrix_rank(X) < model.n:
        # Minimum-norm solution of the rank-deficient system.
        w, *_ = linalg.lstsq(X, y)
        return w
    gram = X.T @ X + LR_RIDGE * np.eye(model.n)
    return linalg.solve(gram, X.T @ y, assume_a="pos")


def _unconstrained_first_order(
    model: LossModel, max_iters: int, grad_tol: float
) -> tuple[np.ndarray, int, bool]:
    scale = losses.curvature_bound(model)
    w = np.zeros(model.n)
    if model.kind is LossKind.L1:
        # Subgradient steps with a 1/sqrt(k) schedule; keep the best iterate.
        base = math.sqrt(model.n) / (model.spectral_norm * math.sqrt(model.m) or 1.0)
        best, best_value = w.copy(), losses.value(model, w)
        for k in range(1, max_iters + 1):
            g = losses.gradient(model, w)
            if not np.any(g):
                return w, k - 1, True
            w = w - base / math.sqrt(k) * g
            current = losses.value(model, w)
            if current < best_value:
                best, best_value = w.copy(), current
        return best, max_iters, False
    for k in range(1, max_iters + 1):
        g = losses.gradient(model, w)
        if float(np.max(np.abs(g))) <= grad_tol * scale:
            return w, k - 1, True
        w = w - g / scale
    return w, max_iters, False


def lr_round(
    model: LossModel,
    *,
    max_iters: int = BASELINE_MAX_ITERS,
    grad_tol: float = 1e-8,
) -> BaselineResult:
    """Unconstrained minimizer rounded entrywise to signs."""

    if model.kind is LossKind.SQUARED:
        relaxed, iters, converged = _unconstrained_squared(model), 1, True
    else:
        relaxed, iters, converged = _unconstrained_first_order(model, max_iters, grad_tol)
    LOGGER.debug("baseline_lr loss=%s iterations=%d converged=%s", model.kind.value, iters, converged)
    return _result(
        "lr",
        model,
        relaxed,
        binarize(relaxed),
        iters=iters,
        relaxed_objective=losses.value(model, relaxed),
        converged=converged,
    )


def projected_gradient_residual(model: LossModel, w: np.ndarray) -> float:
    """KKT residual of the box problem: ``||w - clip(w - grad f(w) / S, -1, 1)||_inf``."""

    w = model.check_weights(w)
    scale = losses.curvature_bound(model)
    return float(np.max(np.abs(w - np.clip(w - losses.gradient(model, w) / scale, -1.0, 1.0))))


def lpr(
    model: LossModel,
    *,
    max_iters: int = BASELINE_MAX_ITERS,
    tol: float = LPR_STEP_TOL,
) -> BaselineResult:
    """Box relaxation ``w in [-1, 1]^n`` solved by projected gradient descent, then rounded."""

    scale = losses.curvature_bound(model)
    w = np.zeros(model.n)
    best, best_value = w.copy(), losses.value(model, w)
    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        w_next = np.clip(w - losses.gradient(model, w) / scale, -1.0, 1.0)
        change = float(np.max(np.abs(w_next - w)))
        w = w_next
        current = losses.value(model, w)
        if current <= best_value:
            best, best_value = w.copy(), current
        if change <= tol:
            converged = True
            break
    if not converged:
        LOGGER.warning("baseline_lpr_max_iters loss=%s iterations=%d", model.kind.value, iters)
    return _result(
        "lpr",
        model,
        best,
        binarize(best),
        iters=iters,
        relaxed_objective=best_value,
        converged=converged,
    )


def ste(
    model: LossModel,
    *,
    steps: int = STE_DEFAULT_STEPS,
    step_size: float = STE_DEFAULT_STEP,
    seed: int = 0,
    w0: np.ndarray | None = None,
    clip: float = STE_LATENT_CLIP,
) -> BaselineResult:
    """Straight-through estimator on a latent ``w``.

    The forward pass uses ``sign(w)``; the backward pass masks coordinates with ``|w_i| > 1``. The
    step is ``step_size / curvature_bound``, so ``step_size`` is in the same normalized units as the
    maximin ``eta``; a masked coordinate stays frozen. ``converged`` means the sign pattern was
    unchanged over the last tenth of the steps.
    """

    if steps < 1:
        raise ValueError("steps must be positive")
    scale = losses.curvature_bound(model)
    if w0 is None:
        w = np.random.default_rng(seed).uniform(-1.0, 1.0, model.n)
    else:
        w = model.check_weights(w0).copy()
    window = max(1, steps // 10)
    signs = binarize(w)
    stable_since = 0
    for step in range(1, steps + 1):
        g = losses.gradient(model, signs)
        mask = np.abs(w) <= 1.0
        w = np.clip(w - step_size / scale * g * mask, -clip, clip)
        updated = binarize(w)
        if not np.array_equal(updated, signs):
            stable_since = step
        signs = updated
    converged = steps - stable_since >= window
    LOGGER.debug("baseline_ste loss=%s steps=%d converged=%s", model.kind.value, steps, converged)
    return _result(
        "ste",
        model,
        w,
        signs,
        iters=steps,
        relaxed_objective=None,
        converged=converged,
    )


def homogenized_quadratic(model: LossModel) -> np.ndarray:
    """``Q`` with ``[w; 1]^T Q [w; 1] == ||X w - y||^2``."""

    if model.kind is not LossKind.SQUARED:
        raise UnsupportedLossError("the homogenized form exists for the squared loss only")
    X, y = model.X, model.y
    Xty = X.T @ y
    Q = np.empty((model.n + 1, model.n + 1))
    Q[:-1, :-1] = X.T @ X
    Q[:-1, -1] = -Xty
    Q[-1, :-1] = -Xty
    Q[-1, -1] = float(y @ y)
    return Q


def _normalize_rows(V: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    return V / np.where(norms > 0.0, norms, 1.0)


def sdr(
    model: LossModel,
    *,
    rank: int | None = None,
    restarts: int = SDR_DEFAULT_RESTARTS,
    seed: int = 0,
    max_iters: int = BASELINE_MAX_ITERS,
    tol: float = SDR_STEP_TOL,
) -> BaselineResult:
    """Semidefinite relaxation ``min tr(QY)`` s.t. ``Y >= 0, diag(Y) = 1`` via ``Y = V V^T``.

    Each restart runs projected gradient descent on the row-normalized factor ``V``. The best
    ``Y`` is rounded by the sign of its top eigenvector, oriented by the homogenizing coordinate.
    """

    if model.kind is not LossKind.SQUARED:
        raise UnsupportedLossError("sdr supports the squared loss only")
    if model.n > SDR_MAX_N:
        raise ValueError(f"sdr is limited to n <= {SDR_MAX_N}, got {model.n}")
    if restarts < 1:
        raise ValueError("restarts must be positive")
    Q = homogenized_quadratic(model)
    size = model.n + 1
    rank = rank or math.ceil(math.sqrt(2 * size))
    step = 1.0 / (2.0 * float(np.linalg.norm(Q, 2)) or 1.0)
    rng = np.random.default_rng(seed)

    best_V: np.ndarray | None = None
    best_value = math.inf
    total_iters = 0
    converged = True
    for _restart in range(restarts):
        V = _normalize_rows(rng.standard_normal((size, rank)))
        current = float(np.sum(V * (Q @ V)))
        settled = False
        for _ in range(max_iters):
            total_iters += 1
            V = _normalize_rows(V - step * 2.0 * (Q @ V))
            updated = float(np.sum(V * (Q @ V)))
            change = abs(current - updated)
            current = updated
            if change <= tol * max(1.0, abs(current)):
                settled = True
                break
        converged = converged and settled
        if current < best_value:
            best_V, best_value = V, current
    if not converged:
        LOGGER.warning("baseline_sdr_max_iters n=%d restarts=%d", model.n, restarts)

    assert best_V is not None
    _, vectors = linalg.eigh(best_V @ best_V.T)
    top = vectors[:, -1]
    orientation = 1.0 if top[-1] >= 0.0 else -1.0
    w_binary = binarize(orientation * top[:-1])
    return _result(
        "sdr",
        model,
        None,
        w_binary,
        iters=total_iters,
        relaxed_objective=best_value,
        converged=converged,
    )
