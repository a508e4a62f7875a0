"""Convex objectives over linear predictions ``X @ w``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import expit

from .models import LossKind

__all__ = [
    "DimensionError",
    "NonFiniteInputError",
    "LossModel",
    "value",
    "gradient",
    "hessian",
    "batch_value",
    "curvature_bound",
    "curvature_weights",
    "huber_scalar",
]


class DimensionError(ValueError):
    """Raised when a weight vector or matrix does not match the model dimensions."""


class NonFiniteInputError(ValueError):
    """Raised when data or weights contain NaN or infinite entries."""


@dataclass(frozen=True, eq=False)
class LossModel:
    """An immutable objective ``f(w)`` defined by a loss kind, a design ``X`` and targets ``y``.

    The squared loss keeps the un-halved convention ``||Xw - y||^2``. ``delta`` is only used by the
    Huber loss.
    """

    kind: LossKind
    X: np.ndarray
    y: np.ndarray
    delta: float = 1.0

    def __post_init__(self) -> None:
        kind = LossKind(self.kind)
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError(f"X must be a non-empty matrix, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionError(f"y must have length {X.shape[0]}, got shape {y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise NonFiniteInputError("X and y must be finite")
        if kind is LossKind.HUBER and not self.delta > 0.0:
            raise ValueError("huber delta must be positive")
        if kind is LossKind.CROSS_ENTROPY and not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("cross-entropy targets must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def m(self) -> int:
        return int(self.X.shape[0])

    @property
    def n(self) -> int:
        return int(self.X.shape[1])

    @cached_property
    def spectral_norm(self) -> float:
        """Largest singular value of ``X``."""

        return float(np.linalg.norm(self.X, 2))

    def residual(self, w: np.ndarray) -> np.ndarray:
        return self.X @ self.check_weights(w) - self.y

    def check_weights(self, w: np.ndarray) -> np.ndarray:
        """Return ``w`` as a float vector, validating its length and finiteness."""

        vector = np.asarray(w, dtype=float)
        if vector.ndim != 1 or vector.shape[0] != self.n:
            raise DimensionError(f"expected a weight vector of length {self.n}, got shape {vector.shape}")
        if not np.all(np.isfinite(vector)):
            raise NonFiniteInputError("weights must be finite")
        return vector


def _huber_terms(r: np.ndarray, delta: float) -> np.ndarray:
    a = np.abs(r)
    return np.where(a <= delta, 0.5 * r * r, delta * a - 0.5 * delta * delta)


def _row_values(model: LossModel, R: np.ndarray) -> np.ndarray:
    """Loss values for residuals (or logits, for cross-entropy) stacked along the last axis."""

    match model.kind:
        case LossKind.SQUARED:
            return np.sum(R * R, axis=-1)
        case LossKind.HUBER:
            return np.sum(_huber_terms(R, model.delta), axis=-1)
        case LossKind.L1:
            return np.sum(np.abs(R), axis=-1)
        case LossKind.CROSS_ENTROPY:
            return np.sum(np.logaddexp(0.0, R) - model.y * R, axis=-1)
    raise ValueError(f"unsupported loss kind {model.kind!r}")


def value(model: LossModel, w: np.ndarray) -> float:
    """Evaluate ``f(w)``."""

    w = model.check_weights(w)
    t = model.X @ w
    R = t if model.kind is LossKind.CROSS_ENTROPY else t - model.y
    return float(_row_values(model, R))


def batch_value(model: LossModel, W: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` for every row of ``W``."""

    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] != model.n:
        raise DimensionError(f"expected candidates with {model.n} columns, got shape {W.shape}")
    T = W @ model.X.T
    R = T if model.kind is LossKind.CROSS_ENTROPY else T - model.y
    return _row_values(model, R)


def gradient(model: LossModel, w: np.ndarray) -> np.ndarray:
    """Evaluate ``grad f(w)``; the L1 subgradient at a zero residual is 0."""

    w = model.check_weights(w)
    t = model.X @ w
    match model.kind:
        case LossKind.SQUARED:
            return 2.0 * (model.X.T @ (t - model.y))
        case LossKind.HUBER:
            return model.X.T @ np.clip(t - model.y, -model.delta, model.delta)
        case LossKind.L1:
            return model.X.T @ np.sign(t - model.y)
        case LossKind.CROSS_ENTROPY:
            return model.X.T @ (expit(t) - model.y)
    raise ValueError(f"unsupported loss kind {model.kind!r}")


def curvature_weights(model: LossModel, w: np.ndarray) -> np.ndarray:
    """Per-row weights ``d`` with ``hessian(model, w) == X.T @ diag(d) @ X``.

    Huber rows count as quadratic only for residuals strictly inside ``(-delta, delta)``.
    """

    w = model.check_weights(w)
    match model.kind:
        case LossKind.SQUARED:
            return np.full(model.m, 2.0)
        case LossKind.HUBER:
            return (np.abs(model.X @ w - model.y) < model.delta).astype(float)
        case LossKind.L1:
            return np.zeros(model.m)
        case LossKind.CROSS_ENTROPY:
            s = expit(model.X @ w)
            return s * (1.0 - s)
    raise ValueError(f"unsupported loss kind {model.kind!r}")


def hessian(model: LossModel, w: np.ndarray) -> np.ndarray:
    """Evaluate ``hess f(w)`` as a symmetric ``n x n`` matrix."""

    d = curvature_weights(model, w)
    H = model.X.T @ (d[:, None] * model.X)
    return 0.5 * (H + H.T)


def curvature_bound(model: LossModel) -> float:
    """An upper bound on the largest Hessian eigenvalue over all ``w``.

    The L1 loss has no curvature; it reports the Huber bound so step sizes stay comparable.
    A zero design falls back to 1.
    """

    norm2 = model.spectral_norm**2
    match model.kind:
        case LossKind.SQUARED:
            bound = 2.0 * norm2
        case LossKind.CROSS_ENTROPY:
            bound = 0.25 * norm2
        case _:
            bound = norm2
    return bound if bound > 0.0 else 1.0


def huber_scalar(delta: float = 1.0) -> LossModel:
    """The scalar Huber loss ``l(w)`` as a one-row model."""

    return LossModel(kind=LossKind.HUBER, X=np.ones((1, 1)), y=np.zeros(1), delta=delta)
