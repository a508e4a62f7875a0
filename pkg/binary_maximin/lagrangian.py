"""The saddle objective ``L(w, z) = f(w) + sum_i z_i w_i**2 - sum_i z_i`` and its derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses
from .losses import DimensionError, LossModel, NonFiniteInputError

__all__ = [
    "NotSignVectorError",
    "DualPair",
    "lagrangian_value",
    "grad_w",
    "grad_z",
    "hess_w",
    "cross_hess",
    "analytic_dual",
    "is_sign_vector",
    "binarize",
]


class NotSignVectorError(ValueError):
    """Raised when a vector expected in ``{-1, +1}^n`` has other entries."""


@dataclass(frozen=True, eq=False)
class DualPair:
    """Primal weights ``w`` and one multiplier ``z_i`` per constraint ``w_i**2 == 1``."""

    w: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.w, dtype=float)
        z = np.array(self.z, dtype=float)
        if w.ndim != 1 or z.shape != w.shape:
            raise DimensionError(f"w and z must be vectors of equal length, got {w.shape} and {z.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(z))):
            raise NonFiniteInputError("dual pair entries must be finite")
        w.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return int(self.w.shape[0])


def _check(model: LossModel, p: DualPair) -> None:
    if p.n != model.n:
        raise DimensionError(f"dual pair has {p.n} entries, model expects {model.n}")


def lagrangian_value(model: LossModel, p: DualPair) -> float:
    _check(model, p)
    return losses.value(model, p.w) + float(p.z @ (p.w * p.w)) - float(np.sum(p.z))


def grad_w(model: LossModel, p: DualPair) -> np.ndarray:
    _check(model, p)
    return losses.gradient(model, p.w) + 2.0 * p.z * p.w


def grad_z(model: LossModel, p: DualPair) -> np.ndarray:
    """Constraint violations ``w_i**2 - 1``."""

    _check(model, p)
    return p.w * p.w - 1.0


def hess_w(model: LossModel, p: DualPair) -> np.ndarray:
    _check(model, p)
    return losses.hessian(model, p.w) + 2.0 * np.diag(p.z)


def cross_hess(model: LossModel, p: DualPair) -> np.ndarray:
    _check(model, p)
    return 2.0 * np.diag(p.w)


def is_sign_vector(w: np.ndarray) -> bool:
    vector = np.asarray(w)
    return vector.ndim == 1 and vector.size > 0 and bool(np.all(np.abs(vector) == 1.0))


def binarize(w: np.ndarray) -> np.ndarray:
    """Entrywise sign with ``sign(0) == +1``."""

    return np.where(np.asarray(w, dtype=float) >= 0.0, 1.0, -1.0)


def analytic_dual(model: LossModel, w_star: np.ndarray) -> np.ndarray:
    """The multipliers ``z* = -0.5 * w* * grad f(w*)`` that make ``grad_w`` vanish at ``w*``."""

    if not is_sign_vector(w_star):
        raise NotSignVectorError("analytic_dual requires a +1/-1 vector")
    w_star = np.asarray(w_star, dtype=float)
    return -0.5 * w_star * losses.gradient(model, w_star)
