"""Gradient descent-ascent solvers for the binary-weights Lagrangian."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy import linalg

from . import losses
from .const import (
    ADAPTIVE_STEP_SCALE,
    DUAL_FLOOR_FRACTION,
    EIGENVALUE_FLOOR,
    INNER_ARMIJO,
    INNER_GRAD_TOL,
    INNER_NEWTON_MAX_ITERS,
    INNER_NORM_CAP,
)
from .lagrangian import DualPair, binarize, lagrangian_value
from .losses import DimensionError, LossModel, NonFiniteInputError
from .models import LossKind, SolveConfig, SolveMethod

LOGGER = logging.getLogger(__name__)

__all__ = [
    "SolverDivergedError",
    "TracePoint",
    "SolveResult",
    "InnerMinResult",
    "gamma_at_epoch",
    "solve",
    "inner_min",
]


class SolverDivergedError(RuntimeError):
    """Raised when the iterates leave the divergence cap; carries the last finite iterate."""

    def __init__(self, message: str, *, w: np.ndarray, z: np.ndarray, iteration: int) -> None:
        super().__init__(message)
        self.w = w
        self.z = z
        self.iteration = iteration


@dataclass(frozen=True, eq=False)
class TracePoint:
    iteration: int
    w: np.ndarray
    z: np.ndarray
    lagrangian: float
    gamma: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Final iterate of :func:`solve` with convergence diagnostics.

    ``final_grad_w_norm`` is ``||grad_w||_inf`` divided by ``curvature_scale``.
    """

    w_final: np.ndarray
    w_binary: np.ndarray
    z_final: np.ndarray
    converged: bool
    iters: int
    final_constraint_violation: float
    final_grad_w_norm: float
    curvature_scale: float
    gamma_final: float
    trace: tuple[TracePoint, ...] | None = None

    @property
    def pair(self) -> DualPair:
        return DualPair(self.w_final, self.z_final)


@dataclass(frozen=True, eq=False)
class InnerMinResult:
    """The dual function ``d(z) = min_w L(w, z)``; ``bounded=False`` means ``d(z) == -inf``."""

    w: np.ndarray | None
    value: float
    bounded: bool
    iterations: int


def gamma_at_epoch(config: SolveConfig, epoch: int) -> float:
    """Timescale ratio after ``epoch`` completed epochs: ``gamma0 * gamma_growth**epoch``.

    The dual-fast timescale clips the ratio at ``config.gamma_ceiling``.
    """

    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    try:
        gamma = config.gamma0 * config.gamma_growth**epoch
    except OverflowError:
        gamma = math.inf
    if config.timescale == "dual-fast":
        return min(gamma, config.gamma_ceiling)
    return gamma


class _Moments:
    """First and second moment estimates for one player."""

    def __init__(self, n: int, beta1: float, beta2: float, eps: float) -> None:
        self._m = np.zeros(n)
        self._v = np.zeros(n)
        self._t = 0
        self._beta1 = beta1
        self._beta2 = beta2
        self._eps = eps

    def precondition(self, g: np.ndarray, *, commit: bool = True) -> np.ndarray:
        t = self._t + 1
        m = self._beta1 * self._m + (1.0 - self._beta1) * g
        v = self._beta2 * self._v + (1.0 - self._beta2) * g * g
        if commit:
            self._m, self._v, self._t = m, v, t
        m_hat = m / (1.0 - self._beta1**t)
        v_hat = v / (1.0 - self._beta2**t)
        return m_hat / (np.sqrt(v_hat) + self._eps)


class _Iteration:
    """One saddle-point update per call to :meth:`step`, in curvature-normalized units.

    The primal step for coordinate ``i`` is ``eta / (S + 2|z_i|)``, the inverse of that
    coordinate's Lipschitz bound on ``grad_w L``. Multipliers are projected onto ``z >= -S/2``, or
    ``z >= 0`` for the curvature-free L1 loss; below that floor ``L(., z)`` is unbounded below.
    """

    def __init__(self, model: LossModel, config: SolveConfig) -> None:
        self._model = model
        self._config = config
        self.scale = losses.curvature_bound(model)
        self.dual_floor = 0.0 if model.kind is LossKind.L1 else -DUAL_FLOOR_FRACTION * self.scale
        self._previous: tuple[np.ndarray, np.ndarray] | None = None
        self._w_moments: _Moments | None = None
        self._z_moments: _Moments | None = None
        if config.adaptive:
            args = (model.n, config.beta1, config.beta2, config.adam_eps)
            self._w_moments = _Moments(*args)
            self._z_moments = _Moments(*args)

    def field(
        self, w: np.ndarray, z: np.ndarray, loss_grad: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        if loss_grad is None:
            loss_grad = losses.gradient(self._model, w)
        return loss_grad + 2.0 * z * w, w * w - 1.0

    def _descent(self, g: np.ndarray, z: np.ndarray, *, commit: bool = True) -> np.ndarray:
        if self._w_moments is not None:
            lr = self._config.eta * ADAPTIVE_STEP_SCALE
            return lr * self._w_moments.precondition(g, commit=commit)
        return self._config.eta / (self.scale + 2.0 * np.abs(z)) * g

    def _ascent(
        self, z: np.ndarray, g: np.ndarray, gamma: float, *, commit: bool = True
    ) -> np.ndarray:
        ratio = gamma if self._config.timescale == "dual-fast" else 1.0 / gamma
        if self._z_moments is not None:
            lr = self._config.eta * ADAPTIVE_STEP_SCALE * ratio
            raised = z + lr * self._z_moments.precondition(g, commit=commit)
        else:
            raised = z + self._config.eta * ratio * self.scale * g
        return np.maximum(raised, self.dual_floor)

    def step(
        self, w: np.ndarray, z: np.ndarray, gamma: float, loss_grad: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Advance ``(w, z)`` once; ``loss_grad`` may carry ``grad f(w)`` already computed for ``w``."""

        match self._config.method:
            case SolveMethod.GDA:
                gw, gz = self.field(w, z, loss_grad)
                return w - self._descent(gw, z), self._ascent(z, gz, gamma)
            case SolveMethod.GDA_ALTERNATING:
                z_next = self._ascent(z, w * w - 1.0, gamma)
                gw, _ = self.field(w, z_next, loss_grad)
                return w - self._descent(gw, z_next), z_next
            case SolveMethod.OGDA:
                gw, gz = self.field(w, z, loss_grad)
                prev_w, prev_z = self._previous if self._previous is not None else (gw, gz)
                self._previous = (gw, gz)
                return (
                    w - self._descent(2.0 * gw - prev_w, z),
                    self._ascent(z, 2.0 * gz - prev_z, gamma),
                )
            case SolveMethod.EXTRAGRADIENT:
                gw, gz = self.field(w, z, loss_grad)
                w_look = w - self._descent(gw, z, commit=False)
                z_look = self._ascent(z, gz, gamma, commit=False)
                gw, gz = self.field(w_look, z_look)
                return w - self._descent(gw, z), self._ascent(z, gz, gamma)
        raise ValueError(f"unsupported method {self._config.method!r}")


def _residuals(
    w: np.ndarray, z: np.ndarray, loss_grad: np.ndarray, scale: float
) -> tuple[float, float]:
    violation = float(np.max(np.abs(w * w - 1.0)))
    return violation, float(np.max(np.abs(loss_grad + 2.0 * z * w))) / scale


def _trace_point(model: LossModel, w: np.ndarray, z: np.ndarray, iteration: int, gamma: float) -> TracePoint:
    return TracePoint(
        iteration=iteration,
        w=w.copy(),
        z=z.copy(),
        lagrangian=lagrangian_value(model, DualPair(w, z)),
        gamma=gamma,
    )


def solve(
    model: LossModel,
    config: SolveConfig | None = None,
    w0: np.ndarray | None = None,
) -> SolveResult:
    """Run the configured descent-ascent iteration from ``w0`` (or a seeded uniform draw) and ``z = 0``.

    The ratio ``gamma`` advances once per epoch of ``n`` iterations. Raises
    :class:`SolverDivergedError` when ``||w||_inf`` exceeds ``config.divergence_cap`` or an
    iterate stops being finite.
    """

    config = config or SolveConfig()
    n = model.n
    if w0 is None:
        w = np.random.default_rng(config.seed).uniform(-1.0, 1.0, n)
    else:
        w = model.check_weights(w0).copy()
    z = np.zeros(n)

    iteration = _Iteration(model, config)
    scale = iteration.scale
    trace: list[TracePoint] | None = [] if config.trace_every else None
    gamma = gamma_at_epoch(config, 0)
    LOGGER.debug(
        "solve_start method=%s loss=%s m=%d n=%d eta=%s gamma0=%s seed=%d",
        config.method.value,
        model.kind.value,
        model.m,
        n,
        config.eta,
        config.gamma0,
        config.seed,
    )

    iters = epoch = 0
    loss_grad = losses.gradient(model, w)
    violation, grad_norm = _residuals(w, z, loss_grad, scale)
    if trace is not None:
        trace.append(_trace_point(model, w, z, 0, gamma))

    with np.errstate(over="ignore", invalid="ignore"):
        while iters < config.max_iters:
            if violation <= config.binarize_tol and grad_norm <= config.grad_tol:
                break
            if iters // n != epoch:
                epoch = iters // n
                gamma = gamma_at_epoch(config, epoch)
            try:
                w_next, z_next = iteration.step(w, z, gamma, loss_grad)
            except NonFiniteInputError:
                w_next, z_next = np.full(n, np.nan), z
            iters += 1
            finite = bool(np.all(np.isfinite(w_next)) and np.all(np.isfinite(z_next)))
            if not finite or float(np.max(np.abs(w_next))) > config.divergence_cap:
                LOGGER.warning(
                    "solve_diverged method=%s loss=%s iteration=%d gamma=%s",
                    config.method.value,
                    model.kind.value,
                    iters,
                    gamma,
                )
                raise SolverDivergedError(
                    f"iterates diverged at iteration {iters}", w=w, z=z, iteration=iters - 1
                )
            w, z = w_next, z_next
            loss_grad = losses.gradient(model, w)
            violation, grad_norm = _residuals(w, z, loss_grad, scale)
            if trace is not None and iters % config.trace_every == 0:
                trace.append(_trace_point(model, w, z, iters, gamma))

    if trace is not None and trace[-1].iteration != iters:
        trace.append(_trace_point(model, w, z, iters, gamma))

    converged = violation <= config.binarize_tol and grad_norm <= config.grad_tol
    LOGGER.info(
        "solve_complete method=%s loss=%s n=%d iterations=%d converged=%s violation=%.3e grad=%.3e",
        config.method.value,
        model.kind.value,
        n,
        iters,
        converged,
        violation,
        grad_norm,
    )
    return SolveResult(
        w_final=w,
        w_binary=binarize(w),
        z_final=z,
        converged=converged,
        iters=iters,
        final_constraint_violation=violation,
        final_grad_w_norm=grad_norm,
        curvature_scale=scale,
        gamma_final=gamma,
        trace=tuple(trace) if trace is not None else None,
    )


def _unbounded(w: np.ndarray | None = None, iterations: int = 0) -> InnerMinResult:
    return InnerMinResult(w=w, value=-math.inf, bounded=False, iterations=iterations)


def _inner_min_quadratic(model: LossModel, z: np.ndarray) -> InnerMinResult:
    # Stationarity of the squared Lagrangian: (X^T X + diag(z)) w = X^T y.
    gram = model.X.T @ model.X + np.diag(z)
    rhs = model.X.T @ model.y
    eigenvalues = linalg.eigh(gram, eigvals_only=True)
    floor = EIGENVALUE_FLOOR * max(1.0, abs(float(eigenvalues[-1])))
    if eigenvalues[0] < -floor:
        return _unbounded()
    if eigenvalues[0] <= floor:
        w, *_ = linalg.lstsq(gram, rhs)
        if np.linalg.norm(gram @ w - rhs) > 1e-8 * max(1.0, float(np.linalg.norm(rhs))):
            return _unbounded()
    else:
        w = linalg.solve(gram, rhs, assume_a="pos")
    return InnerMinResult(
        w=w, value=lagrangian_value(model, DualPair(w, z)), bounded=True, iterations=1
    )


def _inner_min_newton(
    model: LossModel,
    z: np.ndarray,
    *,
    grad_tol: float,
    max_iters: int,
    norm_cap: float,
) -> InnerMinResult:
    scale = losses.curvature_bound(model)
    offset = float(np.sum(z))

    def objective(v: np.ndarray) -> float:
        return losses.value(model, v) + float(z @ (v * v)) - offset

    w = np.zeros(model.n)
    current = objective(w)
    ridge = 1e-8 * scale * np.eye(model.n)
    iterations = 0
    for iterations in range(1, max_iters + 1):
        g = losses.gradient(model, w) + 2.0 * z * w
        if float(np.max(np.abs(g))) <= grad_tol * scale:
            iterations -= 1
            break
        H = losses.hessian(model, w) + 2.0 * np.diag(z)
        try:
            d = -linalg.solve(H + ridge, g, assume_a="sym")
        except linalg.LinAlgError:
            d = -g / scale
        slope = float(g @ d)
        if not math.isfinite(slope) or slope >= 0.0:
            d = -g / scale
            slope = float(g @ d)

        t = 1.0
        accepted = False
        while t > 1e-12:
            candidate = w + t * d
            if np.all(np.isfinite(candidate)):
                trial = objective(candidate)
                if trial <= current + INNER_ARMIJO * t * slope:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        w, current = candidate, trial
        if float(np.max(np.abs(w))) > norm_cap:
            LOGGER.debug("inner_min_unbounded loss=%s iteration=%d", model.kind.value, iterations)
            return _unbounded(w, iterations)
    return InnerMinResult(w=w, value=current, bounded=True, iterations=iterations)


def inner_min(
    model: LossModel,
    z: np.ndarray,
    *,
    grad_tol: float = INNER_GRAD_TOL,
    max_iters: int = INNER_NEWTON_MAX_ITERS,
    norm_cap: float = INNER_NORM_CAP,
) -> InnerMinResult:
    """Evaluate the dual function at ``z``.

    The squared loss is solved in closed form. The other losses grow at most linearly, so any
    negative multiplier makes the inner problem unbounded; otherwise a damped Newton method
    runs until ``||grad_w||_inf <= grad_tol * curvature_bound``.
    """

    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] != model.n:
        raise DimensionError(f"expected {model.n} multipliers, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteInputError("multipliers must be finite")
    if model.kind is LossKind.SQUARED:
        return _inner_min_quadratic(model, z)
    if np.any(z < 0.0):
        return _unbounded()
    return _inner_min_newton(model, z, grad_tol=grad_tol, max_iters=max_iters, norm_cap=norm_cap)
