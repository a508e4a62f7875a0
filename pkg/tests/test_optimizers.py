"""Tests for the descent-ascent solvers and the dual function."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from binary_maximin import losses, theory
from binary_maximin.lagrangian import DualPair, analytic_dual, is_sign_vector, lagrangian_value
from binary_maximin.losses import DimensionError, LossModel
from binary_maximin.models import LossKind, SolveConfig, SolveMethod
from binary_maximin.optimizers import SolverDivergedError, gamma_at_epoch, inner_min, solve

METHOD_CONFIGS = {
    "gda": SolveConfig(method=SolveMethod.GDA, timescale="dual-slow", gamma0=20.0, gamma_growth=1.0),
    "gda-alternating": SolveConfig(),
    "ogda": SolveConfig(method=SolveMethod.OGDA, eta=0.15),
    "extragradient": SolveConfig(method=SolveMethod.EXTRAGRADIENT, eta=0.15),
}


class TestGammaSchedule:
    def test_growth_is_exact(self) -> None:
        config = SolveConfig(gamma0=1.5, gamma_growth=1.1, timescale="dual-slow")
        for epoch in range(50):
            assert gamma_at_epoch(config, epoch) == 1.5 * 1.1**epoch

    def test_dual_fast_is_capped(self) -> None:
        config = SolveConfig(eta=0.3, gamma_growth=2.0)
        assert config.gamma_ceiling == pytest.approx(0.5 / 0.09)
        assert gamma_at_epoch(config, 1) == 2.0
        assert gamma_at_epoch(config, 10) == config.gamma_ceiling

    def test_explicit_gamma_max(self) -> None:
        config = SolveConfig(gamma_growth=2.0, gamma_max=3.0)
        assert gamma_at_epoch(config, 5) == 3.0

    def test_overflow_becomes_infinite(self) -> None:
        config = SolveConfig(gamma_growth=1e10, timescale="dual-slow")
        assert gamma_at_epoch(config, 100) == math.inf

    def test_negative_epoch(self) -> None:
        with pytest.raises(ValueError):
            gamma_at_epoch(SolveConfig(), -1)


class TestSolve:
    def test_starting_at_the_optimum_converges_immediately(self, squared_model) -> None:
        model, truth = squared_model(120, 10, seed=1)
        result = solve(model, SolveConfig(), w0=truth.w_star)
        assert result.converged
        assert result.iters == 0
        np.testing.assert_array_equal(result.w_binary, truth.w_star)

    @pytest.mark.parametrize("seed", range(5))
    def test_noiseless_recovery(self, squared_model, seed: int) -> None:
        model, truth = squared_model(60, 30, seed=seed)
        result = solve(model, SolveConfig(seed=seed))
        assert result.converged
        assert result.final_grad_w_norm <= SolveConfig().grad_tol
        assert result.final_constraint_violation <= SolveConfig().binarize_tol
        np.testing.assert_array_equal(result.w_binary, truth.w_star)

    def test_negative_multipliers_do_not_trap_the_alternating_iteration(self, squared_model) -> None:
        model, truth = squared_model(60, 30, seed=95)
        result = solve(model, SolveConfig(seed=95))
        assert result.converged
        assert result.iters < SolveConfig().max_iters
        np.testing.assert_array_equal(result.w_binary, truth.w_star)

    @pytest.mark.parametrize("adaptive", [False, True])
    def test_multipliers_respect_the_dual_floor(self, squared_model, adaptive: bool) -> None:
        model, _ = squared_model(60, 30, seed=5, sigma=1.0)
        result = solve(model, SolveConfig(adaptive=adaptive, trace_every=1, max_iters=300))
        floor = -0.5 * result.curvature_scale
        assert min(float(np.min(point.z)) for point in result.trace) >= floor

    def test_l1_saddle_point_inside_the_box_is_not_binary(self) -> None:
        # f(w) = |w1 - 0.6| + |w2 + 0.6| is minimized over the box at y itself.
        model = LossModel(kind=LossKind.L1, X=np.eye(2), y=np.array([0.6, -0.6]))
        result = solve(model, SolveConfig(max_iters=2_000))
        assert not result.converged
        assert result.iters == 2_000
        assert result.final_constraint_violation > 0.1
        np.testing.assert_array_equal(result.w_binary, [1.0, -1.0])
        np.testing.assert_array_equal(result.z_final, 0.0)

    def test_l1_multipliers_stay_non_negative(self, make_instance) -> None:
        X, _, y = make_instance(60, 30, seed=3, x_scale="inv-n", noise="laplace", sigma=0.05)
        model = LossModel(kind=LossKind.L1, X=X, y=y)
        result = solve(model, SolveConfig(trace_every=1, max_iters=300))
        assert min(float(np.min(point.z)) for point in result.trace) >= 0.0

    @pytest.mark.parametrize("name", sorted(METHOD_CONFIGS))
    def test_every_method_recovers_noiseless_weights(self, squared_model, name: str) -> None:
        model, truth = squared_model(120, 10, seed=7)
        config = METHOD_CONFIGS[name].model_copy(update={"seed": 3})
        result = solve(model, config)
        assert result.converged, name
        np.testing.assert_array_equal(result.w_binary, truth.w_star)

    def test_adaptive_moments_recover_noiseless_weights(self, squared_model) -> None:
        model, truth = squared_model(120, 10, seed=7)
        result = solve(model, SolveConfig(adaptive=True, max_iters=5_000, seed=2))
        np.testing.assert_array_equal(result.w_binary, truth.w_star)
        assert np.all(np.isfinite(result.z_final))

    def test_noisy_recovery_across_initializations(self, squared_model) -> None:
        model, truth = squared_model(120, 10, seed=11, sigma=0.1)
        assert theory.check_general(model, truth.w_star).holds
        hits = sum(
            bool(np.array_equal(solve(model, SolveConfig(seed=seed)).w_binary, truth.w_star))
            for seed in range(20)
        )
        assert hits >= 19

    def test_deterministic(self, squared_model) -> None:
        model, _ = squared_model(60, 30, seed=4, sigma=0.3)
        config = SolveConfig(seed=9, trace_every=50)
        first, second = solve(model, config), solve(model, config)
        np.testing.assert_array_equal(first.w_final, second.w_final)
        np.testing.assert_array_equal(first.z_final, second.z_final)
        assert first.iters == second.iters
        assert [p.lagrangian for p in first.trace] == [p.lagrangian for p in second.trace]

    def test_max_iters_returns_sign_vector_without_error(self, squared_model) -> None:
        model, _ = squared_model(60, 30, seed=5, sigma=1.0)
        result = solve(model, SolveConfig(max_iters=5))
        assert not result.converged
        assert result.iters == 5
        assert is_sign_vector(result.w_binary)

    def test_feasible_endpoint_matches_objective(self, squared_model) -> None:
        model, _ = squared_model(120, 10, seed=2, sigma=0.1)
        config = SolveConfig()
        result = solve(model, config)
        assert result.final_constraint_violation <= config.binarize_tol
        slack = lagrangian_value(model, result.pair) - losses.value(model, result.w_binary)
        bound = 10 * config.binarize_tol * (1 + float(np.max(np.abs(result.z_final))) * model.n)
        assert slack <= bound

    def test_gamma_respects_ceiling(self, squared_model) -> None:
        model, _ = squared_model(60, 30, seed=6, sigma=0.2)
        config = SolveConfig(gamma_growth=1.5)
        result = solve(model, config)
        assert 1.0 <= result.gamma_final <= config.gamma_ceiling

    def test_trace_snapshots(self, squared_model) -> None:
        model, _ = squared_model(120, 10, seed=3)
        result = solve(model, SolveConfig(trace_every=10, max_iters=35))
        assert [point.iteration for point in result.trace] == [0, 10, 20, 30, 35]
        for point in result.trace:
            assert point.lagrangian == pytest.approx(lagrangian_value(model, DualPair(point.w, point.z)))
        np.testing.assert_array_equal(result.trace[0].z, 0.0)
        np.testing.assert_array_equal(result.trace[-1].w, result.w_final)

    def test_no_trace_by_default(self, squared_model) -> None:
        model, _ = squared_model(20, 5, seed=0)
        assert solve(model, SolveConfig(max_iters=3)).trace is None

    def test_divergence_carries_last_finite_iterate(self, squared_model) -> None:
        model, _ = squared_model(60, 30, seed=8)
        config = SolveConfig(method=SolveMethod.GDA, eta=5.0, max_iters=1_000)
        with pytest.raises(SolverDivergedError) as excinfo:
            solve(model, config)
        error = excinfo.value
        assert np.all(np.isfinite(error.w)) and np.all(np.isfinite(error.z))
        assert float(np.max(np.abs(error.w))) <= config.divergence_cap
        assert 0 <= error.iteration < config.max_iters

    def test_rejects_mismatched_start(self, squared_model) -> None:
        model, _ = squared_model(20, 5)
        with pytest.raises(DimensionError):
            solve(model, SolveConfig(), w0=np.ones(4))

    def test_logs_completion(self, squared_model, caplog) -> None:
        caplog.set_level(logging.INFO, logger="binary_maximin")
        model, _ = squared_model(20, 5)
        solve(model, SolveConfig(max_iters=10))
        messages = [record.getMessage() for record in caplog.records]
        assert any("solve_complete method=gda-alternating" in message for message in messages)


class TestInnerMin:
    def test_zero_multipliers_give_least_squares(self, squared_model) -> None:
        model, _ = squared_model(60, 30, seed=1, sigma=0.5)
        result = inner_min(model, np.zeros(30))
        expected, *_ = np.linalg.lstsq(model.X, model.y, rcond=None)
        assert result.bounded
        np.testing.assert_allclose(result.w, expected, atol=1e-8)
        assert result.value == pytest.approx(losses.value(model, expected), rel=1e-9)

    def test_indefinite_quadratic_is_unbounded(self, squared_model) -> None:
        model, _ = squared_model(120, 10, seed=1)
        result = inner_min(model, np.full(10, -1e3))
        assert not result.bounded
        assert result.value == -math.inf

    def test_analytic_dual_attains_primal_value(self, squared_model) -> None:
        model, truth = squared_model(120, 10, seed=12, sigma=0.1)
        assert theory.check_general(model, truth.w_star).holds
        result = inner_min(model, analytic_dual(model, truth.w_star))
        assert result.bounded
        np.testing.assert_allclose(result.w, truth.w_star, atol=1e-8)
        assert result.value == pytest.approx(losses.value(model, truth.w_star), rel=1e-9)

    def test_linear_growth_losses_are_unbounded_for_negative_multipliers(self, make_instance) -> None:
        X, _, y = make_instance(40, 5, seed=2, sigma=0.5)
        for kind in (LossKind.HUBER, LossKind.L1):
            model = LossModel(kind=kind, X=X, y=y)
            z = np.array([0.5, 0.5, -1e-3, 0.5, 0.5])
            assert not inner_min(model, z).bounded

    def test_huber_newton_reaches_stationarity(self, make_instance) -> None:
        X, _, y = make_instance(40, 5, seed=3, sigma=0.5)
        model = LossModel(kind=LossKind.HUBER, X=X, y=y, delta=0.5)
        z = np.full(5, 0.25)
        result = inner_min(model, z)
        assert result.bounded
        grad = losses.gradient(model, result.w) + 2.0 * z * result.w
        assert float(np.max(np.abs(grad))) <= 1e-6 * losses.curvature_bound(model)
        assert result.value == pytest.approx(lagrangian_value(model, DualPair(result.w, z)))

    def test_cross_entropy_with_positive_multipliers(self, rng) -> None:
        X = rng.standard_normal((30, 4))
        y = (X @ np.array([1.0, -1.0, 1.0, 1.0]) > 0).astype(float)
        model = LossModel(kind=LossKind.CROSS_ENTROPY, X=X, y=y)
        z = np.ones(4)
        result = inner_min(model, z)
        assert result.bounded
        grad = losses.gradient(model, result.w) + 2.0 * z * result.w
        assert float(np.max(np.abs(grad))) <= 1e-6 * losses.curvature_bound(model)

    def test_rejects_wrong_length(self, squared_model) -> None:
        model, _ = squared_model(20, 5)
        with pytest.raises(DimensionError):
            inner_min(model, np.zeros(6))
