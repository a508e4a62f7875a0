"""Validation tests for the solver and experiment schemas."""

from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from binary_maximin.models import (
    ExperimentConfig,
    GeneratorSpec,
    GroundTruth,
    LossKind,
    MethodSpec,
    MetricRow,
    SolveConfig,
    SolveMethod,
)


def test_solve_config_defaults_and_ceiling() -> None:
    """Default solver settings should be alternating GDA with a margin-derived ceiling."""
    config = SolveConfig()
    assert config.method is SolveMethod.GDA_ALTERNATING
    assert config.timescale == "dual-fast"
    assert config.gamma_ceiling == pytest.approx(0.5 / config.eta**2)
    assert SolveConfig(gamma_max=3.0).gamma_ceiling == 3.0
    assert SolveConfig(gamma0=100.0).gamma_ceiling == 100.0


@pytest.mark.parametrize(
    "overrides",
    [
        {"eta": 0.0},
        {"gamma_growth": 0.5},
        {"max_iters": 0},
        {"method": "adam"},
        {"timescale": "dual-medium"},
        {"eta": 1e300, "gamma0": 1e300},
    ],
)
def test_solve_config_rejects_bad_values(overrides: dict) -> None:
    with pytest.raises(ValidationError):
        SolveConfig(**overrides)


def test_ground_truth_normalizes_arrays() -> None:
    truth = GroundTruth(w_star=[1, -1], e=[0.0, 2.0, 0.0], outlier_mask=[False, True, False])
    assert truth.w_star.dtype == float
    assert truth.outlier_fraction == pytest.approx(1 / 3)
    assert GroundTruth(w_star=np.ones(2), e=np.zeros(3)).outlier_fraction == 0.0
    with pytest.raises(ValueError):
        GroundTruth(w_star=[1.0, 0.5], e=[0.0])
    with pytest.raises(ValueError):
        GroundTruth(w_star=[1.0], e=[0.0, 1.0], outlier_mask=[True])


def test_method_spec_restricts_sdr_to_squared_loss() -> None:
    assert MethodSpec(label="sdr", kind="sdr").loss is LossKind.SQUARED
    with pytest.raises(ValidationError):
        MethodSpec(label="sdr", kind="sdr", loss="l1")
    with pytest.raises(ValidationError):
        MethodSpec(label="", kind="lr")


def test_experiment_requires_exactly_one_source() -> None:
    methods = [MethodSpec(label="a")]
    with pytest.raises(ValidationError, match="exactly one"):
        ExperimentConfig(sweep_values=[0.1], methods=methods)
    with pytest.raises(ValidationError, match="unique"):
        ExperimentConfig(
            sweep_values=[0.1],
            generator=GeneratorSpec(m=4, n=2),
            methods=[MethodSpec(label="a"), MethodSpec(label="a", kind="lr")],
        )
    with pytest.raises(ValidationError, match="outlier fractions"):
        ExperimentConfig(
            sweep="outlier_fraction",
            sweep_values=[1.0],
            generator=GeneratorSpec(m=4, n=2),
            methods=methods,
        )
    with pytest.raises(ValidationError, match="below 0.5"):
        ExperimentConfig(
            sweep="outlier_fraction",
            sweep_values=[0.1, 0.5],
            generator=GeneratorSpec(m=4, n=2),
            methods=methods,
        )
    accepted = ExperimentConfig(
        sweep="outlier_fraction",
        sweep_values=[0.0, 0.49],
        generator=GeneratorSpec(m=4, n=2),
        methods=methods,
    )
    assert accepted.sweep_values == [0.0, 0.49]


def test_metric_row_bounds_and_serialization() -> None:
    row = MetricRow(method="lr", loss="squared", sweep="sigma", sweep_value=0.5, hamming_error=0.25)
    payload = row.model_dump()
    assert payload["row_type"] == "run"
    assert payload["repetition"] is None
    assert MetricRow.model_validate(payload) == row
    with pytest.raises(ValidationError):
        MetricRow(method="lr", loss="squared", sweep="sigma", sweep_value=0.5, nrmse=-1.0)
