"""Shared pytest fixtures for binary-maximin tests."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from binary_maximin.data import generate
from binary_maximin.losses import LossModel
from binary_maximin.models import GeneratorSpec, GroundTruth, LossKind

Instance = tuple[np.ndarray, GroundTruth, np.ndarray]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def make_instance() -> Callable[..., Instance]:
    """Factory for seeded synthetic instances ``(X, truth, y)``."""

    def _make(m: int = 60, n: int = 30, *, seed: int = 0, **overrides) -> Instance:
        return generate(GeneratorSpec(m=m, n=n, seed=seed, **overrides))

    return _make


@pytest.fixture
def squared_model(make_instance) -> Callable[..., tuple[LossModel, GroundTruth]]:
    """Factory for squared-loss models over seeded instances."""

    def _make(m: int = 60, n: int = 30, *, seed: int = 0, **overrides) -> tuple[LossModel, GroundTruth]:
        X, truth, y = make_instance(m, n, seed=seed, **overrides)
        return LossModel(kind=LossKind.SQUARED, X=X, y=y), truth

    return _make
