"""Regression with binary weights through Lagrangian maximin optimization."""

from __future__ import annotations

from .lagrangian import DualPair, analytic_dual, binarize
from .losses import LossModel
from .models import GeneratorSpec, GroundTruth, LossKind, SolveConfig, SolveMethod
from .optimizers import SolveResult, SolverDivergedError, inner_min, solve

__all__ = [
    "DualPair",
    "GeneratorSpec",
    "GroundTruth",
    "LossKind",
    "LossModel",
    "SolveConfig",
    "SolveMethod",
    "SolveResult",
    "SolverDivergedError",
    "analytic_dual",
    "binarize",
    "inner_min",
    "solve",
]

__version__ = "0.1.0"
