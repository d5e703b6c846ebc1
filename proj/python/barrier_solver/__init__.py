"""Optimal capital-injection barriers for a surplus process under a two-state interest rate."""

from ._core import (
    BarrierStrategy,
    ModelParams,
    PiecewiseExpPoly,
    RateState,
    SimConfig,
    SimEstimate,
    Solution,
    SolverError,
    V0Result,
    ValidationMode,
    example_barrier_lambda2_zero,
    expected_discount,
    simulate_discount,
    simulate_value,
    solve,
    v0,
    validate,
)

__all__ = [
    "BarrierStrategy",
    "ModelParams",
    "PiecewiseExpPoly",
    "RateState",
    "SimConfig",
    "SimEstimate",
    "Solution",
    "SolverError",
    "V0Result",
    "ValidationMode",
    "example_barrier_lambda2_zero",
    "expected_discount",
    "simulate_discount",
    "simulate_value",
    "solve",
    "v0",
    "validate",
]
