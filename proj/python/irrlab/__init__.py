"""Irreversible Langevin sampling lab."""

from ._core import (
    NumericalError,
    ValidationError,
    coefficients,
    critical_points,
    graph_json,
    limiting_variance,
    poisson_oracle,
    preset_names,
    run_preset,
    scenarios,
    simulate,
    sweep_csv,
    verify_conditions,
)

__all__ = [
    "NumericalError",
    "ValidationError",
    "coefficients",
    "critical_points",
    "graph_json",
    "limiting_variance",
    "poisson_oracle",
    "preset_names",
    "run_preset",
    "scenarios",
    "simulate",
    "sweep_csv",
    "verify_conditions",
]
