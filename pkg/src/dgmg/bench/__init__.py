"""Benchmark harness: manufactured problem, experiment runs and CLI."""
from dgmg.bench.experiment import (
    ANISO_CASES,
    ExperimentConfig,
    RunMetrics,
    compute_metrics,
    emit_results,
    preset_anisotropic,
    preset_table1,
    run,
)
from dgmg.bench.problem import ManufacturedProblem, l2_error, manufactured_problem

__all__ = [
    "ANISO_CASES",
    "ExperimentConfig",
    "RunMetrics",
    "compute_metrics",
    "emit_results",
    "preset_anisotropic",
    "preset_table1",
    "run",
    "ManufacturedProblem",
    "l2_error",
    "manufactured_problem",
]
