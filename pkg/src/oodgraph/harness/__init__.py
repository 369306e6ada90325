"""Experiment orchestration, export and CLI."""

from .experiments import (
    PRESETS,
    ExperimentSpec,
    SweepTable,
    TightnessTable,
    TightnessViolation,
    check_tightness,
    reproduce_tightness_table,
    run_scenario,
    sweep,
)
from .pipeline import PipelineOptions, RunRecord, SeedResult, evaluate_seed, run_config

__all__ = [
    "PRESETS",
    "ExperimentSpec",
    "PipelineOptions",
    "RunRecord",
    "SeedResult",
    "SweepTable",
    "TightnessTable",
    "TightnessViolation",
    "check_tightness",
    "evaluate_seed",
    "reproduce_tightness_table",
    "run_config",
    "run_scenario",
    "sweep",
]
