"""Experiment harness: synthetic instances, metrics, batch runner."""

from .config import ConfigError, ExperimentConfig, parse_config, read_config
from .experiment import Report, run_experiment
from .metrics import OracleViolation, approximation_ratio, exact_solution_flag
from .synth import SynthParams, synth_instance, synth_with_plant

__all__ = [
    "ConfigError", "ExperimentConfig", "OracleViolation", "Report", "SynthParams",
    "approximation_ratio", "exact_solution_flag", "parse_config", "read_config",
    "run_experiment", "synth_instance", "synth_with_plant",
]
