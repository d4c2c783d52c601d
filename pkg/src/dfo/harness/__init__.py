"""Experiment orchestration: configs, presets, fitting, metrics, CLI."""

from .config import ExperimentConfig, parse_config, serialize_config
from .fitting import FitConfig, fit_initial_condition
from .metrics import MetricsRow, relative_l2

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "FitConfig",
    "fit_initial_condition",
    "MetricsRow",
    "relative_l2",
]
