"""Configuration-driven experiment runner with CSV/SVG/manifest reports."""

from .cli import main
from .config import ExperimentConfig, SweepPoint, load_config, parse_config
from .experiments import SCHEMAS, Report, run_experiment
from .reports import emit_plot

__all__ = [
    "ExperimentConfig",
    "Report",
    "SCHEMAS",
    "SweepPoint",
    "emit_plot",
    "load_config",
    "main",
    "parse_config",
    "run_experiment",
]
