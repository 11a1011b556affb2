"""Experiment configuration, presets, sweeps, plotting and the CLI."""
from .config import ConfigError, ExperimentConfig, load, parse
from .sweep import ResultTable, SweepError, emit_csv, read_csv, run_sweep

__all__ = ["ConfigError", "ExperimentConfig", "ResultTable", "SweepError", "emit_csv", "load",
           "parse", "read_csv", "run_sweep"]
