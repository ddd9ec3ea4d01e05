"""Experiment orchestration and persistence."""

from .config import ConfigError, SweepConfig, load_config, save_config
from .experiments import TrialRecord, TrialSpec, run_trials, simulate, summarize
from .io import read_csv, write_csv, write_json

__all__ = [
    "ConfigError", "SweepConfig", "TrialRecord", "TrialSpec", "load_config", "read_csv",
    "run_trials", "save_config", "simulate", "summarize", "write_csv", "write_json",
]
