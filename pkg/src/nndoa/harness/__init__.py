"""Experiment configs, metrics, reports and the command line interface."""
from .experiment import ErrorReport, ExperimentConfig, run_experiment, run_music
from .metrics import ecdf, matched_error, matched_errors, summarize

__all__ = ["ErrorReport", "ExperimentConfig", "ecdf", "matched_error", "matched_errors",
           "run_experiment", "run_music", "summarize"]
