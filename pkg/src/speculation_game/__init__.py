"""Speculation Game agent-based market model and stylized-fact diagnostics."""
from .analysis import analyze_trials
from .config import ExperimentSpec, load_spec, parse_spec, serialize_spec
from .engine import GameConfig, MarketEngine, TrialResult, run_trial
from .fitting import ExponentialTail, Garch11, PowerLawTail, garch_residuals, vuong_test
from .harness import reproduce, run_experiment, write_outputs
from .report import StylizedFactReport, build_report

__all__ = [
    "ExperimentSpec", "ExponentialTail", "GameConfig", "Garch11", "MarketEngine", "PowerLawTail",
    "StylizedFactReport", "TrialResult", "analyze_trials", "build_report", "garch_residuals",
    "load_spec", "parse_spec", "reproduce", "run_experiment", "run_trial", "serialize_spec",
    "vuong_test", "write_outputs",
]
