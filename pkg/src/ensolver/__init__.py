"""Ensemble answer-or-skip decisions with closed-form performance bounds."""

from .bounds import (
    BoundReport,
    bound_report,
    correct_rate_lower_bound,
    oeb,
    rdr_lower_bound,
    skip_rate_lower_bound,
    success_rate_lower_bound,
)
from .ingest import PredictionLog, empirical_rates, fit_params, load_prediction_log
from .montecarlo import Estimate, estimate_rdr, estimate_success_rate, sweep
from .oracle import ExactRates, exact_rates, exact_rdr, exact_session_success_rate, exact_success_rate
from .votes import Answer, SKIP, decide, predict_with_uncertainty, run_limited, tally
from .world import RngSpec, WorldConfig, sample_batch

__all__ = [
    "Answer", "BoundReport", "Estimate", "ExactRates", "PredictionLog", "RngSpec", "SKIP",
    "WorldConfig", "bound_report", "correct_rate_lower_bound", "decide", "empirical_rates",
    "estimate_rdr", "estimate_success_rate", "exact_rates", "exact_rdr",
    "exact_session_success_rate", "exact_success_rate", "fit_params", "load_prediction_log",
    "oeb", "predict_with_uncertainty", "rdr_lower_bound", "run_limited", "sample_batch",
    "skip_rate_lower_bound", "success_rate_lower_bound", "sweep", "tally",
]
