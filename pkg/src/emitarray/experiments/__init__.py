"""Monte Carlo runs, statistics and fits."""
from .fitting import FitResult, fit_scaling, fit_threshold, requisite_eta, threshold_model
from .runner import PStarResult, Point, RunConfig, find_pstar, run_config, run_point
from .stats import ShotStats, wilson_interval

__all__ = [
    "FitResult", "fit_scaling", "fit_threshold", "requisite_eta", "threshold_model",
    "PStarResult", "Point", "RunConfig", "find_pstar", "run_config", "run_point",
    "ShotStats", "wilson_interval",
]
