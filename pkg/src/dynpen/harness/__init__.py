"""Experiment orchestration for the regression and vehicle studies."""
from .config import RunConfig, load_config
from .runs import RunRecord, execute, is_sufficient_feasible, run_regress1d, run_vehicle
from .study import report, run_study, summarize

__all__ = [
    "RunConfig", "RunRecord", "execute", "is_sufficient_feasible", "load_config", "report",
    "run_regress1d", "run_study", "run_vehicle", "summarize",
]
