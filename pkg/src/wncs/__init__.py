"""Scalar wireless networked control: delayed estimation, error analytics,
LQG cost mapping and sensor scheduling."""

from .analytics import (CoreFunctionBreakdown, f_corollary1, f_prior_baseline, f_theorem1,
                        error_recursion_step, j_e_steady, j_e_time_average)
from .config import (ChannelSpec, ScenarioConfig, ScenarioError, SensorSpec, SystemParams,
                     load_scenario, validate_scenario)
from .experiments import run_batch, run_episode, run_fig2a, run_fig2b, run_fig2c, summarize
from .history import ReceptionHistory
from .lqg import control_gain, lqg_cost_from_je, solve_dare, solve_lqg
from .schedulers import greedy_decide, sliding_window_decide

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec", "CoreFunctionBreakdown", "ReceptionHistory", "ScenarioConfig", "ScenarioError",
    "SensorSpec", "SystemParams", "control_gain", "error_recursion_step", "f_corollary1",
    "f_prior_baseline", "f_theorem1", "greedy_decide", "j_e_steady", "j_e_time_average",
    "load_scenario", "lqg_cost_from_je", "run_batch", "run_episode", "run_fig2a", "run_fig2b",
    "run_fig2c", "sliding_window_decide", "solve_dare", "solve_lqg", "summarize",
    "validate_scenario",
]
