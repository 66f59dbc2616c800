"""hpctune: search-based autotuning of parameterized programs.

Bayesian optimization over mixed ordinal/categorical parameter spaces with a
random-forest surrogate and a lower-confidence-bound acquisition rule, plus
the machinery around it: code-mold instantiation, HPC launcher command
synthesis (aprun / jsrun / geopmlaunch / local shell), runtime and node-energy
and EDP metrics, and an append-only trial log with reporting.
"""

from .evaluate import TrialRecord, edp, parse_geopm_report, parse_runtime
from .forest import ForestParams, Prediction, SurrogateModel, fit
from .launch import LaunchPlan, LaunchSpec, build_plan, theta_depth_map
from .mold import MoldFile, bind_env, render
from .problem import Problem, load_problem
from .search import AcquisitionSettings, SearchBudget, SearchState, ask, lcb, run_search, tell
from .space import Configuration, Parameter, ParamSpace

__version__ = "0.1.0"

__all__ = [
    "AcquisitionSettings",
    "Configuration",
    "ForestParams",
    "LaunchPlan",
    "LaunchSpec",
    "MoldFile",
    "ParamSpace",
    "Parameter",
    "Prediction",
    "Problem",
    "SearchBudget",
    "SearchState",
    "SurrogateModel",
    "TrialRecord",
    "ask",
    "bind_env",
    "build_plan",
    "edp",
    "fit",
    "lcb",
    "load_problem",
    "parse_geopm_report",
    "parse_runtime",
    "render",
    "run_search",
    "tell",
    "theta_depth_map",
]
