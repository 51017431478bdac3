"""Verified cascaded task, time and trajectory planning with STL."""

from .backend import LlmBackend, OracleBackend, ReplayBackend, make_backend
from .bench import load_suite, run_ablation, run_suite
from .pipeline import PipelineConfig, logical_verify, run_pipeline, temporal_verify
from .plot import export_plot
from .signal import SubgoalSequence, TimedTrajectory, TimedWaypoints, derive_channels
from .stl import parse_stl, print_stl, robustness
from .world import Scenario, builtin_scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "LlmBackend", "OracleBackend", "ReplayBackend", "make_backend", "load_suite", "run_ablation",
    "run_suite", "PipelineConfig", "logical_verify", "run_pipeline", "temporal_verify", "export_plot",
    "SubgoalSequence", "TimedTrajectory", "TimedWaypoints", "derive_channels", "parse_stl",
    "print_stl", "robustness", "Scenario", "builtin_scenario", "load_scenario",
]
