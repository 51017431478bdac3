from .base import STAGES, CallRecord, Feedback, PlannerBackend, PlanRequest
from .errors import TransportError, UnparseableOutput
from .formats import (
    BuiltinSpec,
    format_builtin,
    format_subgoals,
    format_waypoints,
    parse_controller,
    parse_subgoals,
    parse_waypoints,
)
from .llm import LlmBackend
from .oracle import OracleBackend
from .prompts import PromptBundle
from .replay import FixtureMissing, ReplayBackend

__all__ = [
    "STAGES", "CallRecord", "Feedback", "PlannerBackend", "PlanRequest", "TransportError",
    "UnparseableOutput", "BuiltinSpec", "format_builtin", "format_subgoals", "format_waypoints",
    "parse_controller", "parse_subgoals", "parse_waypoints", "LlmBackend", "OracleBackend",
    "PromptBundle", "FixtureMissing", "ReplayBackend", "make_backend",
]


def make_backend(kind: str, replay_dir=None, **kwargs) -> PlannerBackend:
    """Backend by CLI name: ``oracle``, ``replay`` or ``llm``."""
    if kind == "oracle":
        return OracleBackend(**kwargs)
    if kind == "replay":
        if replay_dir is None:
            raise ValueError("the replay backend needs a fixture directory")
        return ReplayBackend(replay_dir, **kwargs)
    if kind == "llm":
        return LlmBackend.from_env(**kwargs)
    raise ValueError(f"unknown backend {kind!r}")
