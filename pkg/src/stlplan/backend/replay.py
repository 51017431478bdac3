"""Backend that returns recorded raw outputs from a fixture directory.

Layout: ``<root>/<task_id>/<stage>_<attempt>.txt``, where ``attempt`` counts
calls of that stage for the task from 0 across outer restarts.
"""

from __future__ import annotations

from pathlib import Path

from .base import PlannerBackend, PlanRequest
from .errors import TransportError


class FixtureMissing(TransportError):
    pass


def fixture_path(root, task_id: str, stage: str, attempt: int) -> Path:
    return Path(root) / task_id / f"{stage}_{attempt}.txt"


class ReplayBackend(PlannerBackend):
    name = "replay"

    def __init__(self, root, **kwargs):
        super().__init__(**kwargs)
        self.root = Path(root)

    def generate(self, req: PlanRequest, prompt) -> str:
        path = fixture_path(self.root, req.task_id, req.stage, req.attempt)
        try:
            return path.read_bytes().decode("utf-8")
        except FileNotFoundError:
            raise FixtureMissing(f"no recorded output {path}") from None
