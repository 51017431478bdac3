from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

STAGES = ("logical", "temporal", "motional-syntax", "motional-functional")


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one verification gate.

    ``rho`` is absent for the syntax layer and when evaluation itself was
    impossible (e.g. a trajectory shorter than the formula needs); otherwise
    ``passed`` is exactly ``rho >= 0``.
    """

    stage: str
    passed: bool
    rho: Optional[float] = None
    diagnostic: str = ""
    path: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.rho is not None and self.passed != (self.rho >= 0):
            raise ValueError(f"pass flag {self.passed} contradicts rho={self.rho}")

    def to_dict(self) -> dict:
        return {"stage": self.stage, "passed": self.passed, "rho": self.rho, "diagnostic": self.diagnostic}


def describe_path(path) -> str:
    """One-line rendering of a critical path from :func:`stlplan.stl.explain`."""
    if not path:
        return ""
    steps = []
    for text, t, rho in path:
        short = text if len(text) <= 60 else text[:57] + "..."
        steps.append(f"{short} @t={t:g} (rho={rho:.4g})")
    leaf_text, leaf_t, leaf_rho = path[-1]
    head = f"violated by {leaf_text} at t={leaf_t:g} (rho={leaf_rho:.4g})" if path[0][2] < 0 else "satisfied"
    return head + "; path: " + " > ".join(steps)
