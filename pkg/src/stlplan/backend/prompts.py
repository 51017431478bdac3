"""Prompt assembly from the text templates in ``templates/``.

Task and time prompts carry the scenario description, the I/O format and
few-shot examples; the task prompt adds the STL introduction and formula
unless the STL ablation is on.  The trajectory prompt carries the task, the
kinematic model and the output format.  A failed previous attempt is appended
as feedback.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import yaml

from ..signal import format_target
from ..stl import print_stl

TEMPLATE_DIR = Path(__file__).parent / "templates"


@lru_cache(maxsize=None)
def template(name: str) -> str:
    return (TEMPLATE_DIR / name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _examples() -> dict:
    return yaml.safe_load(template("examples.yaml"))


@dataclass(frozen=True)
class PromptBundle:
    stage: str
    system: str
    scenario: str
    io_format: str
    examples: str
    task: str
    stl_intro: Optional[str] = None
    feedback: Optional[str] = None

    def user_text(self) -> str:
        parts = [self.scenario]
        if self.stl_intro:
            parts.append(self.stl_intro)
        parts += [self.io_format, self.examples, self.task]
        if self.feedback:
            parts.append(self.feedback)
        return "\n\n".join(p.strip() for p in parts if p and p.strip()) + "\n"

    def messages(self) -> list[dict]:
        return [{"role": "system", "content": self.system}, {"role": "user", "content": self.user_text()}]

    def text(self) -> str:
        return self.system.strip() + "\n\n" + self.user_text()


def _feedback_text(feedback) -> Optional[str]:
    if feedback is None:
        return None
    return template("feedback.txt").format(previous=feedback.previous_output.rstrip(), diagnostic=feedback.diagnostic)


def _render_examples(stage: str, with_stl: bool) -> str:
    blocks = []
    for ex in _examples()[stage]:
        lines = [f"Instruction: {ex['instruction']}"]
        if with_stl and "stl" in ex:
            lines.append(f"STL: {ex['stl']}")
        if "subgoals" in ex:
            lines.append("Subgoals: " + ", ".join(ex["subgoals"]))
        lines.append("Output:")
        lines.append(ex["output"].rstrip())
        blocks.append("\n".join(lines))
    header = "Examples (illustrative, authored for this tool):"
    return header + "\n\n" + "\n\n".join(blocks)


def task_prompt(req) -> PromptBundle:
    with_stl = not req.ablation_no_stl
    task = f"Instruction: {req.instruction}"
    if with_stl and req.formula is not None:
        task += f"\nSTL: {print_stl(req.formula)}"
    task += "\nOutput:"
    return PromptBundle(
        stage="task",
        system=template("system.txt"),
        scenario=req.scenario.describe(),
        io_format=template("task_format.txt"),
        examples=_render_examples("task", with_stl),
        task=task,
        stl_intro=template("stl_intro.txt") if with_stl else None,
        feedback=_feedback_text(req.feedback),
    )


def time_prompt(req) -> PromptBundle:
    seq = ", ".join(format_target(g) for g in req.subgoals)
    return PromptBundle(
        stage="time",
        system=template("system.txt"),
        scenario=req.scenario.describe(),
        io_format=template("time_format.txt"),
        examples=_render_examples("time", False),
        task=f"Instruction: {req.instruction}\nSubgoals: {seq}\nOutput:",
        feedback=_feedback_text(req.feedback),
    )


def trajectory_prompt(req, v_max: float, omega_max: float) -> PromptBundle:
    return PromptBundle(
        stage="trajectory",
        system=template("system.txt"),
        scenario=f"Task: {req.instruction}",
        io_format=template("trajectory_format.txt"),
        examples="",
        task=template("kinematics.txt").format(v_max=f"{v_max:g}", omega_max=f"{omega_max:g}"),
        feedback=_feedback_text(req.feedback),
    )
