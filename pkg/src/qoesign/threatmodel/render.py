"""Deterministic text rendering of scored threat matrices."""

from __future__ import annotations

import csv
import io

from qoesign.errors import ParameterError
from qoesign.threatmodel.types import Mitigation, Priority, Requirement, ScoredThreat

CSV_HEADER = (
    "component,stride,description,impact,likelihood,score,"
    "priority,mitigation,requirement"
)

_PRIORITY_TEXT = {Priority.HIGH: "High", Priority.MEDIUM: "Medium", Priority.LOW: "Low"}
_MITIGATION_TEXT = {
    Mitigation.GOOD_ENOUGH: "GoodEnough",
    Mitigation.NEEDS_IMPROVEMENT: "NeedsImprovement",
    Mitigation.OUT_OF_SCOPE: "OutOfScope",
}
_REQUIREMENT_TEXT = {
    Requirement.MUST_CONSIDER: "MustConsider",
    Requirement.BE_AWARE: "BeAware",
    Requirement.BACKLOG: "Backlog",
}


def render_matrix(scored: list[ScoredThreat], fmt: str = "markdown") -> str:
    if fmt == "csv":
        return _render_csv(scored)
    if fmt == "markdown":
        return _render_markdown(scored)
    raise ParameterError(f"unknown format {fmt!r}, expected 'csv' or 'markdown'")


def _render_csv(scored: list[ScoredThreat]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for s in scored:
        writer.writerow(
            [
                s.entry.component_id,
                s.entry.stride.name,
                s.entry.description,
                s.impact,
                s.likelihood,
                s.score,
                _PRIORITY_TEXT[s.priority],
                _MITIGATION_TEXT[s.mitigation],
                _REQUIREMENT_TEXT[s.requirement],
            ]
        )
    return out.getvalue()


def _render_markdown(scored: list[ScoredThreat]) -> str:
    lines = [
        "| Component | STRIDE | Description | Priority (score, I, L) "
        "| Mitigation | Requirement |",
        "| --- | --- | --- | --- | --- | --- |",
    ]
    for s in scored:
        priority = (
            f"{_PRIORITY_TEXT[s.priority]} ({s.score}, I.{s.impact}, L.{s.likelihood})"
        )
        description = s.entry.description.replace("|", "\\|")
        lines.append(
            f"| {s.entry.component_id} | {s.entry.stride.name} | {description} "
            f"| {priority} | {_MITIGATION_TEXT[s.mitigation]} "
            f"| {_REQUIREMENT_TEXT[s.requirement]} |"
        )
    return "\n".join(lines) + "\n"
