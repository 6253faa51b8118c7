"""Threat prioritization and requirement-group mapping.

Priority score is impact x likelihood on two 1..4 scales. The priority
group is High for scores 11..16 and always High when either factor is 4;
Medium covers 6..10, Low covers 1..5. Requirement groups come in two
rule modes:

* STATED: only High+NeedsImprovement is must-consider and only
  Medium+NeedsImprovement is be-aware; everything else lands in the
  backlog.
* TABLE (default): additionally keeps every High-priority threat and
  every unmitigated (NeedsImprovement) threat visible as be-aware; only
  Medium/Low threats that are already handled or out of scope go to the
  backlog. This is the mapping the bundled golden dataset satisfies
  row-for-row.

The two modes disagree exactly on {High+GoodEnough, High+OutOfScope,
Low+NeedsImprovement}.
"""

from __future__ import annotations

from qoesign.errors import ThreatModelError, ValidationError
from qoesign.threatmodel.types import (
    STRIDE_ORDER,
    DfdModel,
    Mitigation,
    Priority,
    Requirement,
    RuleMode,
    ScoredThreat,
    ThreatEntry,
)

MAX_SAME_AS_HOPS = 3


def _check_scale(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 4:
        raise ValidationError(name, f"must be an integer in 1..4, got {value!r}")


def priority_score(impact: int, likelihood: int) -> int:
    _check_scale("impact", impact)
    _check_scale("likelihood", likelihood)
    return impact * likelihood


def priority_group(impact: int, likelihood: int) -> Priority:
    score = priority_score(impact, likelihood)
    if score >= 11 or impact == 4 or likelihood == 4:
        return Priority.HIGH
    if score >= 6:
        return Priority.MEDIUM
    return Priority.LOW


def requirement_group(
    priority: Priority, mitigation: Mitigation, rule_mode: RuleMode = RuleMode.TABLE
) -> Requirement:
    needs_work = mitigation is Mitigation.NEEDS_IMPROVEMENT
    if rule_mode is RuleMode.STATED:
        if priority is Priority.HIGH and needs_work:
            return Requirement.MUST_CONSIDER
        if priority is Priority.MEDIUM and needs_work:
            return Requirement.BE_AWARE
        return Requirement.BACKLOG
    if priority is Priority.HIGH:
        return Requirement.MUST_CONSIDER if needs_work else Requirement.BE_AWARE
    return Requirement.BE_AWARE if needs_work else Requirement.BACKLOG


def _resolve(
    entry: ThreatEntry, by_key: dict[tuple, ThreatEntry]
) -> ThreatEntry:
    """Follow same_as references to the row carrying the assessment."""
    current = entry
    seen = [current.key()]
    hops = 0
    while current.same_as is not None:
        hops += 1
        if hops > MAX_SAME_AS_HOPS:
            raise ThreatModelError(
                f"same_as chain from {entry.key()} exceeds {MAX_SAME_AS_HOPS} hops",
                seen,
            )
        target = by_key.get(current.same_as)
        if target is None:
            raise ThreatModelError(
                f"same_as reference {current.same_as} from {current.key()} "
                "does not resolve",
                [current.key()],
            )
        if target.key() in seen:
            raise ThreatModelError(
                f"same_as cycle through {target.key()}", seen + [target.key()]
            )
        seen.append(target.key())
        current = target
    return current


def score_model(
    model: DfdModel,
    entries: list[ThreatEntry],
    rule_mode: RuleMode = RuleMode.TABLE,
) -> list[ScoredThreat]:
    """Score every entry; same_as rows inherit the referent's assessment."""
    component_ids = {c.id for c in model.components}
    dangling = sorted(
        {e.component_id for e in entries if e.component_id not in component_ids}
    )
    if dangling:
        raise ThreatModelError(
            f"entries reference unknown components: {dangling}", dangling
        )
    by_key = {}
    for e in entries:
        if e.key() in by_key:
            raise ThreatModelError(f"duplicate threat entry {e.key()}", [e.key()])
        by_key[e.key()] = e

    scored = []
    for e in entries:
        basis = _resolve(e, by_key)
        score = priority_score(basis.impact, basis.likelihood)
        prio = priority_group(basis.impact, basis.likelihood)
        scored.append(
            ScoredThreat(
                entry=e,
                score=score,
                priority=prio,
                requirement=requirement_group(prio, basis.mitigation, rule_mode),
                rule_mode=rule_mode,
                impact=basis.impact,
                likelihood=basis.likelihood,
                mitigation=basis.mitigation,
            )
        )
    scored.sort(key=lambda s: (s.entry.component_id, STRIDE_ORDER[s.entry.stride]))
    return scored
