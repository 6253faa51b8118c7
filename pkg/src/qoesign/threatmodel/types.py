"""Data model for DFD-based threat analysis.

A DfdModel is the diagram (entities, processes, stores, flows, trust
boundaries); ThreatEntry rows attach one STRIDE finding to a component.
Rows that duplicate an earlier finding carry a `same_as` reference
instead of their own assessment and inherit the referent's numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from qoesign.errors import ThreatModelError, ValidationError


class ComponentKind(Enum):
    EXTERNAL_ENTITY = "external_entity"
    PROCESS = "process"
    DATA_STORE = "data_store"
    DATA_FLOW = "data_flow"
    INFO_FLOW = "info_flow"


FLOW_KINDS = {ComponentKind.DATA_FLOW, ComponentKind.INFO_FLOW}


class Stride(Enum):
    S = "s"
    T = "t"
    R = "r"
    I = "i"  # noqa: E741 - the STRIDE letter
    D = "d"
    E = "e"


# rank used for the stable (component_id, stride) ordering
STRIDE_ORDER = {s: k for k, s in enumerate(Stride)}


class Mitigation(Enum):
    GOOD_ENOUGH = "good_enough"
    NEEDS_IMPROVEMENT = "needs_improvement"
    OUT_OF_SCOPE = "out_of_scope"


class Priority(Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


class Requirement(Enum):
    MUST_CONSIDER = "must_consider"
    BE_AWARE = "be_aware"
    BACKLOG = "backlog"


class RuleMode(Enum):
    STATED = "stated"
    TABLE = "table"


@dataclass(frozen=True)
class DfdComponent:
    id: str
    kind: ComponentKind
    label: str
    endpoints: tuple[str, str] | None = None

    def __post_init__(self):
        is_flow = self.kind in FLOW_KINDS
        if is_flow and self.endpoints is None:
            raise ValidationError("endpoints", f"flow {self.id} needs endpoints")
        if not is_flow and self.endpoints is not None:
            raise ValidationError(
                "endpoints", f"{self.kind.value} {self.id} must not have endpoints"
            )


@dataclass(frozen=True)
class TrustBoundary:
    id: str
    label: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class DfdModel:
    components: tuple[DfdComponent, ...]
    trust_boundaries: tuple[TrustBoundary, ...] = ()

    def __post_init__(self):
        ids = [c.id for c in self.components]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ThreatModelError(f"duplicate component ids: {dupes}", dupes)
        by_id = {c.id: c for c in self.components}
        bad = []
        for c in self.components:
            if c.endpoints is None:
                continue
            for end in c.endpoints:
                target = by_id.get(end)
                if target is None or target.kind in FLOW_KINDS:
                    bad.append((c.id, end))
        if bad:
            raise ThreatModelError(
                f"flow endpoints must reference existing non-flow components: {bad}",
                bad,
            )
        unknown = [
            (b.id, m)
            for b in self.trust_boundaries
            for m in b.members
            if m not in by_id
        ]
        if unknown:
            raise ThreatModelError(f"trust boundary members unknown: {unknown}", unknown)

    def component(self, component_id: str) -> DfdComponent:
        for c in self.components:
            if c.id == component_id:
                return c
        raise ThreatModelError(f"unknown component: {component_id}", [component_id])


@dataclass(frozen=True)
class ThreatEntry:
    component_id: str
    stride: Stride
    description: str
    impact: int | None = None
    likelihood: int | None = None
    mitigation: Mitigation | None = None
    mitigation_note: str = ""
    same_as: tuple[str, Stride] | None = None

    def __post_init__(self):
        if self.same_as is not None:
            for name in ("impact", "likelihood", "mitigation"):
                if getattr(self, name) is not None:
                    raise ValidationError(
                        name, f"same_as row {self.key()} must not carry {name}"
                    )
            return
        for name in ("impact", "likelihood"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 1 <= v <= 4:
                raise ValidationError(name, f"must be an integer in 1..4, got {v!r}")
        if self.mitigation is None:
            raise ValidationError("mitigation", f"missing on {self.key()}")

    def key(self) -> tuple[str, Stride]:
        return (self.component_id, self.stride)


@dataclass(frozen=True)
class ScoredThreat:
    entry: ThreatEntry
    score: int
    priority: Priority
    requirement: Requirement
    rule_mode: RuleMode
    # assessment after same_as resolution (equal to the entry's own fields
    # for directly assessed rows)
    impact: int = 0
    likelihood: int = 0
    mitigation: Mitigation = Mitigation.OUT_OF_SCOPE
