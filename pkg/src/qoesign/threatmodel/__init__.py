"""STRIDE-per-component threat enumeration with impact/likelihood scoring.

The module models a signing ecosystem as data-flow-diagram components,
assigns each (component, threat class) cell an impact and likelihood on
1..4 scales, and folds the product into priority and requirement groups
that drive which mitigations the architecture must address.
"""

from qoesign.threatmodel.dataset import (
    BUNDLED_DATASET,
    dump_dataset,
    load_bundled_dataset,
    load_dataset,
    parse_dataset,
)
from qoesign.threatmodel.render import CSV_HEADER, render_matrix
from qoesign.threatmodel.scoring import (
    priority_group,
    priority_score,
    requirement_group,
    score_model,
)
from qoesign.threatmodel.types import (
    ComponentKind,
    DfdComponent,
    DfdModel,
    Mitigation,
    Priority,
    Requirement,
    RuleMode,
    ScoredThreat,
    Stride,
    ThreatEntry,
    TrustBoundary,
)

__all__ = [
    "BUNDLED_DATASET",
    "CSV_HEADER",
    "ComponentKind",
    "DfdComponent",
    "DfdModel",
    "Mitigation",
    "Priority",
    "Requirement",
    "RuleMode",
    "ScoredThreat",
    "Stride",
    "ThreatEntry",
    "TrustBoundary",
    "dump_dataset",
    "load_bundled_dataset",
    "load_dataset",
    "parse_dataset",
    "priority_group",
    "priority_score",
    "requirement_group",
    "render_matrix",
    "score_model",
]
