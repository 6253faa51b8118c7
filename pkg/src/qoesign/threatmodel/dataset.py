"""JSON persistence for threat models and their assessment entries."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

from qoesign.errors import ThreatModelError, ValidationError
from qoesign.threatmodel.types import (
    ComponentKind,
    DfdComponent,
    DfdModel,
    Mitigation,
    Stride,
    ThreatEntry,
    TrustBoundary,
)

BUNDLED_DATASET = "ida_qes_threats"


def load_dataset(path: str | Path) -> tuple[DfdModel, list[ThreatEntry]]:
    """Load a model plus entries from a JSON file."""
    raw = Path(path).read_text(encoding="utf-8")
    return parse_dataset(raw)


def load_bundled_dataset(name: str = BUNDLED_DATASET) -> tuple[DfdModel, list[ThreatEntry]]:
    """Load one of the datasets shipped inside the package."""
    ref = resources.files("qoesign.threatmodel.data").joinpath(f"{name}.json")
    try:
        raw = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ThreatModelError(f"no bundled dataset named {name!r}") from None
    return parse_dataset(raw)


def parse_dataset(raw: str) -> tuple[DfdModel, list[ThreatEntry]]:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ThreatModelError(f"dataset is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "model" not in doc or "entries" not in doc:
        raise ThreatModelError("dataset must be an object with 'model' and 'entries'")
    model = _parse_model(doc["model"])
    entries = [_parse_entry(item, i) for i, item in enumerate(doc["entries"])]
    return model, entries


def dump_dataset(model: DfdModel, entries: list[ThreatEntry]) -> str:
    doc = {
        "model": {
            "components": [_component_to_json(c) for c in model.components],
            "trust_boundaries": [
                {"id": b.id, "label": b.label, "members": list(b.members)}
                for b in model.trust_boundaries
            ],
        },
        "entries": [_entry_to_json(e) for e in entries],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _parse_model(doc: Any) -> DfdModel:
    if not isinstance(doc, dict):
        raise ThreatModelError("'model' must be an object")
    components = []
    for item in doc.get("components", []):
        endpoints = item.get("endpoints")
        components.append(
            DfdComponent(
                id=item["id"],
                kind=ComponentKind(item["kind"]),
                label=item.get("label", item["id"]),
                endpoints=tuple(endpoints) if endpoints is not None else None,
            )
        )
    boundaries = [
        TrustBoundary(id=item["id"], label=item.get("label", item["id"]),
                      members=tuple(item["members"]))
        for item in doc.get("trust_boundaries", [])
    ]
    return DfdModel(components=tuple(components), trust_boundaries=tuple(boundaries))


def _parse_entry(item: Any, index: int) -> ThreatEntry:
    if not isinstance(item, dict):
        raise ThreatModelError(f"entry {index} must be an object")
    try:
        same_as = item.get("same_as")
        return ThreatEntry(
            component_id=item["component"],
            stride=Stride(item["stride"]),
            description=item.get("description", ""),
            impact=item.get("impact"),
            likelihood=item.get("likelihood"),
            mitigation=Mitigation(item["mitigation"]) if "mitigation" in item else None,
            mitigation_note=item.get("mitigation_note", ""),
            same_as=(same_as[0], Stride(same_as[1])) if same_as is not None else None,
        )
    except (KeyError, ValueError) as exc:
        raise ThreatModelError(f"entry {index} is malformed: {exc}") from exc
    except ValidationError as exc:
        raise ThreatModelError(f"entry {index} is invalid: {exc}") from exc


def _component_to_json(c: DfdComponent) -> dict[str, Any]:
    doc: dict[str, Any] = {"id": c.id, "kind": c.kind.value, "label": c.label}
    if c.endpoints is not None:
        doc["endpoints"] = list(c.endpoints)
    return doc


def _entry_to_json(e: ThreatEntry) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "component": e.component_id,
        "stride": e.stride.value,
        "description": e.description,
    }
    if e.same_as is not None:
        doc["same_as"] = [e.same_as[0], e.same_as[1].value]
        return doc
    doc["impact"] = e.impact
    doc["likelihood"] = e.likelihood
    doc["mitigation"] = e.mitigation.value if e.mitigation is not None else None
    if e.mitigation_note:
        doc["mitigation_note"] = e.mitigation_note
    return doc
