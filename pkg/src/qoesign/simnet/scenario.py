"""Scenario configuration and run transcripts.

A scenario fixes the topology (n, t, suite), the seed, the user's
approval policy, a fault schedule, and the outcome the run must reach.
Scenario files are JSON mirrors of ScenarioConfig; the bundled corpus
lives in the `scenarios/` data directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from qoesign.errors import ConfigError

FAULT_ACTIONS = {
    "drop_node",
    "tamper_body",
    "spoof_sender",
    "duplicate_message",
    "flood",
    "partition",
    "forge_ledger_entry",
}

OUTCOME_KINDS = {"completes", "aborts_with", "detects_misbehavior"}


@dataclass(frozen=True)
class Fault:
    action: str
    at_step: int = 0
    node: str | None = None          # drop_node, flood target
    src: str | None = None           # tamper_body
    dst: str | None = None           # tamper_body
    kind: str | None = None          # tamper_body: only messages of this kind
    after_sends: str | None = None   # drop_node: trigger after the node sends this kind
    claimed: str | None = None       # spoof_sender
    target: str | None = None        # spoof_sender destination
    count: int = 1                   # flood size
    nodes: tuple[str, ...] = ()      # partition set

    def __post_init__(self):
        if self.action not in FAULT_ACTIONS:
            raise ConfigError(f"unknown fault action {self.action!r}")
        if self.at_step < 0:
            raise ConfigError("at_step must be non-negative")
        if self.action == "drop_node" and not self.node:
            raise ConfigError("drop_node needs a node id")
        if self.action == "tamper_body" and not (self.src and self.dst):
            raise ConfigError("tamper_body needs src and dst")
        if self.action == "spoof_sender" and not self.claimed:
            raise ConfigError("spoof_sender needs the claimed node id")
        if self.action == "flood" and (not self.node or self.count < 1):
            raise ConfigError("flood needs a target node and a positive count")
        if self.action == "partition" and not self.nodes:
            raise ConfigError("partition needs a non-empty node set")


@dataclass(frozen=True)
class ExpectedOutcome:
    kind: str
    reason: str | None = None   # aborts_with
    holder: str | None = None   # detects_misbehavior

    def __post_init__(self):
        if self.kind not in OUTCOME_KINDS:
            raise ConfigError(f"unknown outcome kind {self.kind!r}")
        if self.kind == "aborts_with" and not self.reason:
            raise ConfigError("aborts_with needs a reason")
        if self.kind == "detects_misbehavior" and not self.holder:
            raise ConfigError("detects_misbehavior needs a holder")

    def as_string(self) -> str:
        if self.kind == "completes":
            return "completes"
        if self.kind == "aborts_with":
            return f"aborts:{self.reason}"
        return f"detects_misbehavior:{self.holder}"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    n: int
    t: int
    suite_id: str
    seed: int
    expected_outcome: ExpectedOutcome
    faults: tuple[Fault, ...] = ()
    user_policy: str = "approve"
    transport_auth: bool = True

    def __post_init__(self):
        if not self.name:
            raise ConfigError("scenario needs a name")
        if not 1 <= self.t <= self.n:
            raise ConfigError(f"need 1 <= t <= n, got t={self.t}, n={self.n}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.user_policy not in ("approve", "deny"):
            raise ConfigError(f"unknown user policy {self.user_policy!r}")
        valid = self.node_ids()
        for fault in self.faults:
            for ref in (
                fault.node, fault.src, fault.dst, fault.claimed, fault.target,
                *fault.nodes,
            ):
                if ref is not None and ref not in valid:
                    raise ConfigError(
                        f"fault references unknown node {ref!r} (valid: {sorted(valid)})"
                    )

    def node_ids(self) -> set[str]:
        ids = {"user", "coordinator"}
        ids.update(f"qtsp-{i}" for i in range(1, self.n + 1))
        return ids


def _fault_from_dict(raw: dict) -> Fault:
    if not isinstance(raw, dict) or "action" not in raw:
        raise ConfigError(f"fault must be an object with an action: {raw!r}")
    known = {
        "action", "at_step", "node", "src", "dst", "kind", "after_sends",
        "claimed", "target", "count", "nodes",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown fault fields {sorted(unknown)}")
    kwargs = dict(raw)
    if "nodes" in kwargs:
        kwargs["nodes"] = tuple(kwargs["nodes"])
    return Fault(**kwargs)


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    try:
        outcome_raw = raw["expected_outcome"]
        outcome = ExpectedOutcome(
            kind=outcome_raw["kind"],
            reason=outcome_raw.get("reason"),
            holder=outcome_raw.get("holder"),
        )
        return ScenarioConfig(
            name=raw["name"],
            n=raw["n"],
            t=raw["t"],
            suite_id=raw.get("suite_id", "schnorr-toy-v1"),
            seed=raw["seed"],
            expected_outcome=outcome,
            faults=tuple(_fault_from_dict(f) for f in raw.get("faults", [])),
            user_policy=raw.get("user_policy", "approve"),
            transport_auth=raw.get("transport_auth", True),
        )
    except KeyError as exc:
        raise ConfigError(f"scenario is missing required field {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"malformed scenario: {exc}") from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file is not valid JSON: {exc}") from exc
    return scenario_from_dict(raw)


def bundled_scenario_names() -> list[str]:
    root = resources.files("qoesign.simnet") / "scenarios"
    return sorted(
        entry.name[: -len(".json")]
        for entry in root.iterdir()
        if entry.name.endswith(".json")
    )


def load_bundled_scenario(name: str) -> ScenarioConfig:
    root = resources.files("qoesign.simnet") / "scenarios"
    candidate = root / f"{name}.json"
    try:
        raw = json.loads(candidate.read_text())
    except (FileNotFoundError, NotADirectoryError):
        raise ConfigError(
            f"no bundled scenario {name!r}; available: {bundled_scenario_names()}"
        ) from None
    return scenario_from_dict(raw)


@dataclass
class Transcript:
    """Stable-field-order run record; hashable for golden-file diffing."""

    scenario: str
    seed: int
    n: int
    t: int
    suite_id: str
    outcome: str
    signature_hex: str
    sessions: list[dict] = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    ledger: dict = field(default_factory=dict)
    assertion_failures: list[str] = field(default_factory=list)

    FIELD_ORDER = (
        "scenario", "seed", "n", "t", "suite_id", "outcome", "signature_hex",
        "sessions", "counters", "ledger", "assertion_failures",
    )

    def to_json(self) -> str:
        payload = {name: getattr(self, name) for name in self.FIELD_ORDER}
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()
