"""Deterministic network simulator: envelopes, scenarios, fault injection."""

from qoesign.simnet.envelope import (
    ChannelGuard,
    Envelope,
    TransportKeys,
    seal,
    tag_is_valid,
)
from qoesign.simnet.scenario import (
    ExpectedOutcome,
    Fault,
    ScenarioConfig,
    Transcript,
    bundled_scenario_names,
    load_bundled_scenario,
    load_scenario,
    scenario_from_dict,
)
from qoesign.simnet.sim import Simulation, run_scenario

__all__ = [
    "ChannelGuard",
    "Envelope",
    "ExpectedOutcome",
    "Fault",
    "ScenarioConfig",
    "Simulation",
    "Transcript",
    "TransportKeys",
    "bundled_scenario_names",
    "load_bundled_scenario",
    "load_scenario",
    "run_scenario",
    "scenario_from_dict",
    "seal",
    "tag_is_valid",
]
