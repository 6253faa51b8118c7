"""Deterministic discrete-event network simulator for signing runs.

Single-threaded: a seeded heap of (time, seq, from, to) events fully
determines a run. The coordinator is a distinct logical node colocated
with qtsp-1 (dropping either drops both). Nodes exchange authenticated
envelopes; faults are applied exactly at their configured step, so the
same seed always yields the same transcript bytes.

Timeout discipline: the coordinator retransmits an unanswered request
up to three times, then declares the participant lost. A lost QTSP is
replaced and the session restarted (at most three restarts); a lost
user aborts the run. Nodes answer retransmissions from caches, so a
request never makes a node reuse a nonce for new material.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Any

from qoesign.errors import (
    ConfigError,
    LedgerUnavailable,
    MisbehaviorError,
    ProtocolViolation,
)
from qoesign.ledger.audit import user_audit
from qoesign.ledger.chain import EntryKind, Ledger
from qoesign.protocol.keys import AccessStructure, DistributedKey, Holder, dkg
from qoesign.protocol.messages import ProtocolMessage, decode_message
from qoesign.protocol.nodes import QtspNode, UserNode
from qoesign.protocol.session import (
    Decision,
    SessionState,
    SigningSession,
    aggregate,
    approve,
    contribute_nonce,
    contribute_partial,
    start_session,
)
from qoesign.simnet.envelope import ChannelGuard, Envelope, TransportKeys, seal
from qoesign.simnet.scenario import Fault, ScenarioConfig, Transcript
from qoesign.suites.registry import SuiteRegistry
from qoesign.suites.schnorr import Signature, schnorr_verify
from qoesign.suites import default_registry

HOP_LATENCY = 1
ACK_WAIT = 4
RESPONSE_WAIT = 8
MAX_ATTEMPTS = 3
MAX_RESTARTS = 3

COORD = "coordinator"
USER = "user"


def _derived_rng(seed: int, label: str) -> random.Random:
    material = seed.to_bytes(8, "big") + label.encode()
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def _qtsp_id(index: int) -> str:
    return f"qtsp-{index}"


def _qtsp_index(node_id: str) -> int:
    return int(node_id.split("-", 1)[1])


@dataclass
class _SimQtsp:
    node_id: str
    node: QtspNode
    key: DistributedKey
    suite: Any
    partial_cache: dict[bytes, int] = field(default_factory=dict)

    def handle(self, msg: ProtocolMessage) -> list[tuple[str, str, dict]]:
        if msg.kind == "invite":
            return [(COORD, "invite-ack", {})]
        if msg.kind == "nonce-request":
            commitment = self.node.commit_nonce(msg.session_id, self.suite)
            return [(COORD, "nonce-response", {"commitment": commitment})]
        if msg.kind == "partial-request":
            if msg.session_id not in self.partial_cache:
                self.partial_cache[msg.session_id] = self.node.produce_partial(
                    self.suite,
                    msg.session_id,
                    bytes.fromhex(msg.payload["message_hash"]),
                    self.key.group_public_key,
                    msg.payload["aggregate_commitment"],
                    set(msg.payload["participants"]),
                )
            return [(COORD, "partial-response", {"z": self.partial_cache[msg.session_id]})]
        return []


@dataclass
class _SimUser:
    node_id: str
    node: UserNode
    key: DistributedKey
    suite: Any
    decisions: dict[bytes, Decision] = field(default_factory=dict)
    partial_cache: dict[bytes, int] = field(default_factory=dict)

    def handle(self, msg: ProtocolMessage, now: int) -> list[tuple[str, str, dict]]:
        if msg.kind == "invite":
            return [(COORD, "invite-ack", {})]
        if msg.kind == "approval-request":
            if msg.session_id not in self.decisions:
                self.decisions[msg.session_id] = self.node.decide(
                    msg.session_id, bytes.fromhex(msg.payload["message_hash"]), now
                )
            decision = self.decisions[msg.session_id]
            return [(COORD, "approval-response", {"decision": decision.value})]
        if msg.kind == "nonce-request":
            commitment = self.node.commit_nonce(msg.session_id, self.suite)
            return [(COORD, "nonce-response", {"commitment": commitment})]
        if msg.kind == "partial-request":
            if msg.session_id not in self.partial_cache:
                self.partial_cache[msg.session_id] = self.node.produce_partial(
                    self.suite,
                    msg.session_id,
                    bytes.fromhex(msg.payload["message_hash"]),
                    self.key.group_public_key,
                    msg.payload["aggregate_commitment"],
                )
            return [(COORD, "partial-response", {"z": self.partial_cache[msg.session_id]})]
        return []


class Simulation:
    """One seeded scenario run. Build, then call run() exactly once."""

    def __init__(self, config: ScenarioConfig, registry: SuiteRegistry | None = None):
        self.config = config
        registry = registry or default_registry()
        try:
            self.suite = registry.resolve(config.suite_id)
        except Exception as exc:
            raise ConfigError(f"scenario suite: {exc}") from exc
        if not self.suite.threshold_capable:
            raise ConfigError(f"suite {config.suite_id!r} cannot host threshold keys")

        self.message_hash = hashlib.sha256(b"scenario:" + config.name.encode()).digest()
        self.node_ids = [USER, COORD] + [_qtsp_id(i) for i in range(1, config.n + 1)]
        self.keys = TransportKeys(config.seed, self.node_ids)
        self.key, shares = dkg(
            AccessStructure(t=config.t, n=config.n),
            self.suite,
            _derived_rng(config.seed, "dkg"),
        )
        self.user = _SimUser(
            node_id=USER,
            node=UserNode(
                user_id=USER,
                share=shares[Holder.user()],
                rng=_derived_rng(config.seed, USER),
                policy=config.user_policy,
            ),
            key=self.key,
            suite=self.suite,
        )
        self.qtsps = {
            _qtsp_id(i): _SimQtsp(
                node_id=_qtsp_id(i),
                node=QtspNode(
                    index=i,
                    share=shares[Holder.qtsp(i)],
                    rng=_derived_rng(config.seed, _qtsp_id(i)),
                ),
                key=self.key,
                suite=self.suite,
            )
            for i in range(1, config.n + 1)
        }
        self.guards = {
            node_id: ChannelGuard(keys=self.keys, enforce_auth=config.transport_auth)
            for node_id in self.node_ids
        }

        self._heap: list[tuple] = []
        self._enqueue_counter = 0
        self._send_seq: dict[tuple[str, str], int] = {}
        self._rng = _derived_rng(config.seed, "scheduler")
        self.now = 0
        self.steps = 0
        self.delivered = 0
        self.dropped = 0
        self.malformed = 0
        self.sends = 0

        self.dead: set[str] = set()
        self.partitions: list[frozenset[str]] = []
        self._armed_tampers: list[dict] = []
        self._conditional_drops: list[dict] = []
        self._last_delivered: Envelope | None = None
        indexed = sorted(enumerate(config.faults), key=lambda p: (p[1].at_step, p[0]))
        self._faults = [fault for _, fault in indexed]
        self._fault_idx = 0

        # coordinator state
        self.ledger = Ledger()
        self.sessions: list[SigningSession] = []
        self.session: SigningSession | None = None
        self.phase = "idle"
        self.generation = 0
        self.attempts = 0
        self.restarts = 0
        self.acked: set[str] = set()
        self.excluded: set[int] = set()
        self.finished = False
        self.outcome: str | None = None
        self.final_signature: Signature | None = None
        self.session_latency: int | None = None

        self.nonce_registry: dict[tuple[str, int], bytes] = {}
        self.assertion_failures: list[str] = []
        self.tap: list[dict] = []

        for fault in self._faults:
            if fault.action == "drop_node" and fault.after_sends:
                self._conditional_drops.append(
                    {"node": fault.node, "kind": fault.after_sends}
                )
        self._schedule_timer(0, {"kind": "bootstrap"})

    # -- scheduling ----------------------------------------------------

    def _push(self, at: int, seq: int, from_id: str, to_id: str, event) -> None:
        self._enqueue_counter += 1
        heapq.heappush(
            self._heap, (at, seq, from_id, to_id, self._enqueue_counter, event)
        )

    def _schedule_timer(self, delay: int, token: dict) -> None:
        token = dict(token, generation=self.generation)
        self._push(self.now + delay, 2**32 + self._enqueue_counter, "timer", COORD,
                   ("timer", token))

    def _send(self, from_id: str, to_id: str, kind: str, payload: dict,
              session_id: bytes, epoch: int) -> None:
        if from_id in self.dead:
            return
        msg = ProtocolMessage(
            session_id=session_id, epoch=epoch, sender=from_id, kind=kind,
            payload=payload,
        )
        direction = (from_id, to_id)
        seq = self._send_seq.get(direction, -1) + 1
        self._send_seq[direction] = seq
        envelope = seal(self.keys, from_id, to_id, seq, msg.encode())
        self.sends += 1
        self._push(self.now + HOP_LATENCY, seq, from_id, to_id, ("deliver", envelope))
        for drop in self._conditional_drops:
            if drop["node"] == from_id and drop["kind"] == kind:
                self._mark_dead(from_id)

    def _mark_dead(self, node_id: str) -> None:
        self.dead.add(node_id)
        # colocated: the coordinator runs on qtsp-1's host
        if node_id == "qtsp-1":
            self.dead.add(COORD)
        if node_id == COORD:
            self.dead.add("qtsp-1")

    def _partitioned(self, a: str, b: str) -> bool:
        return any((a in part) != (b in part) for part in self.partitions)

    # -- fault application ----------------------------------------------

    def _apply_fault(self, fault: Fault) -> None:
        if fault.action == "drop_node":
            if not fault.after_sends:
                self._mark_dead(fault.node)
        elif fault.action == "partition":
            self.partitions.append(frozenset(fault.nodes))
        elif fault.action == "tamper_body":
            self._armed_tampers.append(
                {"src": fault.src, "dst": fault.dst, "kind": fault.kind, "fired": False}
            )
        elif fault.action == "spoof_sender":
            target = fault.target or COORD
            body = ProtocolMessage(
                session_id=bytes(16), epoch=0, sender=fault.claimed,
                kind="approval-response", payload={"decision": "approve"},
            ).encode()
            forged = Envelope(
                from_id=fault.claimed, to_id=target,
                seq=self._send_seq.get((fault.claimed, target), -1) + 1,
                body=body, auth_tag=self._rng.randbytes(32),
            )
            self._push(self.now + HOP_LATENCY, forged.seq, fault.claimed, target,
                       ("deliver", forged))
        elif fault.action == "duplicate_message":
            if self._last_delivered is not None:
                env = self._last_delivered
                self._push(self.now + HOP_LATENCY, env.seq, env.from_id, env.to_id,
                           ("deliver", env))
        elif fault.action == "flood":
            for k in range(fault.count):
                junk = Envelope(
                    from_id=USER, to_id=fault.node, seq=10**9 + k,
                    body=self._rng.randbytes(24), auth_tag=self._rng.randbytes(32),
                )
                self._push(self.now + HOP_LATENCY, junk.seq, USER, fault.node,
                           ("deliver", junk))
        elif fault.action == "forge_ledger_entry":
            self.ledger.append(
                kind=EntryKind.SESSION_COMPLETED,
                session_id=_derived_rng(self.config.seed, "forged-session").randbytes(16),
                message_hash=hashlib.sha256(b"document the user never saw").digest(),
                suite_id=self.config.suite_id,
                participants=tuple(range(1, min(self.config.t, self.config.n) + 1)),
                signature=b"fabricated-by-ledger-host",
                timestamp=self.now,
            )

    def _maybe_tamper(self, envelope: Envelope) -> Envelope:
        for tamper in self._armed_tampers:
            if tamper["fired"]:
                continue
            if tamper["src"] != envelope.from_id or tamper["dst"] != envelope.to_id:
                continue
            if tamper["kind"] is not None:
                try:
                    kind = decode_message(envelope.body).kind
                except Exception:
                    continue
                if kind != tamper["kind"]:
                    continue
            tamper["fired"] = True
            body = self._tampered_body(envelope.body)
            return Envelope(
                from_id=envelope.from_id, to_id=envelope.to_id,
                seq=envelope.seq, body=body, auth_tag=envelope.auth_tag,
            )
        return envelope

    def _tampered_body(self, body: bytes) -> bytes:
        # a semantically valid but wrong partial exercises the protocol
        # layer check; anything else gets a blunt bit flip
        try:
            msg = decode_message(body)
        except Exception:
            msg = None
        if msg is not None and msg.kind == "partial-response":
            order = self.suite.group.order
            payload = dict(msg.payload, z=(msg.payload["z"] + 1) % order)
            return ProtocolMessage(
                session_id=msg.session_id, epoch=msg.epoch, sender=msg.sender,
                kind=msg.kind, payload=payload,
            ).encode()
        flipped = bytearray(body)
        flipped[-1] ^= 1
        return bytes(flipped)

    # -- event processing -------------------------------------------------

    def run(self) -> Transcript:
        while True:
            while (
                self._fault_idx < len(self._faults)
                and self._faults[self._fault_idx].at_step <= self.steps
            ):
                self._apply_fault(self._faults[self._fault_idx])
                self._fault_idx += 1
            if not self._heap:
                if self._fault_idx < len(self._faults):
                    # clock drained before this fault's step; apply now
                    self._apply_fault(self._faults[self._fault_idx])
                    self._fault_idx += 1
                    continue
                break
            at, seq, from_id, to_id, _, event = heapq.heappop(self._heap)
            self.now = at
            self.steps += 1
            kind, item = event
            if kind == "timer":
                self._on_timer(item)
            else:
                self._on_delivery(item)
        return self._transcript()

    def _on_delivery(self, envelope: Envelope) -> None:
        # in-flight messages from a node that died after sending still
        # arrive; only the receiver's death drops them
        if envelope.to_id in self.dead:
            self.dropped += 1
            return
        if self._partitioned(envelope.from_id, envelope.to_id):
            self.dropped += 1
            return
        envelope = self._maybe_tamper(envelope)
        self._record_tap(envelope)
        guard = self.guards[envelope.to_id]
        if not guard.accept(envelope):
            return
        self._last_delivered = envelope
        self.delivered += 1
        try:
            msg = decode_message(envelope.body)
        except Exception:
            self.malformed += 1
            return
        if envelope.to_id == COORD:
            self._coordinator_receive(envelope.from_id, msg)
        elif envelope.to_id == USER:
            for dst, kind, payload in self.user.handle(msg, self.now):
                self._send(USER, dst, kind, payload, msg.session_id, msg.epoch)
        elif envelope.to_id in self.qtsps:
            for dst, kind, payload in self.qtsps[envelope.to_id].handle(msg):
                self._send(envelope.to_id, dst, kind, payload, msg.session_id, msg.epoch)

    def _record_tap(self, envelope: Envelope) -> None:
        record = {"from": envelope.from_id, "to": envelope.to_id}
        try:
            msg = decode_message(envelope.body)
            record["kind"] = msg.kind
            record["payload"] = msg.payload
        except Exception:
            record["kind"] = "<opaque>"
            record["payload"] = {}
        self.tap.append(record)

    # -- coordinator ------------------------------------------------------

    def _broadcast(self, targets: list[str], kind: str, payload: dict) -> None:
        session_id = self.session.session_id if self.session else bytes(16)
        epoch = self.key.epoch
        for target in targets:
            self._send(COORD, target, kind, payload, session_id, epoch)

    def _finish(self, outcome: str) -> None:
        self.finished = True
        self.outcome = outcome

    def _abort_session(self, reason: str) -> None:
        if self.session is not None and self.session.state is not SessionState.ABORTED:
            self.session.abort(reason)
            self.ledger.append(
                kind=EntryKind.SESSION_ABORTED,
                session_id=self.session.session_id,
                message_hash=self.session.message_hash,
                suite_id=self.session.suite_id,
                participants=self.session.qtsp_participants,
                timestamp=self.now,
            )

    def _participant_targets(self) -> list[str]:
        ids = [_qtsp_id(i) for i in self.session.qtsp_participants]
        return ids + [USER]

    def _start_attempt(self) -> None:
        candidates = {
            _qtsp_index(node_id)
            for node_id in self.acked
            if node_id != USER and node_id not in self.dead
        } - self.excluded
        if USER not in self.acked:
            self._finish("aborts:user-unresponsive")
            return
        if len(candidates) < self.config.t:
            self._finish("aborts:insufficient-quorum")
            return
        self.generation += 1
        session_id = _derived_rng(
            self.config.seed, f"session-{self.generation}"
        ).randbytes(16)
        self.session = start_session(
            self.key, self.suite, self.message_hash, candidates, session_id=session_id
        )
        self.sessions.append(self.session)
        self.phase = "approval"
        self.attempts = 1
        self._broadcast([USER], "approval-request",
                        {"message_hash": self.message_hash.hex()})
        self._schedule_timer(RESPONSE_WAIT, {"kind": "phase-timeout", "phase": "approval"})

    def _on_timer(self, token: dict) -> None:
        if self.finished:
            return
        if token["kind"] == "bootstrap":
            self.phase = "ack"
            targets = [USER] + [_qtsp_id(i) for i in range(1, self.config.n + 1)]
            self._broadcast(targets, "invite", {"message_hash": self.message_hash.hex()})
            self._schedule_timer(ACK_WAIT, {"kind": "ack-timeout"})
            return
        if token.get("generation") != self.generation:
            return  # stale timer from a replaced session
        if token["kind"] == "ack-timeout":
            self._start_attempt()
            return
        if token["kind"] == "phase-timeout" and token["phase"] == self.phase:
            self._on_phase_timeout()

    def _on_phase_timeout(self) -> None:
        missing = self._missing()
        if not missing:
            return
        if self.attempts < MAX_ATTEMPTS:
            self.attempts += 1
            self._retransmit(missing)
            self._schedule_timer(RESPONSE_WAIT, {"kind": "phase-timeout", "phase": self.phase})
            return
        if USER in missing:
            self._abort_session("participant-lost")
            self._finish("aborts:participant-lost")
            return
        self.excluded.update(_qtsp_index(m) for m in missing if m != USER)
        self._abort_session("participant-lost")
        if self.restarts < MAX_RESTARTS:
            self.restarts += 1
            self._start_attempt()
        else:
            self._finish("aborts:participant-lost")

    def _missing(self) -> list[str]:
        if self.phase == "approval":
            responded = self.session.state is not SessionState.AWAITING_USER_APPROVAL
            return [] if responded else [USER]
        if self.phase == "nonce":
            return [
                str_id
                for str_id in self._participant_targets()
                if self._holder_of(str_id) not in self.session.nonce_commitments
            ]
        if self.phase == "partial":
            return [
                str_id
                for str_id in self._participant_targets()
                if self._holder_of(str_id) not in self.session.partials
            ]
        return []

    def _retransmit(self, targets: list[str]) -> None:
        if self.phase == "approval":
            self._broadcast(targets, "approval-request",
                            {"message_hash": self.message_hash.hex()})
        elif self.phase == "nonce":
            self._broadcast(targets, "nonce-request", {})
        elif self.phase == "partial":
            self._broadcast(targets, "partial-request", self._partial_payload())

    def _partial_payload(self) -> dict:
        return {
            "aggregate_commitment": self.session.aggregate_commitment,
            "participants": self.session.qtsp_participants,
            "message_hash": self.message_hash.hex(),
        }

    @staticmethod
    def _holder_of(node_id: str) -> Holder:
        return Holder.user() if node_id == USER else Holder.qtsp(_qtsp_index(node_id))

    def _coordinator_receive(self, from_id: str, msg: ProtocolMessage) -> None:
        if self.finished:
            return
        if msg.kind == "invite-ack":
            self.acked.add(from_id)
            return
        if self.session is None or msg.session_id != self.session.session_id:
            return  # late message for a replaced session
        holder = self._holder_of(from_id)
        if holder not in self.session.participants:
            return
        if msg.kind == "approval-response" and self.phase == "approval":
            decision = (
                Decision.APPROVE
                if msg.payload.get("decision") == "approve"
                else Decision.DENY
            )
            approve(self.session, decision, self.ledger, timestamp=self.now)
            if decision is Decision.DENY:
                self._finish("aborts:user-denied")
                return
            self.phase = "nonce"
            self.attempts = 1
            self._broadcast(self._participant_targets(), "nonce-request", {})
            self._schedule_timer(RESPONSE_WAIT, {"kind": "phase-timeout", "phase": "nonce"})
            return
        if msg.kind == "nonce-response" and self.phase == "nonce":
            if holder in self.session.nonce_commitments:
                return  # idempotent retransmission
            commitment = msg.payload["commitment"]
            seen = self.nonce_registry.get((from_id, commitment))
            if seen is not None and seen != msg.session_id:
                self.assertion_failures.append(
                    f"nonce commitment reuse by {from_id} across sessions"
                )
            self.nonce_registry[(from_id, commitment)] = msg.session_id
            try:
                contribute_nonce(self.session, self.suite, holder, commitment)
            except ProtocolViolation:
                return
            if self.session.state is SessionState.PARTIAL_SIGNING:
                self.phase = "partial"
                self.attempts = 1
                self.generation += 1  # invalidate nonce-phase timers
                self._broadcast(
                    self._participant_targets(), "partial-request",
                    self._partial_payload(),
                )
                self._schedule_timer(
                    RESPONSE_WAIT, {"kind": "phase-timeout", "phase": "partial"}
                )
            return
        if msg.kind == "partial-response" and self.phase == "partial":
            if holder in self.session.partials:
                return
            try:
                contribute_partial(self.session, self.suite, holder, msg.payload["z"])
            except MisbehaviorError as exc:
                self.ledger.append(
                    kind=EntryKind.SESSION_ABORTED,
                    session_id=self.session.session_id,
                    message_hash=self.session.message_hash,
                    suite_id=self.session.suite_id,
                    participants=self.session.qtsp_participants,
                    timestamp=self.now,
                )
                self._finish(f"detects_misbehavior:{exc.holder}")
                return
            if self.session.state is SessionState.AGGREGATED:
                try:
                    self.final_signature = aggregate(
                        self.session, self.suite, self.ledger, timestamp=self.now
                    )
                except LedgerUnavailable:
                    self.session.abort("ledger-unavailable")
                    self._finish("aborts:ledger-unavailable")
                    return
                self.session_latency = self.now
                self._finish("completes")

    # -- transcript ---------------------------------------------------------

    def _transcript(self) -> Transcript:
        flags = user_audit(self.ledger, self.user.node.approval_log)
        outcome = self.outcome or "aborts:stalled"
        if flags and not outcome.startswith("detects_misbehavior"):
            outcome = f"detects_misbehavior:{COORD}"
        if self.final_signature is not None:
            valid = schnorr_verify(
                self.suite,
                self.key.group_public_key,
                self.message_hash,
                self.final_signature,
                self.sessions[-1].session_id,
            )
            if not valid:
                self.assertion_failures.append("final signature failed verification")
        rejected_auth = sum(g.rejected_auth for g in self.guards.values())
        rejected_replay = sum(g.rejected_replay for g in self.guards.values())
        return Transcript(
            scenario=self.config.name,
            seed=self.config.seed,
            n=self.config.n,
            t=self.config.t,
            suite_id=self.config.suite_id,
            outcome=outcome,
            signature_hex=(
                self.final_signature.encode().hex() if self.final_signature else ""
            ),
            sessions=[
                {
                    "session_id": s.session_id.hex(),
                    "state": s.state.value,
                    "abort_reason": s.abort_reason or "",
                    "qtsp_participants": s.qtsp_participants,
                }
                for s in self.sessions
            ],
            counters={
                "steps": self.steps,
                "sends": self.sends,
                "delivered": self.delivered,
                "dropped": self.dropped,
                "rejected_auth": rejected_auth,
                "rejected_replay": rejected_replay,
                "malformed": self.malformed,
                "completion_time": self.session_latency if self.session_latency is not None else -1,
            },
            ledger={
                "entries": len(self.ledger),
                "tip": self.ledger.tip_hash.hex(),
                "audit_flags": [f.reason for f in flags],
            },
            assertion_failures=list(self.assertion_failures),
        )


def run_scenario(
    config: ScenarioConfig, registry: SuiteRegistry | None = None
) -> Transcript:
    return Simulation(config, registry).run()
