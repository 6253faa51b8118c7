"""Holder-side signing logic for the user and the QTSP nodes.

Nodes keep their secret share and their pending nonces; they never see
any other holder's secrets. Each node recomputes the Fiat-Shamir
challenge itself from session id, aggregate commitment, public key and
message hash, so a coordinator cannot trick a node into signing
something other than what it was shown.

Nonce discipline: one nonce per session id. A pending commitment may be
re-requested (transports retransmit), but once the partial is produced
the nonce is erased and the session id is burned for this node.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from qoesign.errors import ParameterError, ProtocolViolation
from qoesign.groups.shamir import lagrange_coefficient
from qoesign.ledger.audit import ApprovalRecord
from qoesign.protocol.keys import KeyShare
from qoesign.protocol.session import Decision
from qoesign.suites.registry import SignatureSuite
from qoesign.suites.schnorr import challenge


@dataclass
class _NonceBook:
    pending: dict[bytes, tuple[int, int]] = field(default_factory=dict)
    burned: set = field(default_factory=set)

    def issue(self, session_id: bytes, suite: SignatureSuite, rng) -> int:
        if session_id in self.burned:
            raise ProtocolViolation("nonce for this session was already consumed")
        if session_id not in self.pending:
            group = suite.group
            r = group.random_scalar(rng)
            self.pending[session_id] = (r, group.exp(group.generator, r))
        return self.pending[session_id][1]

    def consume(self, session_id: bytes) -> int:
        if session_id not in self.pending:
            raise ProtocolViolation("no pending nonce for this session")
        r, _ = self.pending.pop(session_id)
        self.burned.add(session_id)
        return r


@dataclass
class UserNode:
    user_id: str
    share: KeyShare
    rng: random.Random
    policy: str = "approve"  # "approve", "deny", or a callable on the hash
    approval_log: list[ApprovalRecord] = field(default_factory=list)
    _nonces: _NonceBook = field(default_factory=_NonceBook)

    def decide(self, session_id: bytes, message_hash: bytes, timestamp: int = 0) -> Decision:
        if callable(self.policy):
            approves = bool(self.policy(message_hash))
        elif self.policy in ("approve", "deny"):
            approves = self.policy == "approve"
        else:
            raise ParameterError(f"unknown approval policy {self.policy!r}")
        decision = Decision.APPROVE if approves else Decision.DENY
        self.approval_log.append(
            ApprovalRecord(
                session_id=session_id,
                message_hash=message_hash,
                decision=decision.value,
                timestamp=timestamp,
            )
        )
        return decision

    def commit_nonce(self, session_id: bytes, suite: SignatureSuite) -> int:
        return self._nonces.issue(session_id, suite, self.rng)

    def produce_partial(
        self,
        suite: SignatureSuite,
        session_id: bytes,
        message_hash: bytes,
        group_public_key: int,
        aggregate_commitment: int,
    ) -> int:
        group = suite.group
        c = challenge(suite, session_id, aggregate_commitment, group_public_key, message_hash)
        r = self._nonces.consume(session_id)
        return (r + c * self.share.secret) % group.order


@dataclass
class QtspNode:
    index: int
    share: KeyShare
    rng: random.Random
    _nonces: _NonceBook = field(default_factory=_NonceBook)

    def commit_nonce(self, session_id: bytes, suite: SignatureSuite) -> int:
        return self._nonces.issue(session_id, suite, self.rng)

    def produce_partial(
        self,
        suite: SignatureSuite,
        session_id: bytes,
        message_hash: bytes,
        group_public_key: int,
        aggregate_commitment: int,
        participant_indices: set[int],
    ) -> int:
        if self.index not in participant_indices:
            raise ProtocolViolation(
                f"qtsp {self.index} asked to sign for set {sorted(participant_indices)}"
            )
        group = suite.group
        c = challenge(suite, session_id, aggregate_commitment, group_public_key, message_hash)
        lam = lagrange_coefficient(set(participant_indices), self.index, group.order)
        r = self._nonces.consume(session_id)
        return (r + c * lam.value * self.share.secret) % group.order
