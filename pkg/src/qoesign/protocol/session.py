"""Threshold signing sessions: a single-owner state machine per request.

Lifecycle: Requested -> AwaitingUserApproval -> NonceCommitment ->
PartialSigning -> Aggregated -> Completed, with Aborted terminal from
any non-terminal state. The user plus the t lowest-indexed responsive
QTSPs form the participant set; any membership change after nonce
commitment aborts the session (nonces are never reused across differing
participant sets).

Per-partial verification pins blame: QTSP i must satisfy
g^z_i = R_i * P_i^(c*lambda_i) and the user g^z_U = R_U * U^c, where c
is the Fiat-Shamir challenge bound to this session's id.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field
from enum import Enum

from qoesign.errors import (
    InsufficientQuorumError,
    MisbehaviorError,
    NotReadyError,
    ParameterError,
    ProtocolViolation,
    StateMachineViolation,
    SuiteStateError,
)
from qoesign.groups.shamir import lagrange_coefficient
from qoesign.ledger.chain import EntryKind, Ledger
from qoesign.protocol.keys import DistributedKey, Holder
from qoesign.suites.registry import SignatureSuite, SuiteStatus
from qoesign.suites.schnorr import (
    MESSAGE_HASH_BYTES,
    Signature,
    challenge,
    schnorr_verify,
)

SESSION_ID_BYTES = 16

ABORT_USER_DENIED = "user-denied"
ABORT_PARTICIPANT_LOST = "participant-lost"


class SessionState(Enum):
    REQUESTED = "requested"
    AWAITING_USER_APPROVAL = "awaiting_user_approval"
    NONCE_COMMITMENT = "nonce_commitment"
    PARTIAL_SIGNING = "partial_signing"
    AGGREGATED = "aggregated"
    COMPLETED = "completed"
    ABORTED = "aborted"


_ORDER = [
    SessionState.REQUESTED,
    SessionState.AWAITING_USER_APPROVAL,
    SessionState.NONCE_COMMITMENT,
    SessionState.PARTIAL_SIGNING,
    SessionState.AGGREGATED,
    SessionState.COMPLETED,
]


class Decision(Enum):
    APPROVE = "approve"
    DENY = "deny"


@dataclass
class SigningSession:
    session_id: bytes
    message_hash: bytes
    suite_id: str
    key: DistributedKey
    participants: frozenset[Holder]
    state: SessionState = SessionState.REQUESTED
    epoch: int = 0
    nonce_commitments: dict[Holder, int] = field(default_factory=dict)
    partials: dict[Holder, int] = field(default_factory=dict)
    aggregate_commitment: int | None = None
    challenge_value: int | None = None
    signature: Signature | None = None
    abort_reason: str | None = None

    def __post_init__(self):
        if len(self.session_id) != SESSION_ID_BYTES:
            raise ParameterError(f"session id must be {SESSION_ID_BYTES} bytes")
        if len(self.message_hash) != MESSAGE_HASH_BYTES:
            raise ParameterError(f"message hash must be {MESSAGE_HASH_BYTES} bytes")

    @property
    def qtsp_participants(self) -> list[int]:
        return sorted(h.index for h in self.participants if not h.is_user)

    def _advance(self, target: SessionState) -> None:
        if self.state is SessionState.ABORTED:
            raise StateMachineViolation("session is aborted")
        if _ORDER.index(target) != _ORDER.index(self.state) + 1:
            raise StateMachineViolation(
                f"cannot move from {self.state.value} to {target.value}"
            )
        self.state = target

    def abort(self, reason: str) -> None:
        if self.state in (SessionState.COMPLETED, SessionState.ABORTED):
            raise StateMachineViolation(f"cannot abort a {self.state.value} session")
        self.state = SessionState.ABORTED
        self.abort_reason = reason


def start_session(
    key: DistributedKey,
    suite: SignatureSuite,
    message_hash: bytes,
    responsive_qtsps: set[int],
    *,
    session_id: bytes | None = None,
) -> SigningSession:
    """Pick the user plus the t lowest-indexed responsive QTSPs."""
    if suite.suite_id != key.suite_id:
        raise ParameterError(
            f"key was generated for {key.suite_id!r}, not {suite.suite_id!r}"
        )
    if suite.status is SuiteStatus.DEPRECATED:
        raise SuiteStateError(
            f"suite {suite.suite_id!r} is deprecated; new sessions refused"
        )
    t, n = key.access.t, key.access.n
    responsive = {i for i in responsive_qtsps if 1 <= i <= n}
    if len(responsive) < t:
        raise InsufficientQuorumError(responsive, t)
    chosen = sorted(responsive)[:t]
    participants = frozenset({Holder.user()} | {Holder.qtsp(i) for i in chosen})
    session = SigningSession(
        session_id=session_id if session_id is not None else secrets.token_bytes(16),
        message_hash=message_hash,
        suite_id=key.suite_id,
        key=key,
        participants=participants,
        epoch=key.epoch,
    )
    session._advance(SessionState.AWAITING_USER_APPROVAL)
    return session


def approve(
    session: SigningSession,
    decision: Decision,
    ledger: Ledger | None = None,
    timestamp: int = 0,
) -> SigningSession:
    if session.state is not SessionState.AWAITING_USER_APPROVAL:
        raise StateMachineViolation(
            f"approval decision in state {session.state.value}"
        )
    if decision is Decision.APPROVE:
        session._advance(SessionState.NONCE_COMMITMENT)
        return session
    session.abort(ABORT_USER_DENIED)
    if ledger is not None:
        ledger.append(
            kind=EntryKind.SESSION_DENIED,
            session_id=session.session_id,
            message_hash=session.message_hash,
            suite_id=session.suite_id,
            participants=session.qtsp_participants,
            timestamp=timestamp,
        )
    return session


def contribute_nonce(
    session: SigningSession,
    suite: SignatureSuite,
    holder: Holder,
    commitment: int,
) -> SigningSession:
    if session.state is not SessionState.NONCE_COMMITMENT:
        raise StateMachineViolation(
            f"nonce contribution in state {session.state.value}"
        )
    if holder not in session.participants:
        raise ProtocolViolation(f"{holder} is not a session participant")
    if holder in session.nonce_commitments:
        raise ProtocolViolation(f"duplicate nonce commitment from {holder}")
    group = suite.group
    if not group.is_member(commitment):
        raise ParameterError(f"nonce commitment from {holder} is not a group element")
    session.nonce_commitments[holder] = commitment
    if len(session.nonce_commitments) == len(session.participants):
        aggregate = group.identity
        for value in session.nonce_commitments.values():
            aggregate = group.mul(aggregate, value)
        session.aggregate_commitment = aggregate
        session.challenge_value = challenge(
            suite,
            session.session_id,
            aggregate,
            session.key.group_public_key,
            session.message_hash,
        )
        session._advance(SessionState.PARTIAL_SIGNING)
    return session


def expected_partial_base(
    session: SigningSession, suite: SignatureSuite, holder: Holder
) -> int:
    """Right-hand side of holder's partial-verification equation."""
    group = suite.group
    c = session.challenge_value
    own_commitment = session.nonce_commitments[holder]
    if holder.is_user:
        exponent = c
        public = session.key.user_public_share
    else:
        lam = lagrange_coefficient(
            set(session.qtsp_participants), holder.index, group.order
        )
        exponent = (c * lam.value) % group.order
        public = session.key.qtsp_public_shares[holder.index]
    return group.mul(own_commitment, group.exp(public, exponent))


def contribute_partial(
    session: SigningSession,
    suite: SignatureSuite,
    holder: Holder,
    z_partial: int,
) -> SigningSession:
    if session.state is not SessionState.PARTIAL_SIGNING:
        raise StateMachineViolation(
            f"partial contribution in state {session.state.value}"
        )
    if holder not in session.participants:
        raise ProtocolViolation(f"{holder} is not a session participant")
    if holder in session.partials:
        raise ProtocolViolation(f"duplicate partial from {holder}")
    group = suite.group
    z = z_partial % group.order
    if group.exp(group.generator, z) != expected_partial_base(session, suite, holder):
        session.abort(f"misbehavior:{holder}")
        raise MisbehaviorError(holder)
    session.partials[holder] = z
    if len(session.partials) == len(session.participants):
        session._advance(SessionState.AGGREGATED)
    return session


def aggregate(
    session: SigningSession,
    suite: SignatureSuite,
    ledger: Ledger | None = None,
    timestamp: int = 0,
) -> Signature:
    """Sum partials into the final signature; ledger write happens first.

    The completion entry is persisted before the session is marked
    Completed and the signature released: if the ledger is unreachable
    the signature must not go out (fail closed).
    """
    if session.state is not SessionState.AGGREGATED:
        if session.state is SessionState.PARTIAL_SIGNING:
            missing = session.participants - set(session.partials)
            raise NotReadyError(
                f"missing partials from {sorted(str(h) for h in missing)}"
            )
        raise StateMachineViolation(f"aggregate in state {session.state.value}")
    group = suite.group
    z = sum(session.partials.values()) % group.order
    signature = Signature(
        suite_id=session.suite_id,
        payload=group.encode(session.aggregate_commitment) + group.encode_scalar(z),
    )
    if not schnorr_verify(
        suite,
        session.key.group_public_key,
        session.message_hash,
        signature,
        session.session_id,
    ):
        session.abort("aggregate-verification-failed")
        raise ProtocolViolation("aggregated signature failed verification")
    if ledger is not None:
        ledger.append(
            kind=EntryKind.SESSION_COMPLETED,
            session_id=session.session_id,
            message_hash=session.message_hash,
            suite_id=session.suite_id,
            participants=session.qtsp_participants,
            signature=signature.encode(),
            timestamp=timestamp,
        )
    session.signature = signature
    session._advance(SessionState.COMPLETED)
    return signature
