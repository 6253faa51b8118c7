"""In-process orchestration of one full signing session.

This is the no-network reference flow used by the CLI demo, the
benchmark, suite migration, and as the ground truth the simulator's
message-driven runs are compared against.
"""

from __future__ import annotations

import random
import secrets

from qoesign.ledger.chain import Ledger
from qoesign.protocol.keys import DistributedKey, Holder, KeyShare
from qoesign.protocol.nodes import QtspNode, UserNode
from qoesign.protocol.session import (
    Decision,
    SigningSession,
    aggregate,
    approve,
    contribute_nonce,
    contribute_partial,
    start_session,
)
from qoesign.suites.registry import SignatureSuite
from qoesign.suites.schnorr import Signature


def build_nodes(
    shares: dict[Holder, KeyShare],
    rng: random.Random,
    user_id: str = "user",
    user_policy="approve",
) -> tuple[UserNode, dict[int, QtspNode]]:
    user = UserNode(user_id=user_id, share=shares[Holder.user()], rng=rng, policy=user_policy)
    qtsps = {
        h.index: QtspNode(index=h.index, share=s, rng=rng)
        for h, s in shares.items()
        if not h.is_user
    }
    return user, qtsps


def run_signing(
    key: DistributedKey,
    suite: SignatureSuite,
    shares: dict[Holder, KeyShare],
    message_hash: bytes,
    rng: random.Random | None = None,
    *,
    responsive_qtsps: set[int] | None = None,
    session_id: bytes | None = None,
    ledger: Ledger | None = None,
    user_policy="approve",
    user_node: UserNode | None = None,
    timestamp: int = 0,
) -> tuple[SigningSession, Signature | None]:
    """One session end to end. Returns (session, signature-or-None)."""
    rng = rng or random.SystemRandom()
    if responsive_qtsps is None:
        responsive_qtsps = set(range(1, key.access.n + 1))
    if session_id is None:
        session_id = rng.randbytes(16) if hasattr(rng, "randbytes") else secrets.token_bytes(16)

    built_user, qtsps = build_nodes(shares, rng, user_policy=user_policy)
    user = user_node if user_node is not None else built_user

    session = start_session(key, suite, message_hash, responsive_qtsps, session_id=session_id)
    decision = user.decide(session.session_id, message_hash, timestamp)
    approve(session, decision, ledger, timestamp)
    if decision is Decision.DENY:
        return session, None

    participants = sorted(session.participants)
    for holder in participants:
        node = user if holder.is_user else qtsps[holder.index]
        contribute_nonce(session, suite, holder, node.commit_nonce(session.session_id, suite))

    indices = set(session.qtsp_participants)
    for holder in participants:
        if holder.is_user:
            z = user.produce_partial(
                suite,
                session.session_id,
                message_hash,
                key.group_public_key,
                session.aggregate_commitment,
            )
        else:
            z = qtsps[holder.index].produce_partial(
                suite,
                session.session_id,
                message_hash,
                key.group_public_key,
                session.aggregate_commitment,
                indices,
            )
        contribute_partial(session, suite, holder, z)

    signature = aggregate(session, suite, ledger, timestamp)
    return session, signature
