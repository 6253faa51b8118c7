"""Suite migration: move a distributed key to a new signature suite.

The new key is freshly generated under the target suite; continuity
comes from a transition statement signed by a full threshold session
under the OLD key. Verifiers that trusted the old public key can follow
the record to the new one. The old suite is only marked deprecated once
the record exists; any failure leaves the world unchanged.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from qoesign.errors import MigrationAborted, ParameterError, SuiteStateError
from qoesign.ledger.chain import EntryKind, Ledger
from qoesign.protocol.keys import DistributedKey, Holder, KeyShare, dkg
from qoesign.protocol.runner import run_signing
from qoesign.suites.registry import SuiteRegistry, SuiteStatus
from qoesign.suites.schnorr import Signature, schnorr_verify

TRANSITION_DOMAIN = b"QOESIGN/v1/transition"


@dataclass(frozen=True)
class TransitionRecord:
    old_suite_id: str
    new_suite_id: str
    new_public_key: bytes
    new_epoch: int
    timestamp: int
    session_id: bytes
    signature: Signature


def transition_statement_hash(
    old_suite_id: str,
    new_suite_id: str,
    new_public_key: bytes,
    new_epoch: int,
    timestamp: int,
) -> bytes:
    old = old_suite_id.encode()
    new = new_suite_id.encode()
    h = hashlib.sha256()
    h.update(TRANSITION_DOMAIN)
    h.update(len(old).to_bytes(1, "big"))
    h.update(old)
    h.update(len(new).to_bytes(1, "big"))
    h.update(new)
    h.update(new_epoch.to_bytes(4, "big"))
    h.update(timestamp.to_bytes(8, "big"))
    h.update(len(new_public_key).to_bytes(2, "big"))
    h.update(new_public_key)
    return h.digest()


def verify_transition(
    record: TransitionRecord, registry: SuiteRegistry, old_public_key: int
) -> bool:
    """Check the record's signature under the old suite and key."""
    old_suite = registry.resolve(record.old_suite_id)
    statement = transition_statement_hash(
        record.old_suite_id,
        record.new_suite_id,
        record.new_public_key,
        record.new_epoch,
        record.timestamp,
    )
    return schnorr_verify(
        old_suite, old_public_key, statement, record.signature, record.session_id
    )


def migrate_suite(
    old_key: DistributedKey,
    old_shares: dict[Holder, KeyShare],
    registry: SuiteRegistry,
    target_suite_id: str,
    rng: random.Random | None = None,
    *,
    responsive_qtsps: set[int] | None = None,
    timestamp: int = 0,
    ledger: Ledger | None = None,
) -> tuple[DistributedKey, dict[Holder, KeyShare], TransitionRecord]:
    rng = rng or random.SystemRandom()
    if target_suite_id == old_key.suite_id:
        raise ParameterError("target suite is already in use")
    target = registry.resolve(target_suite_id)
    if not target.threshold_capable:
        raise ParameterError(f"suite {target_suite_id!r} cannot host threshold keys")
    if target.status is not SuiteStatus.ACTIVE:
        raise SuiteStateError(f"suite {target_suite_id!r} is not active")
    old_suite = registry.resolve(old_key.suite_id)

    n = old_key.access.n
    responsive = set(responsive_qtsps) if responsive_qtsps is not None else set(range(1, n + 1))
    if responsive != set(range(1, n + 1)):
        # Re-dealing shares needs every shareholder at the table.
        raise MigrationAborted(
            f"migration needs all {n} qtsps responsive, got {sorted(responsive)}"
        )

    new_key, new_shares = dkg(old_key.access, target, rng, epoch=old_key.epoch + 1)
    new_pk_bytes = target.group.encode(new_key.group_public_key)
    statement = transition_statement_hash(
        old_key.suite_id, target_suite_id, new_pk_bytes, new_key.epoch, timestamp
    )

    try:
        session, signature = run_signing(
            old_key, old_suite, old_shares, statement, rng, timestamp=timestamp
        )
    except Exception as exc:
        raise MigrationAborted(f"old-key endorsement session failed: {exc}") from exc
    if signature is None:
        raise MigrationAborted("old-key endorsement session was denied")

    record = TransitionRecord(
        old_suite_id=old_key.suite_id,
        new_suite_id=target_suite_id,
        new_public_key=new_pk_bytes,
        new_epoch=new_key.epoch,
        timestamp=timestamp,
        session_id=session.session_id,
        signature=signature,
    )
    registry.set_status(old_key.suite_id, SuiteStatus.DEPRECATED)
    if ledger is not None:
        ledger.append(
            kind=EntryKind.SUITE_MIGRATED,
            session_id=session.session_id,
            message_hash=statement,
            suite_id=target_suite_id,
            participants=session.qtsp_participants,
            signature=signature.encode(),
            timestamp=timestamp,
        )
    return new_key, new_shares, record
