"""Shared helpers for protocol, ledger, and acceptance tests."""

from __future__ import annotations

import hashlib

from qoesign.groups.shamir import lagrange_coefficient
from qoesign.ledger.chain import EntryKind, Ledger, LedgerEntry
from qoesign.protocol.keys import DistributedKey, Holder, KeyShare
from qoesign.suites.registry import SignatureSuite
from qoesign.suites.schnorr import Signature, challenge, schnorr_verify


def forgery_attempt(
    key: DistributedKey,
    suite: SignatureSuite,
    shares: dict[Holder, KeyShare],
    message_hash: bytes,
    qtsp_subset: tuple[int, ...],
    include_user: bool,
    tag: bytes,
) -> bool:
    """Best effort of a coalition to satisfy the signing equation.

    Members below quorum interpolate with the Lagrange weights of their
    own subset, the strongest move available to them. Returns whether
    the resulting signature verifies against the group public key.

    A challenge of 0 satisfies g^z = R * PK^0 for any coalition at all,
    so it measures nothing about the access structure; in an 11-element
    scalar field that happens for 1 session id in 11, and the helper
    steps the session id past it.
    """
    group = suite.group
    for bump in range(64):
        session_id = hashlib.sha256(tag + bytes([bump])).digest()[:16]
        commitment = group.identity
        if include_user:
            commitment = group.mul(commitment, group.exp(group.generator, 7))
        for i in qtsp_subset:
            commitment = group.mul(commitment, group.exp(group.generator, i))
        c = challenge(suite, session_id, commitment, key.group_public_key, message_hash)
        if c != 0:
            break
    else:
        raise AssertionError("no nonzero challenge in 64 session ids")
    z = 0
    if include_user:
        z += 7 + c * shares[Holder.user()].secret
    indices = set(qtsp_subset)
    for i in qtsp_subset:
        lam = lagrange_coefficient(indices, i, group.order)
        z += i + c * lam.value * shares[Holder.qtsp(i)].secret
    z %= group.order
    candidate = Signature(
        suite_id=suite.suite_id,
        payload=group.encode(commitment) + group.encode_scalar(z),
    )
    return schnorr_verify(
        suite, key.group_public_key, message_hash, candidate, session_id
    )


def sid(i: int) -> bytes:
    return i.to_bytes(16, "big")


def mh(i: int) -> bytes:
    return hashlib.sha256(b"doc %d" % i).digest()


def build_chain(n: int) -> Ledger:
    """n entries cycling through all kinds, deterministic content."""
    ledger = Ledger()
    kinds = [
        EntryKind.SESSION_COMPLETED,
        EntryKind.SESSION_DENIED,
        EntryKind.SESSION_ABORTED,
        EntryKind.SUITE_MIGRATED,
        EntryKind.SHARE_REFRESHED,
    ]
    for i in range(n):
        kind = kinds[i % len(kinds)]
        needs_sig = kind in (EntryKind.SESSION_COMPLETED, EntryKind.SUITE_MIGRATED)
        ledger.append(
            kind=kind,
            session_id=sid(i),
            message_hash=mh(i),
            suite_id="schnorr-toy-v1",
            participants=(1, 2, 3 + (i % 2)),
            signature=hashlib.sha256(b"sig %d" % i).digest()[:20] if needs_sig else b"",
            timestamp=1000 + i,
        )
    return ledger


def single_bit_mutations(entry: LedgerEntry, case: int):
    """One single-bit change per field, bit position varied by `case`.

    Yields (field_name, mutated_value). Mutations are applied with
    object.__setattr__ afterwards: stored bytes do not re-run
    constructor checks, detection is verify_chain's job alone.
    """
    flip = lambda data, bitpos: bytes(
        b ^ (1 << (bitpos % 8)) if k == (bitpos // 8) % len(data) else b
        for k, b in enumerate(data)
    )
    yield "index", entry.index ^ (1 << (case % 8))
    yield "prev_hash", flip(entry.prev_hash, case)
    yield "timestamp", entry.timestamp ^ (1 << (case % 64))
    # only moves that stay inside the enum differ by exactly one bit
    kind_flip = {1: 3, 2: 3, 3: 1, 4: 5, 5: 4}
    yield "kind", EntryKind(kind_flip[entry.kind.value])
    yield "session_id", flip(entry.session_id, case)
    yield "message_hash", flip(entry.message_hash, case)
    chars = list(entry.suite_id)
    pos = case % len(chars)
    chars[pos] = chr(ord(chars[pos]) ^ 1)
    yield "suite_id", "".join(chars)
    parts = list(entry.participants)
    parts[case % len(parts)] ^= 1 << (case % 4)
    yield "participants", tuple(parts)
    if entry.signature:
        yield "signature", flip(entry.signature, case)
    yield "entry_hash", flip(entry.entry_hash, case)
