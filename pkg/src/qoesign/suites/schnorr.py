"""Single-party Schnorr signatures, the base every threshold session extends.

The challenge binds the suite id and a 16-byte session context alongside
the usual (R, PK, message) triple, so a signature from one signing
session never verifies in another context. Partial signatures in the
threshold protocol reuse exactly this challenge computation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from qoesign.errors import (
    DecodeError,
    InvalidKeyError,
    ParameterError,
    SuiteStateError,
)
from qoesign.suites.registry import SignatureSuite, SuiteStatus

CHALLENGE_DOMAIN = b"QOESIGN/v1/chal"
SESSION_CONTEXT_BYTES = 16
MESSAGE_HASH_BYTES = 32
DEFAULT_SESSION_CONTEXT = bytes(SESSION_CONTEXT_BYTES)


@dataclass(frozen=True)
class Signature:
    suite_id: str
    payload: bytes

    def encode(self) -> bytes:
        ident = self.suite_id.encode()
        return len(ident).to_bytes(1, "big") + ident + self.payload


def decode_signature(data: bytes) -> Signature:
    if len(data) < 2:
        raise DecodeError("signature too short for header")
    id_len = data[0]
    if id_len == 0 or len(data) < 1 + id_len:
        raise DecodeError("suite id length does not fit the data")
    try:
        suite_id = data[1 : 1 + id_len].decode()
    except UnicodeDecodeError as exc:
        raise DecodeError("suite id is not valid UTF-8") from exc
    return Signature(suite_id=suite_id, payload=data[1 + id_len :])


def _check_inputs(session_context: bytes, message_hash: bytes) -> None:
    if len(session_context) != SESSION_CONTEXT_BYTES:
        raise ParameterError(
            f"session context must be {SESSION_CONTEXT_BYTES} bytes, "
            f"got {len(session_context)}"
        )
    if len(message_hash) != MESSAGE_HASH_BYTES:
        raise ParameterError(
            f"message hash must be {MESSAGE_HASH_BYTES} bytes, got {len(message_hash)}"
        )


def challenge(
    suite: SignatureSuite,
    session_context: bytes,
    commitment: int,
    public_key: int,
    message_hash: bytes,
) -> int:
    """Fiat-Shamir challenge scalar, reduced into the group's order."""
    _check_inputs(session_context, message_hash)
    group = suite.group
    if group is None:
        raise ParameterError(f"suite {suite.suite_id!r} has no group parameters")
    ident = suite.suite_id.encode()
    h = hashlib.sha256()
    h.update(CHALLENGE_DOMAIN)
    h.update(len(ident).to_bytes(1, "big"))
    h.update(ident)
    h.update(session_context)
    h.update(group.encode(commitment))
    h.update(group.encode(public_key))
    h.update(message_hash)
    return int.from_bytes(h.digest(), "big") % group.order


def schnorr_sign(
    suite: SignatureSuite,
    secret_key: int,
    message_hash: bytes,
    nonce: int,
    session_context: bytes = DEFAULT_SESSION_CONTEXT,
    *,
    challenge_override: int | None = None,
) -> Signature:
    """Sign with explicit nonce; callers own nonce freshness."""
    if suite.status is SuiteStatus.DEPRECATED:
        raise SuiteStateError(f"suite {suite.suite_id!r} is deprecated; signing refused")
    group = suite.group
    if group is None:
        raise ParameterError(f"suite {suite.suite_id!r} cannot schnorr-sign")
    if secret_key % group.order == 0:
        raise InvalidKeyError("secret key is zero mod group order")
    if nonce % group.order == 0:
        raise ParameterError("nonce is zero mod group order")
    _check_inputs(session_context, message_hash)
    public_key = group.exp(group.generator, secret_key)
    commitment = group.exp(group.generator, nonce)
    c = (
        challenge(suite, session_context, commitment, public_key, message_hash)
        if challenge_override is None
        else challenge_override % group.order
    )
    z = (nonce + c * secret_key) % group.order
    return Signature(
        suite_id=suite.suite_id,
        payload=group.encode(commitment) + group.encode_scalar(z),
    )


def schnorr_verify(
    suite: SignatureSuite,
    public_key: int,
    message_hash: bytes,
    signature: Signature,
    session_context: bytes = DEFAULT_SESSION_CONTEXT,
    *,
    challenge_override: int | None = None,
) -> bool:
    """Check g^z == R * PK^c. Deprecated suites still verify."""
    group = suite.group
    if group is None:
        raise ParameterError(f"suite {suite.suite_id!r} cannot schnorr-verify")
    if signature.suite_id != suite.suite_id:
        return False
    if public_key == group.identity or not group.is_member(public_key):
        raise InvalidKeyError("public key is not a valid non-identity group element")
    _check_inputs(session_context, message_hash)
    expected_len = group.element_bytes + group.scalar_bytes
    if len(signature.payload) != expected_len:
        return False
    try:
        commitment = group.decode(signature.payload[: group.element_bytes])
        z = group.decode_scalar(signature.payload[group.element_bytes :])
    except DecodeError:
        return False
    c = (
        challenge(suite, session_context, commitment, public_key, message_hash)
        if challenge_override is None
        else challenge_override % group.order
    )
    lhs = group.exp(group.generator, z)
    rhs = group.mul(commitment, group.exp(public_key, c))
    return lhs == rhs
