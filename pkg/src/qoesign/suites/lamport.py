"""Lamport one-time signatures over SHA-256.

Present as the registry's hash-based suite: key generation and
verification need nothing but a hash function, signing reveals one
preimage per message bit. Strictly one message per key pair; the key
object tracks use and refuses a second signing.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field

from qoesign.errors import DecodeError, OneTimeKeyReuseError, ParameterError
from qoesign.suites.schnorr import MESSAGE_HASH_BYTES, Signature

_BITS = 256
_CHUNK = 32


def _sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass
class LamportKeyPair:
    """256 preimage pairs; public key is their hashes, flattened."""

    secret_pairs: tuple[tuple[bytes, bytes], ...]
    public_key: bytes
    used: bool = field(default=False)


def generate_lamport_keypair(rng=None) -> LamportKeyPair:
    """rng is any object with randbytes(n); defaults to the OS CSPRNG."""
    draw = rng.randbytes if rng is not None else secrets.token_bytes
    pairs = tuple((draw(_CHUNK), draw(_CHUNK)) for _ in range(_BITS))
    public = b"".join(_sha256(zero) + _sha256(one) for zero, one in pairs)
    return LamportKeyPair(secret_pairs=pairs, public_key=public)


def lamport_sign(
    keypair: LamportKeyPair,
    message_hash: bytes,
    suite_id: str = "lamport-ots-v1",
) -> Signature:
    if len(message_hash) != MESSAGE_HASH_BYTES:
        raise ParameterError(
            f"message hash must be {MESSAGE_HASH_BYTES} bytes, got {len(message_hash)}"
        )
    if keypair.used:
        raise OneTimeKeyReuseError("one-time key already consumed")
    keypair.used = True
    reveals = []
    for i in range(_BITS):
        bit = (message_hash[i // 8] >> (7 - i % 8)) & 1
        reveals.append(keypair.secret_pairs[i][bit])
    return Signature(suite_id=suite_id, payload=b"".join(reveals))


def lamport_verify(public_key: bytes, message_hash: bytes, signature: Signature) -> bool:
    if len(message_hash) != MESSAGE_HASH_BYTES:
        raise ParameterError(
            f"message hash must be {MESSAGE_HASH_BYTES} bytes, got {len(message_hash)}"
        )
    if len(public_key) != _BITS * 2 * _CHUNK:
        raise DecodeError("public key has wrong length")
    if len(signature.payload) != _BITS * _CHUNK:
        return False
    for i in range(_BITS):
        bit = (message_hash[i // 8] >> (7 - i % 8)) & 1
        revealed = signature.payload[i * _CHUNK : (i + 1) * _CHUNK]
        offset = i * 2 * _CHUNK + bit * _CHUNK
        if _sha256(revealed) != public_key[offset : offset + _CHUNK]:
            return False
    return True
