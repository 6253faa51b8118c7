"""Authenticated transport envelopes for the simulated network.

Every node pair shares a symmetric transport key, pre-provisioned at
simulation setup. An envelope's tag is an HMAC over sender, receiver,
sequence number, and body, so a receiver can reject forged senders,
tampered bodies, and replayed sequence numbers without any PKI.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field

TRANSPORT_DOMAIN = b"QOESIGN/v1/transport"


@dataclass(frozen=True)
class Envelope:
    from_id: str
    to_id: str
    seq: int
    body: bytes
    auth_tag: bytes

    def signed_part(self) -> bytes:
        src = self.from_id.encode()
        dst = self.to_id.encode()
        return b"".join(
            [
                len(src).to_bytes(1, "big"),
                src,
                len(dst).to_bytes(1, "big"),
                dst,
                self.seq.to_bytes(8, "big"),
                self.body,
            ]
        )


class TransportKeys:
    """Pairwise pre-shared keys, derived deterministically from the run seed."""

    def __init__(self, seed: int, node_ids: list[str]):
        self._keys: dict[frozenset[str], bytes] = {}
        seed_bytes = seed.to_bytes(8, "big")
        for i, a in enumerate(node_ids):
            for b in node_ids[i + 1 :]:
                lo, hi = sorted((a, b))
                material = TRANSPORT_DOMAIN + seed_bytes + lo.encode() + b"|" + hi.encode()
                self._keys[frozenset((a, b))] = hashlib.sha256(material).digest()

    def key_for(self, a: str, b: str) -> bytes:
        try:
            return self._keys[frozenset((a, b))]
        except KeyError:
            raise KeyError(f"no transport key for pair ({a}, {b})") from None


def seal(keys: TransportKeys, from_id: str, to_id: str, seq: int, body: bytes) -> Envelope:
    draft = Envelope(from_id=from_id, to_id=to_id, seq=seq, body=body, auth_tag=b"")
    key = keys.key_for(from_id, to_id)
    tag = hmac.new(key, draft.signed_part(), hashlib.sha256).digest()
    return Envelope(from_id=from_id, to_id=to_id, seq=seq, body=body, auth_tag=tag)


def tag_is_valid(keys: TransportKeys, envelope: Envelope) -> bool:
    try:
        key = keys.key_for(envelope.from_id, envelope.to_id)
    except KeyError:
        return False
    expected = hmac.new(key, envelope.signed_part(), hashlib.sha256).digest()
    return hmac.compare_digest(expected, envelope.auth_tag)


@dataclass
class ChannelGuard:
    """Receiver-side state: verifies tags and enforces strictly
    increasing sequence numbers per (sender, receiver) direction."""

    keys: TransportKeys
    enforce_auth: bool = True
    last_seq: dict[tuple[str, str], int] = field(default_factory=dict)
    rejected_auth: int = 0
    rejected_replay: int = 0

    def accept(self, envelope: Envelope) -> bool:
        if self.enforce_auth and not tag_is_valid(self.keys, envelope):
            self.rejected_auth += 1
            return False
        direction = (envelope.from_id, envelope.to_id)
        if envelope.seq <= self.last_seq.get(direction, -1):
            self.rejected_replay += 1
            return False
        self.last_seq[direction] = envelope.seq
        return True
