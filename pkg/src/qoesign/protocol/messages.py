"""Length-delimited protocol records carried inside transport envelopes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from qoesign.errors import DecodeError, ParameterError

SESSION_ID_BYTES = 16


@dataclass(frozen=True)
class ProtocolMessage:
    session_id: bytes
    epoch: int
    sender: str
    kind: str
    payload: dict[str, Any]

    def __post_init__(self):
        if len(self.session_id) != SESSION_ID_BYTES:
            raise ParameterError(f"session id must be {SESSION_ID_BYTES} bytes")
        if not 0 <= self.epoch < 2**32:
            raise ParameterError("epoch out of range")
        for name in (self.sender, self.kind):
            if not name or len(name.encode()) > 255:
                raise ParameterError("sender/kind must be 1..255 encoded bytes")

    def encode(self) -> bytes:
        sender = self.sender.encode()
        kind = self.kind.encode()
        body = json.dumps(
            self.payload, sort_keys=True, separators=(",", ":")
        ).encode()
        return b"".join(
            [
                self.session_id,
                self.epoch.to_bytes(4, "big"),
                len(sender).to_bytes(1, "big"),
                sender,
                len(kind).to_bytes(1, "big"),
                kind,
                len(body).to_bytes(4, "big"),
                body,
            ]
        )


def decode_message(raw: bytes) -> ProtocolMessage:
    view = memoryview(raw)
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(view):
            raise DecodeError("protocol message truncated")
        data = bytes(view[pos : pos + n])
        pos += n
        return data

    session_id = take(SESSION_ID_BYTES)
    epoch = int.from_bytes(take(4), "big")
    sender = take(take(1)[0]).decode()
    kind = take(take(1)[0]).decode()
    body_len = int.from_bytes(take(4), "big")
    body = take(body_len)
    if pos != len(view):
        raise DecodeError("trailing bytes after protocol message")
    try:
        payload = json.loads(body.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DecodeError(f"payload is not canonical JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DecodeError("payload must be a JSON object")
    return ProtocolMessage(
        session_id=session_id, epoch=epoch, sender=sender, kind=kind, payload=payload
    )
