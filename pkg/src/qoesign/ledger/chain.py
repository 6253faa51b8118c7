"""Hash-chained per-user log of signing events.

Each entry commits to its predecessor's hash and stores its own hash;
any single-bit change to a stored entry is detectable at exactly that
entry's index. Completion entries must embed the issued signature so a
user can audit what was signed on their behalf.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import IntEnum

from qoesign.errors import DecodeError, LedgerError

HASH_BYTES = 32
GENESIS_PREV = bytes(HASH_BYTES)
SESSION_ID_BYTES = 16
MESSAGE_HASH_BYTES = 32


class EntryKind(IntEnum):
    SESSION_COMPLETED = 1
    SESSION_DENIED = 2
    SESSION_ABORTED = 3
    SUITE_MIGRATED = 4
    SHARE_REFRESHED = 5


@dataclass(frozen=True)
class LedgerEntry:
    index: int
    prev_hash: bytes
    timestamp: int
    kind: EntryKind
    session_id: bytes
    message_hash: bytes
    suite_id: str
    participants: tuple[int, ...]
    signature: bytes = b""
    entry_hash: bytes = field(default=b"", compare=True)

    def __post_init__(self):
        if self.index < 0:
            raise LedgerError("negative index")
        if len(self.prev_hash) != HASH_BYTES:
            raise LedgerError("prev_hash must be 32 bytes")
        if not 0 <= self.timestamp < 2**64:
            raise LedgerError("timestamp out of range")
        if len(self.session_id) != SESSION_ID_BYTES:
            raise LedgerError("session_id must be 16 bytes")
        if len(self.message_hash) != MESSAGE_HASH_BYTES:
            raise LedgerError("message_hash must be 32 bytes")
        if not self.suite_id or len(self.suite_id.encode()) > 255:
            raise LedgerError("suite_id must be 1..255 encoded bytes")
        if list(self.participants) != sorted(set(self.participants)):
            raise LedgerError("participants must be strictly increasing")
        if any(not 0 <= p < 2**16 for p in self.participants):
            raise LedgerError("participant index out of range")
        if self.kind is EntryKind.SESSION_COMPLETED and not self.signature:
            raise LedgerError("completion entries must carry the signature")
        if (
            self.kind
            in (EntryKind.SESSION_DENIED, EntryKind.SESSION_ABORTED, EntryKind.SHARE_REFRESHED)
            and self.signature
        ):
            raise LedgerError(f"{self.kind.name} entries carry no signature")


def _encode_body(entry: LedgerEntry) -> bytes:
    ident = entry.suite_id.encode()
    parts = [
        entry.index.to_bytes(8, "big"),
        entry.prev_hash,
        entry.timestamp.to_bytes(8, "big"),
        entry.kind.value.to_bytes(1, "big"),
        entry.session_id,
        entry.message_hash,
        len(ident).to_bytes(1, "big"),
        ident,
        len(entry.participants).to_bytes(2, "big"),
    ]
    parts.extend(p.to_bytes(2, "big") for p in entry.participants)
    parts.append(len(entry.signature).to_bytes(4, "big"))
    parts.append(entry.signature)
    return b"".join(parts)


def compute_entry_hash(entry: LedgerEntry) -> bytes:
    return hashlib.sha256(_encode_body(entry)).digest()


def encode_entry(entry: LedgerEntry) -> bytes:
    """Wire form: canonical body followed by the stored entry hash."""
    if len(entry.entry_hash) != HASH_BYTES:
        raise LedgerError("entry has no hash; was it appended through a Ledger?")
    return _encode_body(entry) + entry.entry_hash


def decode_entry(raw: bytes) -> LedgerEntry:
    view = memoryview(raw)
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(view):
            raise DecodeError("ledger record truncated")
        data = bytes(view[pos : pos + n])
        pos += n
        return data

    index = int.from_bytes(take(8), "big")
    prev_hash = take(HASH_BYTES)
    timestamp = int.from_bytes(take(8), "big")
    kind_value = take(1)[0]
    try:
        kind = EntryKind(kind_value)
    except ValueError as exc:
        raise DecodeError(f"unknown entry kind {kind_value}") from exc
    session_id = take(SESSION_ID_BYTES)
    message_hash = take(MESSAGE_HASH_BYTES)
    ident_len = take(1)[0]
    suite_id = take(ident_len).decode()
    count = int.from_bytes(take(2), "big")
    participants = tuple(int.from_bytes(take(2), "big") for _ in range(count))
    sig_len = int.from_bytes(take(4), "big")
    signature = take(sig_len)
    entry_hash = take(HASH_BYTES)
    if pos != len(view):
        raise DecodeError("trailing bytes after ledger record")
    try:
        return LedgerEntry(
            index=index,
            prev_hash=prev_hash,
            timestamp=timestamp,
            kind=kind,
            session_id=session_id,
            message_hash=message_hash,
            suite_id=suite_id,
            participants=participants,
            signature=signature,
            entry_hash=entry_hash,
        )
    except LedgerError as exc:
        raise DecodeError(f"decoded record is not a valid entry: {exc}") from exc


@dataclass(frozen=True)
class ChainStatus:
    ok: bool
    broken_index: int | None = None
    reason: str | None = None

    @classmethod
    def good(cls) -> ChainStatus:
        return cls(ok=True)

    @classmethod
    def broken(cls, index: int, reason: str) -> ChainStatus:
        return cls(ok=False, broken_index=index, reason=reason)


class Ledger:
    """Append-only chain, optionally persisted through a record store.

    Persistence happens before the in-memory append: if the store write
    fails, the chain is unchanged and the caller sees the store's error.
    """

    def __init__(self, store=None, entries: list[LedgerEntry] | None = None):
        self._store = store
        self._entries: list[LedgerEntry] = list(entries or [])

    @classmethod
    def open(cls, store) -> Ledger:
        entries = [decode_entry(raw) for raw in store.load_records()]
        return cls(store=store, entries=entries)

    @property
    def tip_hash(self) -> bytes:
        return self._entries[-1].entry_hash if self._entries else GENESIS_PREV

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[LedgerEntry]:
        return list(self._entries)

    def append(
        self,
        kind: EntryKind,
        session_id: bytes,
        message_hash: bytes,
        suite_id: str,
        participants,
        signature: bytes = b"",
        timestamp: int = 0,
    ) -> LedgerEntry:
        draft = LedgerEntry(
            index=len(self._entries),
            prev_hash=self.tip_hash,
            timestamp=timestamp,
            kind=kind,
            session_id=session_id,
            message_hash=message_hash,
            suite_id=suite_id,
            participants=tuple(sorted(set(participants))),
            signature=signature,
        )
        entry = replace(draft, entry_hash=compute_entry_hash(draft))
        if self._store is not None:
            self._store.append_record(encode_entry(entry))
        self._entries.append(entry)
        return entry

    def verify_chain(self) -> ChainStatus:
        prev = GENESIS_PREV
        for i, entry in enumerate(self._entries):
            if entry.index != i:
                return ChainStatus.broken(i, "index out of sequence")
            if entry.prev_hash != prev:
                return ChainStatus.broken(i, "previous-hash link broken")
            if compute_entry_hash(entry) != entry.entry_hash:
                return ChainStatus.broken(i, "entry hash mismatch")
            prev = entry.entry_hash
        return ChainStatus.good()
