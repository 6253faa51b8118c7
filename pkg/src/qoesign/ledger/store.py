"""Record persistence for ledgers. Any I/O failure maps to
LedgerUnavailable so callers fail closed instead of releasing
signatures that were never logged."""

from __future__ import annotations

import os
from pathlib import Path

from qoesign.errors import DecodeError, LedgerUnavailable

_LEN_BYTES = 4


class FileLedgerStore:
    """Length-framed records in a single append-only file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append_record(self, raw: bytes) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab") as f:
                f.write(len(raw).to_bytes(_LEN_BYTES, "big") + raw)
                f.flush()
                os.fsync(f.fileno())
        except OSError as exc:
            raise LedgerUnavailable(f"ledger write failed: {exc}") from exc

    def load_records(self) -> list[bytes]:
        if not self.path.exists():
            return []
        try:
            blob = self.path.read_bytes()
        except OSError as exc:
            raise LedgerUnavailable(f"ledger read failed: {exc}") from exc
        records = []
        pos = 0
        while pos < len(blob):
            if pos + _LEN_BYTES > len(blob):
                raise DecodeError("ledger file ends inside a length header")
            length = int.from_bytes(blob[pos : pos + _LEN_BYTES], "big")
            pos += _LEN_BYTES
            if pos + length > len(blob):
                raise DecodeError("ledger file ends inside a record")
            records.append(blob[pos : pos + length])
            pos += length
        return records


class BrokenStore:
    """Test double: every write fails as if the disk were gone."""

    def append_record(self, raw: bytes) -> None:
        raise LedgerUnavailable("ledger store is unreachable")

    def load_records(self) -> list[bytes]:
        raise LedgerUnavailable("ledger store is unreachable")
