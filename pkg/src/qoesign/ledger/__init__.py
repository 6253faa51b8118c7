from qoesign.ledger.audit import ApprovalRecord, AuditFlag, user_audit
from qoesign.ledger.chain import (
    GENESIS_PREV,
    ChainStatus,
    EntryKind,
    Ledger,
    LedgerEntry,
    compute_entry_hash,
    decode_entry,
    encode_entry,
)
from qoesign.ledger.store import BrokenStore, FileLedgerStore

__all__ = [
    "ApprovalRecord",
    "AuditFlag",
    "BrokenStore",
    "ChainStatus",
    "EntryKind",
    "FileLedgerStore",
    "GENESIS_PREV",
    "Ledger",
    "LedgerEntry",
    "compute_entry_hash",
    "decode_entry",
    "encode_entry",
    "user_audit",
]
