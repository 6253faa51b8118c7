"""User-side audit: does the ledger agree with what I actually approved?

The user node keeps its own approval log. Auditing cross-checks every
completion entry in the (QTSP-hosted) ledger against that local log, so
a signature created without the user's consent shows up as a flag even
when the chain itself is intact.
"""

from __future__ import annotations

from dataclasses import dataclass

from qoesign.ledger.chain import EntryKind, Ledger


@dataclass(frozen=True)
class ApprovalRecord:
    session_id: bytes
    message_hash: bytes
    decision: str  # "approve" or "deny"
    timestamp: int = 0


@dataclass(frozen=True)
class AuditFlag:
    index: int
    session_id: bytes
    reason: str


def user_audit(ledger: Ledger, approvals: list[ApprovalRecord]) -> list[AuditFlag]:
    flags: list[AuditFlag] = []
    status = ledger.verify_chain()
    if not status.ok:
        flags.append(
            AuditFlag(
                index=status.broken_index,
                session_id=bytes(16),
                reason=f"chain-broken:{status.reason}",
            )
        )
    approved = {a.session_id: a for a in approvals if a.decision == "approve"}
    denied = {a.session_id for a in approvals if a.decision == "deny"}
    for entry in ledger.entries():
        if entry.kind is EntryKind.SESSION_COMPLETED:
            record = approved.get(entry.session_id)
            if record is None:
                reason = (
                    "completed-but-user-denied"
                    if entry.session_id in denied
                    else "completed-without-user-approval"
                )
                flags.append(AuditFlag(entry.index, entry.session_id, reason))
            elif record.message_hash != entry.message_hash:
                flags.append(
                    AuditFlag(entry.index, entry.session_id, "message-hash-mismatch")
                )
        elif entry.kind is EntryKind.SESSION_DENIED:
            if entry.session_id in approved:
                flags.append(
                    AuditFlag(entry.index, entry.session_id, "denied-but-user-approved")
                )
    return flags
