from qoesign.protocol.keys import (
    AccessStructure,
    DistributedKey,
    Holder,
    KeyShare,
    dkg,
    refresh_shares,
)
from qoesign.protocol.messages import ProtocolMessage, decode_message
from qoesign.protocol.migration import (
    TransitionRecord,
    migrate_suite,
    transition_statement_hash,
    verify_transition,
)
from qoesign.protocol.nodes import QtspNode, UserNode
from qoesign.protocol.runner import build_nodes, run_signing
from qoesign.protocol.session import (
    ABORT_PARTICIPANT_LOST,
    ABORT_USER_DENIED,
    Decision,
    SessionState,
    SigningSession,
    aggregate,
    approve,
    contribute_nonce,
    contribute_partial,
    expected_partial_base,
    start_session,
)

__all__ = [
    "ABORT_PARTICIPANT_LOST",
    "ABORT_USER_DENIED",
    "AccessStructure",
    "Decision",
    "DistributedKey",
    "Holder",
    "KeyShare",
    "ProtocolMessage",
    "QtspNode",
    "SessionState",
    "SigningSession",
    "TransitionRecord",
    "UserNode",
    "aggregate",
    "approve",
    "build_nodes",
    "contribute_nonce",
    "contribute_partial",
    "decode_message",
    "dkg",
    "expected_partial_base",
    "migrate_suite",
    "refresh_shares",
    "run_signing",
    "start_session",
    "transition_statement_hash",
    "verify_transition",
]
