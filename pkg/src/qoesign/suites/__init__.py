from qoesign.suites.lamport import (
    LamportKeyPair,
    generate_lamport_keypair,
    lamport_sign,
    lamport_verify,
)
from qoesign.suites.registry import (
    SignatureSuite,
    SuiteRegistry,
    SuiteStatus,
    default_registry,
)
from qoesign.suites.schnorr import (
    CHALLENGE_DOMAIN,
    DEFAULT_SESSION_CONTEXT,
    MESSAGE_HASH_BYTES,
    SESSION_CONTEXT_BYTES,
    Signature,
    challenge,
    decode_signature,
    schnorr_sign,
    schnorr_verify,
)

__all__ = [
    "CHALLENGE_DOMAIN",
    "DEFAULT_SESSION_CONTEXT",
    "LamportKeyPair",
    "MESSAGE_HASH_BYTES",
    "SESSION_CONTEXT_BYTES",
    "SignatureSuite",
    "Signature",
    "SuiteRegistry",
    "SuiteStatus",
    "challenge",
    "decode_signature",
    "default_registry",
    "generate_lamport_keypair",
    "lamport_sign",
    "lamport_verify",
    "schnorr_sign",
    "schnorr_verify",
]
