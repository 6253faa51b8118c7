"""Distributed, user-involved qualified-signature creation toolkit.

Subpackages:
    threatmodel  STRIDE threat enumeration with scoring and requirement groups
    groups       prime-order group arithmetic, secret sharing, share commitments
    suites       pluggable signature suites with a lifecycle-aware registry
    protocol     distributed key generation and threshold signing sessions
    ledger       hash-chained, user-auditable log of signing events
    simnet       deterministic adversarial network simulator
    service      HTTP coordinator, node runner, and configuration
"""

__version__ = "0.1.0"
