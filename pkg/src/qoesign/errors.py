"""Exception hierarchy shared across the package."""

from __future__ import annotations


class QoesignError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(QoesignError):
    """A field failed a range or format check. Carries the field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParameterError(QoesignError):
    """Arguments are structurally invalid (bad threshold, wrong set membership, ...)."""


class ThreatModelError(QoesignError):
    """Structural problem in a threat dataset. `offenders` lists the bad references."""

    def __init__(self, message: str, offenders: list | None = None):
        super().__init__(message)
        self.offenders = offenders or []


class ReconstructionError(QoesignError):
    """Secret reconstruction failed (too few shares, duplicate indices)."""


class DecodeError(QoesignError):
    """Bytes are not a canonical encoding of the expected object."""


class DuplicateSuiteError(QoesignError):
    """A suite id is already registered."""


class SuiteNotFoundError(QoesignError):
    """No suite registered under the requested id."""


class NoSuiteAvailableError(QoesignError):
    """Negotiation found no Active suite matching the requested flags."""

    def __init__(self, unmet: dict):
        super().__init__(f"no suite available matching {unmet}")
        self.unmet = unmet


class InvalidKeyError(QoesignError):
    """Public key is the identity element or otherwise unusable."""


class SuiteStateError(QoesignError):
    """Suite refuses the operation in its current lifecycle status."""


class OneTimeKeyReuseError(QoesignError):
    """A one-time signing key was asked to sign a second message."""


class DkgAbortError(QoesignError):
    """Distributed key generation aborted. Names the offending dealer."""

    def __init__(self, dealer: int, reason: str):
        super().__init__(f"dkg aborted: dealer {dealer}: {reason}")
        self.dealer = dealer
        self.reason = reason


class InsufficientQuorumError(QoesignError):
    """Fewer than t QTSPs answered. Carries who did answer."""

    def __init__(self, responsive: set, needed: int):
        super().__init__(
            f"insufficient quorum: need {needed}, responsive {sorted(responsive)}"
        )
        self.responsive = set(responsive)
        self.needed = needed


class StateMachineViolation(QoesignError):
    """Operation not allowed in the session's current state."""


class ProtocolViolation(QoesignError):
    """Contribution from a non-participant or a duplicate contribution."""


class MisbehaviorError(QoesignError):
    """A partial signature failed verification. Names the holder."""

    def __init__(self, holder, message: str = "invalid partial signature"):
        super().__init__(f"{message} from {holder}")
        self.holder = holder


class NotReadyError(QoesignError):
    """Aggregation requested before all partials are present."""


class MigrationAborted(QoesignError):
    """Suite migration failed; the old key stays active."""


class LedgerError(QoesignError):
    """An entry's fields are incomplete or inconsistent for its kind."""


class LedgerUnavailable(QoesignError):
    """Ledger persistence failed; sessions must fail closed."""


class ConfigError(QoesignError):
    """A scenario or service configuration is invalid."""


class KeystoreError(QoesignError):
    """Stored key material is unreadable: wrong passphrase or corrupt file."""
