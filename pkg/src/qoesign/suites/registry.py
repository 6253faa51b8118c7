"""Signature-suite registry: the agility layer.

Suites are immutable descriptions of a signature scheme instantiation;
the registry tracks their lifecycle status and answers negotiation
queries in registration order. Swapping the algorithm under a deployed
system then means registering a new suite, migrating keys, and marking
the old suite deprecated, without touching verification of old
artifacts.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from enum import Enum

from qoesign.errors import (
    DuplicateSuiteError,
    NoSuiteAvailableError,
    SuiteNotFoundError,
    ValidationError,
)
from qoesign.groups.group import GroupDescription, production_group, toy_group


class SuiteStatus(Enum):
    ACTIVE = "active"
    DEPRECATED = "deprecated"
    EXPERIMENTAL = "experimental"


@dataclass(frozen=True)
class SignatureSuite:
    suite_id: str
    algorithm: str
    group: GroupDescription | None
    threshold_capable: bool
    pq_claimed: bool
    status: SuiteStatus

    def __post_init__(self):
        if not self.suite_id or len(self.suite_id.encode()) > 255:
            raise ValidationError("suite_id", "must be 1..255 encoded bytes")
        if self.threshold_capable and self.group is None:
            raise ValidationError(
                "group", "threshold-capable suites need group parameters"
            )


class SuiteRegistry:
    """Registration-ordered suite store; reads are lock-free snapshots."""

    def __init__(self):
        self._lock = threading.Lock()
        self._suites: dict[str, SignatureSuite] = {}

    def register(self, suite: SignatureSuite) -> None:
        with self._lock:
            if suite.suite_id in self._suites:
                raise DuplicateSuiteError(f"suite {suite.suite_id!r} already registered")
            self._suites[suite.suite_id] = suite

    def resolve(self, suite_id: str) -> SignatureSuite:
        suite = self._suites.get(suite_id)
        if suite is None:
            raise SuiteNotFoundError(f"no suite registered under {suite_id!r}")
        return suite

    def list_suites(self) -> list[SignatureSuite]:
        return list(self._suites.values())

    def set_status(self, suite_id: str, status: SuiteStatus) -> SignatureSuite:
        with self._lock:
            if suite_id not in self._suites:
                raise SuiteNotFoundError(f"no suite registered under {suite_id!r}")
            updated = replace(self._suites[suite_id], status=status)
            self._suites[suite_id] = updated
            return updated

    def negotiate(
        self,
        threshold_capable: bool | None = None,
        pq_claimed: bool | None = None,
    ) -> str:
        """First Active suite matching all requested flags, by registration."""
        for suite in self._suites.values():
            if suite.status is not SuiteStatus.ACTIVE:
                continue
            if threshold_capable is not None and suite.threshold_capable != threshold_capable:
                continue
            if pq_claimed is not None and suite.pq_claimed != pq_claimed:
                continue
            return suite.suite_id
        unmet = {"status": "active"}
        if threshold_capable is not None:
            unmet["threshold_capable"] = threshold_capable
        if pq_claimed is not None:
            unmet["pq_claimed"] = pq_claimed
        raise NoSuiteAvailableError(unmet)


def default_registry() -> SuiteRegistry:
    registry = SuiteRegistry()
    registry.register(
        SignatureSuite(
            suite_id="schnorr-toy-v1",
            algorithm="schnorr",
            group=toy_group(),
            threshold_capable=True,
            pq_claimed=False,
            status=SuiteStatus.ACTIVE,
        )
    )
    registry.register(
        SignatureSuite(
            suite_id="schnorr-prod-v1",
            algorithm="schnorr",
            group=production_group(),
            threshold_capable=True,
            pq_claimed=False,
            status=SuiteStatus.ACTIVE,
        )
    )
    registry.register(
        SignatureSuite(
            suite_id="lamport-ots-v1",
            algorithm="lamport-ots",
            group=None,
            threshold_capable=False,
            pq_claimed=True,
            status=SuiteStatus.EXPERIMENTAL,
        )
    )
    return registry
