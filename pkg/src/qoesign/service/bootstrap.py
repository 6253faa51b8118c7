"""Deterministic key and credential bootstrap shared by both service roles.

Every process in a deployment derives the same distributed key material
from the configured seed and then keeps only the share belonging to its
own role. This replaces running the key-generation rounds over the
network; the simulator package covers the adversarial side of that
story, and the protocol package holds the actual dkg logic being reused
here.

The bearer tokens are pre-provisioned credentials for a desk-scale
demo. They stand in for real user authentication and for mutual TLS
between coordinator and QTSP hosts.
"""

from __future__ import annotations

import hashlib
import hmac
import random

from qoesign.protocol.keys import AccessStructure, DistributedKey, Holder, KeyShare, dkg
from qoesign.service.config import ServiceConfig
from qoesign.suites.registry import SignatureSuite

TOKEN_DOMAIN = b"QOESIGN/v1/api-token"
RNG_DOMAIN = b"QOESIGN/v1/service-rng"


def derived_rng(seed: int, label: str) -> random.Random:
    digest = hashlib.sha256(RNG_DOMAIN + seed.to_bytes(8, "big") + label.encode())
    return random.Random(int.from_bytes(digest.digest()[:8], "big"))


def bootstrap_user_key(
    config: ServiceConfig, suite: SignatureSuite, user_id: str
) -> tuple[DistributedKey, dict[Holder, KeyShare]]:
    access = AccessStructure(t=config.t, n=config.n)
    rng = derived_rng(config.seed, f"dkg/{user_id}")
    return dkg(access, suite, rng)


def api_token(seed: int, principal: str) -> str:
    """Bearer token for a user id or a `qtsp-<i>` peer role."""
    mac = hmac.new(seed.to_bytes(8, "big"), TOKEN_DOMAIN + principal.encode(), hashlib.sha256)
    return mac.hexdigest()
