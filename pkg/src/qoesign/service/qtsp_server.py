"""Standalone QTSP signing node for multi-process deployments.

The process holds exactly one share per user key and performs only the
two share-local operations: nonce commitment and partial signature. The
full share never leaves this process; the coordinator only ever sees
commitments and partials, which is the entire point of the split.
"""

from __future__ import annotations

import hmac
import random

from fastapi import FastAPI, Header
from pydantic import BaseModel

from qoesign.errors import ConfigError, ProtocolViolation
from qoesign.protocol.keys import DistributedKey, Holder
from qoesign.protocol.nodes import QtspNode
from qoesign.service.bootstrap import api_token, bootstrap_user_key
from qoesign.service.config import ServiceConfig
from qoesign.service.http import ApiError, install_error_handlers, require_bearer
from qoesign.suites.registry import SuiteRegistry, default_registry


class NonceRequest(BaseModel):
    session_id: str


class PartialRequest(BaseModel):
    session_id: str
    message_hash: str
    aggregate_commitment: str
    participants: list[int]


def _hex_bytes(value: str, expected_len: int, field_name: str) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise ApiError(400, "invalid-request", f"{field_name} is not hex") from None
    if len(raw) != expected_len:
        raise ApiError(
            400, "invalid-request",
            f"{field_name} must be {expected_len} bytes, got {len(raw)}",
        )
    return raw


def build_qtsp_app(
    config: ServiceConfig, index: int, registry: SuiteRegistry | None = None
) -> FastAPI:
    if not 1 <= index <= config.n:
        raise ConfigError(f"qtsp index {index} outside 1..{config.n}")
    registry = registry or default_registry()
    suite = registry.resolve(config.suite_id)
    expected_token = api_token(config.seed, f"qtsp-{index}")

    nodes: dict[str, QtspNode] = {}
    keys: dict[str, DistributedKey] = {}
    for user_id in config.users:
        key, shares = bootstrap_user_key(config, suite, user_id)
        keys[user_id] = key
        # keep this node's share only; the rest of `shares` is dropped.
        # nonces come from the OS: a seeded stream would replay the same
        # nonce sequence after a process restart, which leaks the share
        nodes[user_id] = QtspNode(
            index=index,
            share=shares[Holder.qtsp(index)],
            rng=random.SystemRandom(),
        )

    app = FastAPI(title=f"qoesign qtsp-{index}")
    install_error_handlers(app)

    def _auth(authorization: str | None) -> None:
        token = require_bearer(authorization)
        if not hmac.compare_digest(token, expected_token):
            raise ApiError(403, "forbidden", "token does not belong to the coordinator")

    def _node(user_id: str) -> QtspNode:
        try:
            return nodes[user_id]
        except KeyError:
            raise ApiError(404, "unknown-user", f"no key material for {user_id!r}") from None

    @app.get("/v1/health")
    def health():
        return {"index": index, "suite_id": config.suite_id, "users": list(config.users)}

    @app.post("/v1/users/{user_id}/nonce")
    def nonce(user_id: str, body: NonceRequest, authorization: str | None = Header(default=None)):
        _auth(authorization)
        node = _node(user_id)
        session_id = _hex_bytes(body.session_id, 16, "session_id")
        try:
            commitment = node.commit_nonce(session_id, suite)
        except ProtocolViolation as exc:
            raise ApiError(409, "protocol-violation", str(exc)) from None
        return {"commitment": suite.group.encode(commitment).hex()}

    @app.post("/v1/users/{user_id}/partial")
    def partial(user_id: str, body: PartialRequest, authorization: str | None = Header(default=None)):
        _auth(authorization)
        node = _node(user_id)
        session_id = _hex_bytes(body.session_id, 16, "session_id")
        message_hash = _hex_bytes(body.message_hash, 32, "message_hash")
        aggregate = suite.group.decode(
            _hex_bytes(body.aggregate_commitment, suite.group.element_bytes,
                       "aggregate_commitment")
        )
        try:
            z = node.produce_partial(
                suite,
                session_id,
                message_hash,
                keys[user_id].group_public_key,
                aggregate,
                set(body.participants),
            )
        except ProtocolViolation as exc:
            raise ApiError(409, "protocol-violation", str(exc)) from None
        return {"z": suite.group.encode_scalar(z).hex()}

    return app
