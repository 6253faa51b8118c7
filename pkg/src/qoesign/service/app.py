"""Coordinator HTTP service: the signing flow for service providers and users.

The service provider and the user app are both plain API clients of this
process. Users authenticate with a pre-provisioned bearer token; the
approval endpoint is the human decision point, so it is the only
authenticated mutation.

Concurrency: every mutation of a user's sessions or ledger runs under
that user's lock. That is stricter than per-session exclusivity and
makes ledger appends trivially serial.

Failure policy: a broken ledger store fails the session closed (503, no
signature released). An unreachable QTSP peer aborts the session and
logs the abort.
"""

from __future__ import annotations

import hmac as hmac_mod
import random
import secrets
import threading
import time
from dataclasses import dataclass, field

import httpx
from fastapi import FastAPI, Header
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from qoesign.errors import (
    ConfigError,
    LedgerUnavailable,
    MisbehaviorError,
    ProtocolViolation,
    SuiteNotFoundError,
    SuiteStateError,
)
from qoesign.ledger.chain import Ledger, LedgerEntry
from qoesign.ledger.store import FileLedgerStore
from qoesign.protocol.keys import DistributedKey, Holder
from qoesign.protocol.nodes import QtspNode, UserNode
from qoesign.protocol.session import (
    Decision,
    SessionState,
    SigningSession,
    aggregate,
    approve,
    contribute_nonce,
    contribute_partial,
    start_session,
)
from qoesign.service.bootstrap import api_token, bootstrap_user_key
from qoesign.service.config import ServiceConfig, ServiceMode, ensure_data_dir
from qoesign.service.http import ApiError, install_error_handlers, require_bearer
from qoesign.service.keystore import Keystore
from qoesign.suites.registry import SuiteRegistry, default_registry
from qoesign.suites.schnorr import Signature
from qoesign.threatmodel.dataset import load_bundled_dataset
from qoesign.threatmodel.render import render_matrix
from qoesign.threatmodel.scoring import score_model
from qoesign.threatmodel.types import RuleMode


class CreateSessionRequest(BaseModel):
    user_id: str
    message_hash: str
    suite_id: str | None = None


class ApprovalRequest(BaseModel):
    decision: str


@dataclass
class UserContext:
    key: DistributedKey
    node: UserNode
    ledger: Ledger
    token: str
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class SessionHandle:
    session: SigningSession
    user_id: str


class RemoteQtspPool:
    """HTTP clients for standalone QTSP processes, one per index."""

    def __init__(self, clients: dict[int, httpx.Client], tokens: dict[int, str]):
        self.clients = clients
        self.tokens = tokens

    def _post(self, index: int, path: str, body: dict) -> dict:
        headers = {"Authorization": f"Bearer {self.tokens[index]}"}
        response = self.clients[index].post(path, json=body, headers=headers)
        if response.status_code != 200:
            raise ProtocolViolation(
                f"qtsp-{index} answered {response.status_code} for {path}"
            )
        return response.json()

    def commit_nonce(self, index, user_id, suite, session_id) -> int:
        doc = self._post(
            index, f"/v1/users/{user_id}/nonce", {"session_id": session_id.hex()}
        )
        return suite.group.decode(bytes.fromhex(doc["commitment"]))

    def produce_partial(
        self, index, user_id, suite, session_id, message_hash, aggregate_commitment,
        participants,
    ) -> int:
        doc = self._post(
            index,
            f"/v1/users/{user_id}/partial",
            {
                "session_id": session_id.hex(),
                "message_hash": message_hash.hex(),
                "aggregate_commitment": suite.group.encode(aggregate_commitment).hex(),
                "participants": sorted(participants),
            },
        )
        return suite.group.decode_scalar(bytes.fromhex(doc["z"]))

    def close(self) -> None:
        for client in self.clients.values():
            client.close()


class ServiceState:
    """Everything behind the endpoints; shared by HTTP and tests."""

    def __init__(
        self,
        config: ServiceConfig,
        registry: SuiteRegistry | None = None,
        qtsp_clients: dict[int, httpx.Client] | None = None,
    ):
        self.config = config
        self.registry = registry or default_registry()
        try:
            self.suite = self.registry.resolve(config.suite_id)
        except SuiteNotFoundError as exc:
            raise ConfigError(str(exc)) from None
        if self.suite.group is None:
            raise ConfigError(f"suite {config.suite_id!r} cannot run signing sessions")
        data_dir = ensure_data_dir(config)
        self.keystore = Keystore(data_dir)

        self.remote: RemoteQtspPool | None = None
        if config.mode is ServiceMode.MULTI_PROCESS:
            if qtsp_clients is None:
                qtsp_clients = {
                    i + 1: httpx.Client(base_url=address, timeout=5.0)
                    for i, address in enumerate(config.qtsp_peers)
                }
            tokens = {i: api_token(config.seed, f"qtsp-{i}") for i in qtsp_clients}
            self.remote = RemoteQtspPool(qtsp_clients, tokens)

        self.users: dict[str, UserContext] = {}
        self.local_nodes: dict[tuple[int, str], QtspNode] = {}
        group = self.suite.group
        for user_id in config.users:
            # every role derives the same material from the seed; this
            # process keeps the public part and the user share only
            key, shares = bootstrap_user_key(config, self.suite, user_id)
            if not self.keystore.has_share(user_id):
                self.keystore.save_user_share(
                    user_id, config.suite_id, shares[Holder.user()],
                    config.keystore_passphrase,
                )
            stored_suite, user_share = self.keystore.load_user_share(
                user_id, config.keystore_passphrase
            )
            if stored_suite != config.suite_id:
                raise ConfigError(
                    f"stored share for {user_id!r} was made for {stored_suite!r}"
                )
            if group.exp(group.generator, user_share.secret) != key.user_public_share:
                raise ConfigError(
                    f"stored share for {user_id!r} does not match the configured seed"
                )
            self.users[user_id] = UserContext(
                key=key,
                node=UserNode(
                    user_id=user_id, share=user_share, rng=random.SystemRandom()
                ),
                ledger=Ledger.open(FileLedgerStore(data_dir / f"ledger-{user_id}.log")),
                token=api_token(config.seed, user_id),
            )
            if self.remote is None:
                for i in range(1, config.n + 1):
                    self.local_nodes[(i, user_id)] = QtspNode(
                        index=i, share=shares[Holder.qtsp(i)], rng=random.SystemRandom()
                    )
        self.sessions: dict[str, SessionHandle] = {}

    # -- qtsp access, mode-independent ---------------------------------

    def _qtsp_nonce(self, index, user_id, session_id) -> int:
        if self.remote is not None:
            return self.remote.commit_nonce(index, user_id, self.suite, session_id)
        return self.local_nodes[(index, user_id)].commit_nonce(session_id, self.suite)

    def _qtsp_partial(self, index, user_id, session, participants) -> int:
        if self.remote is not None:
            return self.remote.produce_partial(
                index, user_id, self.suite, session.session_id, session.message_hash,
                session.aggregate_commitment, participants,
            )
        return self.local_nodes[(index, user_id)].produce_partial(
            self.suite, session.session_id, session.message_hash,
            session.key.group_public_key, session.aggregate_commitment, participants,
        )

    # -- operations ------------------------------------------------------

    def _context(self, user_id: str) -> UserContext:
        try:
            return self.users[user_id]
        except KeyError:
            raise ApiError(404, "unknown-user", f"user {user_id!r} is not registered") from None

    def _handle(self, session_id: str) -> SessionHandle:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise ApiError(404, "unknown-session", f"no session {session_id!r}") from None

    def create_session(self, body: CreateSessionRequest) -> dict:
        ctx = self._context(body.user_id)
        if body.suite_id is not None and body.suite_id != self.config.suite_id:
            raise ApiError(
                400, "unknown-suite",
                f"this deployment signs with {self.config.suite_id!r}",
                {"served_suite": self.config.suite_id},
            )
        try:
            message_hash = bytes.fromhex(body.message_hash)
        except ValueError:
            raise ApiError(400, "bad-message-hash", "message_hash is not hex") from None
        if len(message_hash) != 32:
            raise ApiError(
                400, "bad-message-hash",
                f"message_hash must be 64 hex characters, got {len(body.message_hash)}",
            )
        with ctx.lock:
            try:
                session = start_session(
                    ctx.key, self.suite, message_hash,
                    set(range(1, self.config.n + 1)),
                    session_id=secrets.token_bytes(16),
                )
            except SuiteStateError as exc:
                raise ApiError(409, "suite-retired", str(exc)) from None
            handle = SessionHandle(session=session, user_id=body.user_id)
            self.sessions[session.session_id.hex()] = handle
        return self._session_body(handle)

    def _authenticate(self, ctx: UserContext, authorization: str | None) -> None:
        token = require_bearer(authorization)
        if hmac_mod.compare_digest(token, ctx.token):
            return
        if any(hmac_mod.compare_digest(token, c.token) for c in self.users.values()):
            raise ApiError(403, "forbidden", "token belongs to a different user")
        raise ApiError(401, "unauthenticated", "unrecognized token")

    def decide_session(
        self, session_id: str, body: ApprovalRequest, authorization: str | None
    ) -> dict:
        handle = self._handle(session_id)
        ctx = self._context(handle.user_id)
        self._authenticate(ctx, authorization)
        if body.decision not in ("approve", "deny"):
            raise ApiError(
                400, "invalid-request",
                f"decision must be approve or deny, got {body.decision!r}",
            )
        now = int(time.time())
        with ctx.lock:
            session = handle.session
            if session.state is not SessionState.AWAITING_USER_APPROVAL:
                raise ApiError(
                    409, "wrong-state",
                    "session does not accept an approval decision",
                    {"state": session.state.value},
                )
            ctx.node.policy = body.decision
            decision = ctx.node.decide(session.session_id, session.message_hash, now)
            try:
                approve(session, decision, ctx.ledger, now)
            except LedgerUnavailable as exc:
                raise ApiError(503, "ledger-unavailable", str(exc)) from None
            if decision is Decision.DENY:
                return self._session_body(handle)
            self._run_rounds(handle, ctx, now)
        return self._session_body(handle)

    def _run_rounds(self, handle: SessionHandle, ctx: UserContext, now: int) -> Signature:
        session = handle.session
        suite = self.suite
        try:
            for holder in sorted(session.participants):
                if holder.is_user:
                    commitment = ctx.node.commit_nonce(session.session_id, suite)
                else:
                    commitment = self._qtsp_nonce(
                        holder.index, handle.user_id, session.session_id
                    )
                contribute_nonce(session, suite, holder, commitment)
            participants = set(session.qtsp_participants)
            for holder in sorted(session.participants):
                if holder.is_user:
                    z = ctx.node.produce_partial(
                        suite, session.session_id, session.message_hash,
                        session.key.group_public_key, session.aggregate_commitment,
                    )
                else:
                    z = self._qtsp_partial(
                        holder.index, handle.user_id, session, participants
                    )
                contribute_partial(session, suite, holder, z)
            return aggregate(session, suite, ctx.ledger, now)
        except LedgerUnavailable as exc:
            # fail closed: no signature goes out; state stays as-is so
            # the stuck session is visible in GET
            raise ApiError(503, "ledger-unavailable", str(exc)) from None
        except httpx.HTTPError as exc:
            session.abort("qtsp-unreachable")
            self._log_abort(ctx, session, now)
            raise ApiError(502, "qtsp-unreachable", str(exc)) from None
        except MisbehaviorError as exc:
            # contribute_partial already aborted the session
            self._log_abort(ctx, session, now)
            raise ApiError(500, "protocol-failure", str(exc)) from None
        except ProtocolViolation as exc:
            if session.state not in (SessionState.COMPLETED, SessionState.ABORTED):
                session.abort("protocol-failure")
                self._log_abort(ctx, session, now)
            raise ApiError(500, "protocol-failure", str(exc)) from None

    def _log_abort(self, ctx: UserContext, session: SigningSession, now: int) -> None:
        from qoesign.ledger.chain import EntryKind

        try:
            ctx.ledger.append(
                kind=EntryKind.SESSION_ABORTED,
                session_id=session.session_id,
                message_hash=session.message_hash,
                suite_id=session.suite_id,
                participants=session.qtsp_participants,
                timestamp=now,
            )
        except LedgerUnavailable:
            pass  # the abort itself cannot be logged; nothing to fail closed

    def _session_body(self, handle: SessionHandle) -> dict:
        session = handle.session
        body = {
            "session_id": session.session_id.hex(),
            "user_id": handle.user_id,
            "state": session.state.value,
            "suite_id": session.suite_id,
            "message_hash": session.message_hash.hex(),
        }
        if session.state is SessionState.ABORTED:
            body["abort_reason"] = session.abort_reason or ""
        if session.signature is not None:
            body["signature"] = session.signature.encode().hex()
        return body

    def session_body(self, session_id: str) -> dict:
        return self._session_body(self._handle(session_id))

    def ledger_body(self, user_id: str, verify: bool) -> dict:
        ctx = self._context(user_id)
        with ctx.lock:
            entries = ctx.ledger.entries()
            body = {
                "user_id": user_id,
                "entries": [self._entry_body(e) for e in entries],
            }
            if verify:
                status = ctx.ledger.verify_chain()
                body["chain"] = {
                    "ok": status.ok,
                    "broken_index": status.broken_index,
                    "reason": status.reason,
                }
        return body

    @staticmethod
    def _entry_body(entry: LedgerEntry) -> dict:
        return {
            "index": entry.index,
            "kind": entry.kind.name.lower(),
            "session_id": entry.session_id.hex(),
            "message_hash": entry.message_hash.hex(),
            "suite_id": entry.suite_id,
            "participants": list(entry.participants),
            "timestamp": entry.timestamp,
            "signature": entry.signature.hex(),
            "prev_hash": entry.prev_hash.hex(),
            "entry_hash": entry.entry_hash.hex(),
        }

    def key_body(self, user_id: str) -> dict:
        ctx = self._context(user_id)
        group = self.suite.group
        return {
            "user_id": user_id,
            "suite_id": self.config.suite_id,
            "epoch": ctx.key.epoch,
            "public_key": group.encode(ctx.key.group_public_key).hex(),
            "threshold": {"t": self.config.t, "n": self.config.n},
        }

    def user_token(self, user_id: str) -> str:
        """Demo provisioning hook: hands the user their bearer token."""
        return self._context(user_id).token

    def close(self) -> None:
        if self.remote is not None:
            self.remote.close()


MATRIX_MEDIA_TYPES = {"csv": "text/csv", "markdown": "text/markdown"}


def build_app(
    config: ServiceConfig | None = None,
    registry: SuiteRegistry | None = None,
    state: ServiceState | None = None,
    qtsp_clients: dict[int, httpx.Client] | None = None,
) -> FastAPI:
    if state is None:
        state = ServiceState(config or ServiceConfig(), registry, qtsp_clients)
    app = FastAPI(title="qoesign coordinator")
    install_error_handlers(app)
    app.state.service = state

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        return state.create_session(body)

    @app.post("/v1/sessions/{session_id}/approval")
    def decide(session_id: str, body: ApprovalRequest,
               authorization: str | None = Header(default=None)):
        return state.decide_session(session_id, body, authorization)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        return state.session_body(session_id)

    @app.get("/v1/users/{user_id}/ledger")
    def get_ledger(user_id: str, verify: bool = False):
        return state.ledger_body(user_id, verify)

    @app.get("/v1/users/{user_id}/key")
    def get_key(user_id: str):
        return state.key_body(user_id)

    @app.get("/v1/threatmodel/matrix")
    def get_matrix(format: str = "markdown", rule: str = "table"):
        if format not in MATRIX_MEDIA_TYPES:
            raise ApiError(400, "invalid-request", f"format must be csv or markdown, got {format!r}")
        if rule not in ("table", "stated"):
            raise ApiError(400, "invalid-request", f"rule must be table or stated, got {rule!r}")
        model, entries = load_bundled_dataset()
        scored = score_model(model, entries, RuleMode(rule))
        return PlainTextResponse(
            render_matrix(scored, fmt=format), media_type=MATRIX_MEDIA_TYPES[format]
        )

    return app
