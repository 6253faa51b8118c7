"""HTTP service: session flow, auth, error contract, key storage."""

from __future__ import annotations

import hashlib
import json

import httpx
import pytest
from fastapi.testclient import TestClient

from qoesign.errors import ConfigError, KeystoreError
from qoesign.ledger.chain import Ledger
from qoesign.ledger.store import BrokenStore
from qoesign.protocol.keys import AccessStructure, Holder, dkg
from qoesign.service.app import ServiceState, build_app
from qoesign.service.config import (
    ServiceConfig,
    ServiceMode,
    config_from_dict,
    ensure_data_dir,
    load_config,
)
from qoesign.service.keystore import Keystore
from qoesign.service.qtsp_server import build_qtsp_app
from qoesign.suites.registry import default_registry
from qoesign.suites.schnorr import decode_signature, schnorr_verify
from qoesign.threatmodel.dataset import load_bundled_dataset
from qoesign.threatmodel.render import render_matrix
from qoesign.threatmodel.scoring import score_model
from qoesign.threatmodel.types import RuleMode

SUITE = default_registry().resolve("schnorr-toy-v1")


def msg_hash(label: str) -> str:
    return hashlib.sha256(label.encode()).hexdigest()


@pytest.fixture()
def service(tmp_path):
    config = ServiceConfig(n=3, t=2, data_dir=str(tmp_path / "data"),
                           users=("alice", "bob"), seed=7)
    app = build_app(config)
    client = TestClient(app)
    yield client, app.state.service
    app.state.service.close()


def auth(state: ServiceState, user_id: str) -> dict:
    return {"Authorization": f"Bearer {state.user_token(user_id)}"}


def create(client, user_id="alice", message="payment order 7", **extra) -> dict:
    response = client.post(
        "/v1/sessions",
        json={"user_id": user_id, "message_hash": msg_hash(message), **extra},
    )
    assert response.status_code == 201, response.text
    return response.json()


class TestSessionFlow:
    def test_create_returns_pending_session(self, service):
        client, _ = service
        body = create(client)
        assert body["state"] == "awaiting_user_approval"
        assert len(body["session_id"]) == 32
        assert body["suite_id"] == "schnorr-toy-v1"
        assert "signature" not in body

    def test_happy_path_signature_verifies_offline(self, service):
        client, state = service
        body = create(client)
        sid = body["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "approve"},
            headers=auth(state, "alice"),
        )
        assert response.status_code == 200
        assert response.json()["state"] == "completed"
        signature_hex = response.json()["signature"]

        fetched = client.get(f"/v1/sessions/{sid}").json()
        assert fetched["state"] == "completed"
        assert fetched["signature"] == signature_hex
        assert fetched["suite_id"] == "schnorr-toy-v1"

        pk_hex = client.get("/v1/users/alice/key").json()["public_key"]
        assert schnorr_verify(
            SUITE,
            SUITE.group.decode(bytes.fromhex(pk_hex)),
            bytes.fromhex(fetched["message_hash"]),
            decode_signature(bytes.fromhex(signature_hex)),
            bytes.fromhex(sid),
        )

    def test_deny_aborts_and_lands_in_ledger(self, service):
        client, state = service
        sid = create(client)["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "deny"},
            headers=auth(state, "alice"),
        )
        assert response.status_code == 200
        assert response.json()["state"] == "aborted"
        assert response.json()["abort_reason"] == "user-denied"

        ledger = client.get("/v1/users/alice/ledger?verify=true").json()
        assert [e["kind"] for e in ledger["entries"]] == ["session_denied"]
        assert ledger["chain"]["ok"] is True

    def test_repeat_approval_409_and_never_double_signs(self, service):
        client, state = service
        sid = create(client)["session_id"]
        headers = auth(state, "alice")
        first = client.post(f"/v1/sessions/{sid}/approval",
                            json={"decision": "approve"}, headers=headers)
        signature = first.json()["signature"]
        for _ in range(3):
            again = client.post(f"/v1/sessions/{sid}/approval",
                                json={"decision": "approve"}, headers=headers)
            assert again.status_code == 409
            assert again.json()["code"] == "wrong-state"
        assert client.get(f"/v1/sessions/{sid}").json()["signature"] == signature
        entries = client.get("/v1/users/alice/ledger").json()["entries"]
        completions = [e for e in entries if e["kind"] == "session_completed"]
        assert len(completions) == 1

    def test_approval_after_deny_409(self, service):
        client, state = service
        sid = create(client)["session_id"]
        headers = auth(state, "alice")
        client.post(f"/v1/sessions/{sid}/approval",
                    json={"decision": "deny"}, headers=headers)
        again = client.post(f"/v1/sessions/{sid}/approval",
                            json={"decision": "approve"}, headers=headers)
        assert again.status_code == 409

    def test_sessions_are_per_user(self, service):
        client, state = service
        sid = create(client, user_id="bob", message="bob's doc")["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "approve"},
            headers=auth(state, "bob"),
        )
        assert response.status_code == 200
        assert client.get("/v1/users/alice/ledger").json()["entries"] == []
        assert len(client.get("/v1/users/bob/ledger").json()["entries"]) == 1

    def test_ledger_accumulates_and_verifies(self, service):
        client, state = service
        headers = auth(state, "alice")
        for i, decision in enumerate(("approve", "deny", "approve")):
            sid = create(client, message=f"doc {i}")["session_id"]
            client.post(f"/v1/sessions/{sid}/approval",
                        json={"decision": decision}, headers=headers)
        body = client.get("/v1/users/alice/ledger?verify=true").json()
        kinds = [e["kind"] for e in body["entries"]]
        assert kinds == ["session_completed", "session_denied", "session_completed"]
        assert [e["index"] for e in body["entries"]] == [0, 1, 2]
        assert body["chain"] == {"ok": True, "broken_index": None, "reason": None}


class TestErrors:
    def test_unknown_user_404(self, service):
        client, _ = service
        response = client.post(
            "/v1/sessions",
            json={"user_id": "mallory", "message_hash": msg_hash("x")},
        )
        assert response.status_code == 404
        assert response.json()["code"] == "unknown-user"

    @pytest.mark.parametrize("bad", ["zz", "abc", "00" * 31, "00" * 33, ""])
    def test_malformed_hash_400(self, service, bad):
        client, _ = service
        response = client.post(
            "/v1/sessions", json={"user_id": "alice", "message_hash": bad}
        )
        assert response.status_code == 400
        assert response.json()["code"] == "bad-message-hash"

    def test_foreign_suite_400(self, service):
        client, _ = service
        response = client.post(
            "/v1/sessions",
            json={"user_id": "alice", "message_hash": msg_hash("x"),
                  "suite_id": "schnorr-prod-v1"},
        )
        assert response.status_code == 400
        assert response.json()["code"] == "unknown-suite"
        assert response.json()["details"]["served_suite"] == "schnorr-toy-v1"

    def test_unknown_session_404(self, service):
        client, state = service
        assert client.get(f"/v1/sessions/{'0' * 32}").status_code == 404
        response = client.post(
            f"/v1/sessions/{'0' * 32}/approval",
            json={"decision": "approve"}, headers=auth(state, "alice"),
        )
        assert response.status_code == 404

    def test_missing_auth_401(self, service):
        client, _ = service
        sid = create(client)["session_id"]
        response = client.post(f"/v1/sessions/{sid}/approval",
                               json={"decision": "approve"})
        assert response.status_code == 401
        assert response.json()["code"] == "unauthenticated"

    def test_garbage_token_401(self, service):
        client, _ = service
        sid = create(client)["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "approve"},
            headers={"Authorization": "Bearer ffff"},
        )
        assert response.status_code == 401

    def test_other_users_token_403(self, service):
        client, state = service
        sid = create(client, user_id="alice")["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "approve"},
            headers=auth(state, "bob"),
        )
        assert response.status_code == 403
        assert response.json()["code"] == "forbidden"
        # and the session is untouched
        assert client.get(f"/v1/sessions/{sid}").json()["state"] == "awaiting_user_approval"

    def test_bad_decision_400(self, service):
        client, state = service
        sid = create(client)["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "perhaps"}, headers=auth(state, "alice"),
        )
        assert response.status_code == 400
        assert response.json()["code"] == "invalid-request"

    def test_missing_body_field_400(self, service):
        client, _ = service
        response = client.post("/v1/sessions", json={"user_id": "alice"})
        assert response.status_code == 400
        assert response.json()["code"] == "invalid-request"

    def test_error_bodies_share_one_shape(self, service):
        client, _ = service
        probes = [
            client.post("/v1/sessions", json={"user_id": "nobody",
                                              "message_hash": msg_hash("x")}),
            client.post("/v1/sessions", json={"user_id": "alice",
                                              "message_hash": "not-hex"}),
            client.get(f"/v1/sessions/{'0' * 32}"),
            client.get("/v1/threatmodel/matrix?format=pdf"),
        ]
        for response in probes:
            assert response.status_code >= 400
            assert sorted(response.json()) == ["code", "details", "message"]


class TestFailurePaths:
    def test_broken_ledger_fails_closed(self, service):
        client, state = service
        sid = create(client)["session_id"]
        ctx = state.users["alice"]
        good_ledger = ctx.ledger
        ctx.ledger = Ledger(store=BrokenStore(), entries=good_ledger.entries())
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "approve"}, headers=auth(state, "alice"),
        )
        assert response.status_code == 503
        assert response.json()["code"] == "ledger-unavailable"
        fetched = client.get(f"/v1/sessions/{sid}").json()
        assert fetched["state"] == "aggregated"  # stuck, but no signature went out
        assert "signature" not in fetched
        ctx.ledger = good_ledger

    def test_unreachable_qtsp_aborts_and_logs(self, tmp_path):
        def refuse(request: httpx.Request) -> httpx.Response:
            raise httpx.ConnectError("connection refused", request=request)

        config = ServiceConfig(
            n=3, t=2, data_dir=str(tmp_path / "data"), seed=7,
            mode=ServiceMode.MULTI_PROCESS,
            qtsp_peers=("http://q1", "http://q2", "http://q3"),
        )
        dead = {
            i: httpx.Client(transport=httpx.MockTransport(refuse),
                            base_url=f"http://q{i}")
            for i in (1, 2, 3)
        }
        app = build_app(config, qtsp_clients=dead)
        client = TestClient(app)
        state = app.state.service
        sid = create(client)["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/approval",
            json={"decision": "approve"}, headers=auth(state, "alice"),
        )
        assert response.status_code == 502
        assert response.json()["code"] == "qtsp-unreachable"
        fetched = client.get(f"/v1/sessions/{sid}").json()
        assert fetched["state"] == "aborted"
        assert fetched["abort_reason"] == "qtsp-unreachable"
        kinds = [e["kind"] for e in client.get("/v1/users/alice/ledger").json()["entries"]]
        assert kinds == ["session_aborted"]
        state.close()


SECRET_FIELD_MARKERS = ("share", "secret", "nonce", "private", "passphrase", "token", "seed")


def field_names(doc) -> set:
    names = set()
    if isinstance(doc, dict):
        for key, value in doc.items():
            names.add(key)
            names |= field_names(value)
    elif isinstance(doc, list):
        for item in doc:
            names |= field_names(item)
    return names


class TestDisclosure:
    def test_no_endpoint_returns_secret_field_names(self, service):
        client, state = service
        headers = auth(state, "alice")
        sid = create(client)["session_id"]
        client.post(f"/v1/sessions/{sid}/approval",
                    json={"decision": "approve"}, headers=headers)
        responses = [
            client.post("/v1/sessions", json={"user_id": "alice",
                                              "message_hash": msg_hash("scan")}),
            client.get(f"/v1/sessions/{sid}"),
            client.get("/v1/users/alice/ledger?verify=true"),
            client.get("/v1/users/alice/key"),
            client.post("/v1/sessions", json={"user_id": "ghost",
                                              "message_hash": msg_hash("x")}),
            client.post(f"/v1/sessions/{sid}/approval",
                        json={"decision": "approve"}, headers=headers),
        ]
        for response in responses:
            for name in field_names(response.json()):
                lowered = name.lower()
                for marker in SECRET_FIELD_MARKERS:
                    assert marker not in lowered, (name, response.request.url)

    def test_qtsp_server_responses_are_clean_too(self, tmp_path):
        config = ServiceConfig(n=3, t=2, data_dir=str(tmp_path / "d"), seed=7,
                               mode=ServiceMode.MULTI_PROCESS,
                               qtsp_peers=("http://q1", "http://q2", "http://q3"))
        qtsp = TestClient(build_qtsp_app(config, 1))
        health = qtsp.get("/v1/health")
        for name in field_names(health.json()):
            for marker in SECRET_FIELD_MARKERS:
                assert marker not in name.lower()


class TestMatrixEndpoint:
    @pytest.mark.parametrize("fmt", ["csv", "markdown"])
    @pytest.mark.parametrize("rule", ["table", "stated"])
    def test_matches_module_render(self, service, fmt, rule):
        client, _ = service
        response = client.get(f"/v1/threatmodel/matrix?format={fmt}&rule={rule}")
        assert response.status_code == 200
        model, entries = load_bundled_dataset()
        expected = render_matrix(score_model(model, entries, RuleMode(rule)), fmt=fmt)
        assert response.text == expected

    def test_media_types(self, service):
        client, _ = service
        csv = client.get("/v1/threatmodel/matrix?format=csv")
        markdown = client.get("/v1/threatmodel/matrix?format=markdown")
        assert csv.headers["content-type"].startswith("text/csv")
        assert markdown.headers["content-type"].startswith("text/markdown")

    @pytest.mark.parametrize("query", ["format=pdf", "rule=vibes"])
    def test_bad_parameters_400(self, service, query):
        client, _ = service
        response = client.get(f"/v1/threatmodel/matrix?{query}")
        assert response.status_code == 400


class TestModes:
    def build_multi(self, tmp_path, seed=7):
        config = ServiceConfig(
            n=3, t=2, data_dir=str(tmp_path / "multi"), seed=seed,
            mode=ServiceMode.MULTI_PROCESS,
            qtsp_peers=("http://q1", "http://q2", "http://q3"),
        )
        clients = {i: TestClient(build_qtsp_app(config, i)) for i in (1, 2, 3)}
        return build_app(config, qtsp_clients=clients)

    def test_same_key_and_both_signatures_verify(self, tmp_path):
        local_cfg = ServiceConfig(n=3, t=2, data_dir=str(tmp_path / "local"), seed=7)
        local_app = build_app(local_cfg)
        multi_app = self.build_multi(tmp_path, seed=7)
        local, multi = TestClient(local_app), TestClient(multi_app)

        pk_local = local.get("/v1/users/alice/key").json()["public_key"]
        pk_multi = multi.get("/v1/users/alice/key").json()["public_key"]
        assert pk_local == pk_multi
        public_key = SUITE.group.decode(bytes.fromhex(pk_local))

        for client, app in ((local, local_app), (multi, multi_app)):
            state = app.state.service
            sid = create(client)["session_id"]
            response = client.post(
                f"/v1/sessions/{sid}/approval",
                json={"decision": "approve"}, headers=auth(state, "alice"),
            )
            assert response.json()["state"] == "completed"
            assert schnorr_verify(
                SUITE,
                public_key,
                bytes.fromhex(msg_hash("payment order 7")),
                decode_signature(bytes.fromhex(response.json()["signature"])),
                bytes.fromhex(sid),
            )
            state.close()

    def test_coordinator_keeps_no_qtsp_shares_in_multi_mode(self, tmp_path):
        app = self.build_multi(tmp_path)
        state = app.state.service
        assert state.local_nodes == {}
        assert state.remote is not None
        state.close()

    def test_qtsp_rejects_unauthenticated_round(self, tmp_path):
        config = ServiceConfig(n=3, t=2, data_dir=str(tmp_path / "d"), seed=7,
                               mode=ServiceMode.MULTI_PROCESS,
                               qtsp_peers=("http://q1", "http://q2", "http://q3"))
        qtsp = TestClient(build_qtsp_app(config, 2))
        bare = qtsp.post("/v1/users/alice/nonce", json={"session_id": "00" * 16})
        assert bare.status_code == 401
        wrong = qtsp.post("/v1/users/alice/nonce", json={"session_id": "00" * 16},
                          headers={"Authorization": "Bearer nope"})
        assert wrong.status_code == 403


class TestPersistence:
    def test_restart_keeps_ledger_and_keystore(self, tmp_path):
        config = ServiceConfig(n=3, t=2, data_dir=str(tmp_path / "data"), seed=7)
        app = build_app(config)
        client = TestClient(app)
        state = app.state.service
        sid = create(client)["session_id"]
        client.post(f"/v1/sessions/{sid}/approval",
                    json={"decision": "approve"}, headers=auth(state, "alice"))
        pk_before = client.get("/v1/users/alice/key").json()["public_key"]

        reopened = build_app(config)  # same data_dir: reload, do not regenerate
        client2 = TestClient(reopened)
        body = client2.get("/v1/users/alice/ledger?verify=true").json()
        assert [e["kind"] for e in body["entries"]] == ["session_completed"]
        assert body["chain"]["ok"] is True
        assert client2.get("/v1/users/alice/key").json()["public_key"] == pk_before
        # sessions are in-memory only
        assert client2.get(f"/v1/sessions/{sid}").status_code == 404

    def test_seed_change_with_old_keystore_is_refused(self, tmp_path):
        data_dir = str(tmp_path / "data")
        build_app(ServiceConfig(n=3, t=2, data_dir=data_dir, seed=7))
        with pytest.raises(ConfigError):
            build_app(ServiceConfig(n=3, t=2, data_dir=data_dir, seed=8))


class TestKeystore:
    def make_share(self):
        key, shares = dkg(AccessStructure(t=2, n=3), SUITE,
                          __import__("random").Random(5))
        return shares[Holder.user()]

    def test_roundtrip(self, tmp_path):
        store = Keystore(tmp_path)
        share = self.make_share()
        store.save_user_share("alice", "schnorr-toy-v1", share, "hunter2")
        suite_id, loaded = store.load_user_share("alice", "hunter2")
        assert suite_id == "schnorr-toy-v1"
        assert loaded == share
        assert store.has_share("alice") and not store.has_share("bob")

    def test_wrong_passphrase_rejected(self, tmp_path):
        store = Keystore(tmp_path)
        store.save_user_share("alice", "schnorr-toy-v1", self.make_share(), "right")
        with pytest.raises(KeystoreError):
            store.load_user_share("alice", "wrong")

    def test_corrupt_file_rejected(self, tmp_path):
        store = Keystore(tmp_path)
        path = store.save_user_share("alice", "schnorr-toy-v1", self.make_share(), "p")
        blob = bytearray(path.read_bytes())
        blob[-1] ^= 0x01
        path.write_bytes(bytes(blob))
        with pytest.raises(KeystoreError):
            store.load_user_share("alice", "p")

    def test_missing_share_rejected(self, tmp_path):
        with pytest.raises(KeystoreError):
            Keystore(tmp_path).load_user_share("alice", "p")

    def test_payload_is_not_plaintext(self, tmp_path):
        store = Keystore(tmp_path)
        path = store.save_user_share("alice", "schnorr-toy-v1", self.make_share(), "p")
        blob = path.read_bytes()
        assert blob.startswith(b"QOESIGN-KEYSTORE/v1\n")
        # the JSON payload keys must not appear unencrypted
        assert b"suite_id" not in blob and b"secret" not in blob

    def test_path_hostile_user_id_rejected(self, tmp_path):
        with pytest.raises(KeystoreError):
            Keystore(tmp_path).path_for("../../etc/passwd")


class TestConfig:
    def test_defaults(self):
        config = ServiceConfig()
        assert config.mode is ServiceMode.IN_PROCESS_SIM
        assert config.t <= config.n

    def test_validation(self):
        with pytest.raises(ConfigError):
            ServiceConfig(n=3, t=4)
        with pytest.raises(ConfigError):
            ServiceConfig(users=())
        with pytest.raises(ConfigError):
            ServiceConfig(users=("a", "a"))
        with pytest.raises(ConfigError):
            ServiceConfig(mode=ServiceMode.MULTI_PROCESS, qtsp_peers=("http://one",))
        with pytest.raises(ConfigError):
            ServiceConfig(seed=-1)
        with pytest.raises(ConfigError):
            ServiceConfig(listen_port=0)

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(ConfigError):
            config_from_dict({"n": 3, "t": 2, "color": "red"})
        with pytest.raises(ConfigError):
            config_from_dict({"mode": "clustered"})
        with pytest.raises(ConfigError):
            config_from_dict([1, 2, 3])

    def test_round_trips_through_dict(self):
        config = ServiceConfig(n=4, t=3, users=("u1", "u2"))
        assert config_from_dict(config.to_dict()) == config

    def test_load_order_path_env_default(self, tmp_path, monkeypatch):
        monkeypatch.delenv("QOESIGN_CONFIG", raising=False)
        assert load_config() == ServiceConfig()

        env_file = tmp_path / "env.json"
        env_file.write_text(json.dumps({"n": 4, "t": 2}))
        monkeypatch.setenv("QOESIGN_CONFIG", str(env_file))
        assert load_config().n == 4

        arg_file = tmp_path / "arg.json"
        arg_file.write_text(json.dumps({"n": 5, "t": 2}))
        assert load_config(str(arg_file)).n == 5  # explicit path beats env

    def test_load_errors(self, tmp_path, monkeypatch):
        monkeypatch.delenv("QOESIGN_CONFIG", raising=False)
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(bad))

    def test_data_dir_must_be_creatable(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("a file, not a directory")
        with pytest.raises(ConfigError):
            ensure_data_dir(ServiceConfig(data_dir=str(blocker / "nested")))

    def test_state_rejects_unusable_suites(self, tmp_path):
        with pytest.raises(ConfigError):
            ServiceState(ServiceConfig(suite_id="missing-v1",
                                       data_dir=str(tmp_path / "a")))
        with pytest.raises(ConfigError):
            ServiceState(ServiceConfig(suite_id="lamport-ots-v1",
                                       data_dir=str(tmp_path / "b")))
