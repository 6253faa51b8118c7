"""CLI: exit codes, round-trips, golden output, bench table."""

from __future__ import annotations

import hashlib
import io
import json
import random
import subprocess
import sys
from pathlib import Path

import pytest

from qoesign.cli import fingerprint, main
from qoesign.simnet import load_bundled_scenario, run_scenario
from qoesign.suites.lamport import generate_lamport_keypair, lamport_sign
from qoesign.threatmodel.dataset import dump_dataset, load_bundled_dataset

GOLDEN = Path(__file__).parent / "golden" / "threat_matrix_table.csv"


def run_cli(capsys, argv: list[str]) -> tuple[int, str, str]:
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, argv: list[str]) -> tuple[int, dict]:
    code, out, _ = run_cli(capsys, argv + ["--output", "json"])
    return code, json.loads(out)


class TestDemo:
    def test_demo_then_verify_roundtrip(self, capsys):
        code, demo = run_json(capsys, ["demo", "--n", "3", "--t", "2", "--seed", "42"])
        assert code == 0
        assert demo["state"] == "completed"
        assert demo["audit_flags"] == []
        code, verdict = run_json(
            capsys,
            [
                "verify",
                "--suite", demo["suite_id"],
                "--pk", demo["public_key"],
                "--msg-hash", demo["message_hash"],
                "--sig", demo["signature"],
                "--context", demo["session_id"],
            ],
        )
        assert code == 0 and verdict == {"valid": True}

    def test_tampered_signature_fails_verify(self, capsys):
        _, demo = run_json(capsys, ["demo", "--n", "3", "--t", "2", "--seed", "42"])
        last = demo["signature"][-1]
        tampered = demo["signature"][:-1] + ("0" if last != "0" else "1")
        code, verdict = run_json(
            capsys,
            [
                "verify",
                "--suite", demo["suite_id"],
                "--pk", demo["public_key"],
                "--msg-hash", demo["message_hash"],
                "--sig", tampered,
                "--context", demo["session_id"],
            ],
        )
        assert code == 1 and verdict["valid"] is False

    def test_seeded_demo_is_reproducible(self, capsys):
        _, first = run_json(capsys, ["demo", "--n", "4", "--t", "3", "--seed", "5"])
        _, second = run_json(capsys, ["demo", "--n", "4", "--t", "3", "--seed", "5"])
        assert first == second

    def test_interactive_approval(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO("y\n"))
        code, demo = run_json(
            capsys, ["demo", "--n", "3", "--t", "2", "--seed", "1", "--interactive"]
        )
        assert code == 0 and demo["state"] == "completed"

    def test_interactive_denial(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO("n\n"))
        code, demo = run_json(
            capsys, ["demo", "--n", "3", "--t", "2", "--seed", "1", "--interactive"]
        )
        assert code == 0
        assert demo["state"] == "aborted" and demo["signature"] is None

    def test_interactive_prompt_shows_fingerprint(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO("y\n"))
        code, _, err = run_cli(
            capsys, ["demo", "--n", "3", "--t", "2", "--seed", "1", "--interactive"]
        )
        assert code == 0
        message_hash = hashlib.sha256(b"qoesign demo document").digest()
        assert fingerprint(message_hash) in err
        words = fingerprint(message_hash).split()
        assert len(words) == 8 and all(len(w) == 8 for w in words)

    def test_bad_threshold_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, ["demo", "--n", "3", "--t", "4"])
        assert code == 2 and "threshold" in err

    def test_unknown_suite_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, ["demo", "--suite", "nope-v9"])
        assert code == 2

    def test_non_threshold_suite_rejected(self, capsys):
        code, _, _ = run_cli(capsys, ["demo", "--suite", "lamport-ots-v1"])
        assert code == 2


class TestScenario:
    def test_list_names_the_corpus(self, capsys):
        code, body = run_json(capsys, ["scenario", "list"])
        assert code == 0
        assert "happy-path-3-of-5" in body["scenarios"]
        assert len(body["scenarios"]) >= 8

    def test_run_bundled_matches_and_prints_digest(self, capsys):
        code, body = run_json(capsys, ["scenario", "run", "tamper-partial"])
        assert code == 0 and body["match"] is True
        expected = run_scenario(load_bundled_scenario("tamper-partial")).digest()
        assert body["digest"] == expected

    def test_run_from_file(self, capsys, tmp_path):
        doc = {
            "name": "from-file",
            "n": 5, "t": 3, "suite_id": "schnorr-toy-v1", "seed": 1001,
            "expected_outcome": {"kind": "completes"},
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(doc))
        code, body = run_json(capsys, ["scenario", "run", str(path)])
        assert code == 0 and body["outcome"] == "completes"

    def test_outcome_mismatch_exits_1(self, capsys, tmp_path):
        doc = {
            "name": "wrong-expectation",
            "n": 5, "t": 3, "suite_id": "schnorr-toy-v1", "seed": 1001,
            "expected_outcome": {"kind": "aborts_with", "reason": "user-denied"},
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(doc))
        code, body = run_json(capsys, ["scenario", "run", str(path)])
        assert code == 1
        assert body["match"] is False and body["outcome"] == "completes"

    def test_unknown_scenario_exits_2(self, capsys):
        code, _, err = run_cli(capsys, ["scenario", "run", "no-such-thing"])
        assert code == 2 and err.startswith("error:")

    def test_seed_override_is_reported(self, capsys):
        code, body = run_json(
            capsys, ["scenario", "run", "happy-path-3-of-5", "--seed", "999"]
        )
        assert code == 0 and body["seed"] == 999

    def test_json_error_shape(self, capsys):
        code, out, _ = run_cli(
            capsys, ["scenario", "run", "no-such-thing", "--output", "json"]
        )
        assert code == 2
        assert json.loads(out)["ok"] is False


class TestThreatRender:
    def test_default_render_equals_golden(self, capsys):
        code, out, _ = run_cli(capsys, ["threat", "render"])
        assert code == 0
        assert out == GOLDEN.read_text(encoding="utf-8")

    def test_console_script_is_byte_identical(self):
        result = subprocess.run(
            ["qoesign", "threat", "render", "--rule", "table", "--format", "csv"],
            capture_output=True, timeout=60,
        )
        assert result.returncode == 0
        assert result.stdout == GOLDEN.read_bytes()

    def test_markdown_format(self, capsys):
        code, out, _ = run_cli(capsys, ["threat", "render", "--format", "markdown"])
        assert code == 0
        assert out.startswith("|") and "| --- |" in out

    def test_stated_rule_differs_from_table(self, capsys):
        _, table, _ = run_cli(capsys, ["threat", "render", "--rule", "table"])
        _, stated, _ = run_cli(capsys, ["threat", "render", "--rule", "stated"])
        assert table != stated

    def test_explicit_input_file(self, capsys, tmp_path):
        model, entries = load_bundled_dataset()
        path = tmp_path / "dataset.json"
        path.write_text(dump_dataset(model, entries))
        code, out, _ = run_cli(capsys, ["threat", "render", "--input", str(path)])
        assert code == 0
        assert out == GOLDEN.read_text(encoding="utf-8")

    def test_missing_input_file_exits_2(self, capsys):
        code, _, _ = run_cli(capsys, ["threat", "render", "--input", "/no/such/file"])
        assert code == 2

    def test_json_wraps_rendered_text(self, capsys):
        code, body = run_json(capsys, ["threat", "render"])
        assert code == 0
        assert body["rendered"] == GOLDEN.read_text(encoding="utf-8")


class TestBench:
    def test_three_rows_loosely_monotone(self, capsys):
        code, body = run_json(
            capsys, ["bench", "--n-range", "3..5", "--iterations", "3"]
        )
        assert code == 0
        rows = body["rows"]
        assert [r["n"] for r in rows] == [3, 4, 5]
        assert [r["t"] for r in rows] == [2, 3, 3]
        for row in rows:
            assert row["median_ms"] > 0
        # loose monotonicity: later rows may dip at most 10 percent
        for a, b in zip(rows, rows[1:]):
            assert b["median_ms"] >= a["median_ms"] * 0.9

    def test_fixed_threshold(self, capsys):
        code, body = run_json(
            capsys,
            ["bench", "--n-range", "3..4", "--t", "2", "--iterations", "1",
             "--suite", "schnorr-toy-v1"],
        )
        assert code == 0
        assert [r["t"] for r in body["rows"]] == [2, 2]

    def test_text_table_has_header_and_rows(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["bench", "--n-range", "3..3", "--iterations", "1",
             "--suite", "schnorr-toy-v1"],
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert "median ms" in lines[0] and len(lines) == 2

    @pytest.mark.parametrize("bad", ["5..3", "0..2", "abc", "1..x"])
    def test_bad_range_exits_2(self, capsys, bad):
        code, _, _ = run_cli(
            capsys, ["bench", "--n-range", bad, "--suite", "schnorr-toy-v1"]
        )
        assert code == 2

    def test_bad_threshold_exits_2(self, capsys):
        code, _, _ = run_cli(
            capsys,
            ["bench", "--n-range", "3..3", "--t", "9", "--suite", "schnorr-toy-v1"],
        )
        assert code == 2


class TestVerify:
    def test_lamport_signature_verifies(self, capsys):
        keypair = generate_lamport_keypair(random.Random(1))
        message_hash = hashlib.sha256(b"post-quantum hello").digest()
        signature = lamport_sign(keypair, message_hash)
        argv = [
            "verify", "--suite", "lamport-ots-v1",
            "--pk", keypair.public_key.hex(),
            "--msg-hash", message_hash.hex(),
            "--sig", signature.encode().hex(),
        ]
        code, body = run_json(capsys, argv)
        assert code == 0 and body["valid"] is True

        wrong = hashlib.sha256(b"different message").digest()
        argv[6] = wrong.hex()
        code, body = run_json(capsys, argv)
        assert code == 1 and body["valid"] is False

    def test_non_hex_arguments_exit_2(self, capsys):
        code, _, _ = run_cli(
            capsys,
            ["verify", "--suite", "schnorr-toy-v1", "--pk", "xx",
             "--msg-hash", "00" * 32, "--sig", "00"],
        )
        assert code == 2

    def test_wrong_length_key_material_exits_1(self, capsys):
        # hex is fine, the group rejects it: verification failure, not usage
        code, _, _ = run_cli(
            capsys,
            ["verify", "--suite", "schnorr-toy-v1", "--pk", "00",
             "--msg-hash", "00" * 32, "--sig", "0e" + "00" * 30],
        )
        assert code == 1

    def test_unknown_suite_exits_2(self, capsys):
        code, _, _ = run_cli(
            capsys,
            ["verify", "--suite", "missing-v1", "--pk", "00",
             "--msg-hash", "00" * 32, "--sig", "00"],
        )
        assert code == 2
