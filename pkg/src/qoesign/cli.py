"""Command line front end: demos, scenario runs, rendering, benchmarks.

Exit codes: 0 on success, 1 when a protocol or verification check
fails, 2 for usage and configuration problems. Every subcommand accepts
`--output json` for machine-readable results; errors then go to stdout
as a JSON object instead of a one-line stderr message.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import random
import secrets
import statistics
import sys
import time
from pathlib import Path

from qoesign.errors import (
    ConfigError,
    DecodeError,
    InvalidKeyError,
    QoesignError,
    SuiteNotFoundError,
)
from qoesign.ledger.audit import user_audit
from qoesign.ledger.chain import Ledger
from qoesign.protocol.keys import AccessStructure, Holder, dkg
from qoesign.protocol.nodes import UserNode
from qoesign.protocol.runner import run_signing
from qoesign.simnet import bundled_scenario_names, load_bundled_scenario, load_scenario, run_scenario
from qoesign.suites.registry import default_registry
from qoesign.suites.lamport import lamport_verify
from qoesign.suites.schnorr import DEFAULT_SESSION_CONTEXT, decode_signature, schnorr_verify
from qoesign.threatmodel.dataset import load_bundled_dataset, load_dataset
from qoesign.threatmodel.render import render_matrix
from qoesign.threatmodel.scoring import score_model
from qoesign.threatmodel.types import RuleMode

USAGE_ERROR = 2
CHECK_FAILED = 1


def fingerprint(message_hash: bytes) -> str:
    """Eight hex words covering the whole hash, for human comparison."""
    hexed = message_hash.hex()
    return " ".join(hexed[i : i + 8] for i in range(0, len(hexed), 8))


def _emit(args, payload: dict, text: str) -> None:
    if args.output == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _fail(args, reason: str, code: int) -> int:
    if getattr(args, "output", "text") == "json":
        print(json.dumps({"ok": False, "error": reason}))
    else:
        print(f"error: {reason}", file=sys.stderr)
    return code


def _parse_hex(args, value: str, name: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise _Usage(f"{name} is not valid hex") from None


class _Usage(Exception):
    pass


# -- demo -----------------------------------------------------------------


def cmd_demo(args) -> int:
    if not 1 <= args.t <= args.n:
        raise _Usage(f"threshold {args.t} outside 1..{args.n}")
    registry = default_registry()
    suite = registry.resolve(args.suite)
    if suite.group is None:
        raise _Usage(f"suite {args.suite!r} cannot run threshold sessions")
    rng = random.Random(args.seed) if args.seed is not None else random.SystemRandom()
    message = args.message.encode()
    message_hash = hashlib.sha256(message).digest()

    policy = "approve"
    if args.interactive:
        # prompt on stderr so json output stays parseable; EOF means deny
        print(f"message: {args.message!r}", file=sys.stderr)
        print(f"fingerprint: {fingerprint(message_hash)}", file=sys.stderr)
        sys.stderr.write("approve signing this message? [y/N] ")
        sys.stderr.flush()
        answer = sys.stdin.readline().strip().lower()
        policy = "approve" if answer.startswith("y") else "deny"

    access = AccessStructure(t=args.t, n=args.n)
    key, shares = dkg(access, suite, rng)
    ledger = Ledger()
    user = UserNode(user_id="demo-user", share=shares[Holder.user()], rng=rng, policy=policy)
    session, signature = run_signing(
        key, suite, shares, message_hash, rng, ledger=ledger, user_node=user
    )
    flags = user_audit(ledger, user.approval_log)

    group = suite.group
    payload = {
        "suite_id": suite.suite_id,
        "n": args.n,
        "t": args.t,
        "state": session.state.value,
        "public_key": group.encode(key.group_public_key).hex(),
        "message": args.message,
        "message_hash": message_hash.hex(),
        "session_id": session.session_id.hex(),
        "signature": signature.encode().hex() if signature else None,
        "ledger_tip": ledger.tip_hash.hex(),
        "audit_flags": [flag.reason for flag in flags],
    }
    lines = [
        f"suite       {suite.suite_id}",
        f"threshold   {args.t} of {args.n} QTSPs plus the user",
        f"state       {session.state.value}",
        f"public key  {payload['public_key']}",
        f"msg hash    {payload['message_hash']}",
        f"session     {payload['session_id']}",
    ]
    if signature is not None:
        lines.append(f"signature   {payload['signature']}")
        lines.append(
            "check it:   qoesign verify"
            f" --suite {suite.suite_id}"
            f" --pk {payload['public_key']}"
            f" --msg-hash {payload['message_hash']}"
            f" --sig {payload['signature']}"
            f" --context {payload['session_id']}"
        )
    else:
        lines.append(f"aborted     {session.abort_reason}")
    lines.append(f"audit       {len(flags)} flag(s)")
    _emit(args, payload, "\n".join(lines))

    if signature is None:
        return 0  # a denial is the mechanism working, not a failure
    valid = schnorr_verify(
        suite, key.group_public_key, message_hash, signature, session.session_id
    )
    if not valid or flags:
        return _fail(args, "demo signature failed its own verification", CHECK_FAILED)
    return 0


# -- scenario -------------------------------------------------------------


def cmd_scenario_run(args) -> int:
    if Path(args.scenario).exists():
        config = load_scenario(args.scenario)
    else:
        config = load_bundled_scenario(args.scenario)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    transcript = run_scenario(config)
    expected = config.expected_outcome.as_string()
    match = transcript.outcome == expected and not transcript.assertion_failures
    payload = {
        "scenario": config.name,
        "seed": config.seed,
        "outcome": transcript.outcome,
        "expected": expected,
        "match": match,
        "digest": transcript.digest(),
        "counters": transcript.counters,
        "assertion_failures": transcript.assertion_failures,
    }
    text = "\n".join(
        [
            f"scenario  {config.name}",
            f"seed      {config.seed}",
            f"outcome   {transcript.outcome}",
            f"expected  {expected}",
            f"digest    {transcript.digest()}",
            f"result    {'match' if match else 'MISMATCH'}",
        ]
    )
    _emit(args, payload, text)
    return 0 if match else CHECK_FAILED


def cmd_scenario_list(args) -> int:
    names = bundled_scenario_names()
    _emit(args, {"scenarios": names}, "\n".join(names))
    return 0


# -- threat matrix ----------------------------------------------------------


def cmd_threat_render(args) -> int:
    if args.input is None:
        model, entries = load_bundled_dataset()
    else:
        model, entries = load_dataset(args.input)
    scored = score_model(model, entries, RuleMode(args.rule))
    rendered = render_matrix(scored, fmt=args.format)
    if args.output == "json":
        print(json.dumps({"rule": args.rule, "format": args.format, "rendered": rendered}))
    else:
        # byte-identical output matters here: no added trailing newline
        sys.stdout.write(rendered)
    return 0


# -- bench ------------------------------------------------------------------


def _parse_n_range(raw: str) -> tuple[int, int]:
    try:
        if ".." in raw:
            lo_s, hi_s = raw.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
        else:
            lo = hi = int(raw)
    except ValueError:
        raise _Usage(f"--n-range wants N or LO..HI, got {raw!r}") from None
    if not 1 <= lo <= hi:
        raise _Usage(f"empty or invalid range {raw!r}")
    return lo, hi


def cmd_bench(args) -> int:
    lo, hi = _parse_n_range(args.n_range)
    registry = default_registry()
    suite = registry.resolve(args.suite)
    if suite.group is None:
        raise _Usage(f"suite {args.suite!r} cannot run threshold sessions")
    rng = random.Random(args.seed)
    rows = []
    for n in range(lo, hi + 1):
        t = (n // 2) + 1 if args.t == "majority" else int(args.t)
        if not 1 <= t <= n:
            raise _Usage(f"threshold {t} outside 1..{n}")
        key, shares = dkg(AccessStructure(t=t, n=n), suite, rng)
        message_hash = hashlib.sha256(f"bench n={n}".encode()).digest()
        timings = []
        for _ in range(args.iterations):
            start = time.perf_counter()
            session, signature = run_signing(key, suite, shares, message_hash, rng)
            timings.append(time.perf_counter() - start)
            if signature is None:
                raise QoesignError(f"bench session aborted: {session.abort_reason}")
        rows.append(
            {
                "n": n,
                "t": t,
                "iterations": args.iterations,
                "median_ms": round(statistics.median(timings) * 1000, 3),
            }
        )
    header = f"{'n':>3} {'t':>3} {'iters':>6} {'median ms':>10}"
    lines = [header] + [
        f"{r['n']:>3} {r['t']:>3} {r['iterations']:>6} {r['median_ms']:>10.3f}"
        for r in rows
    ]
    _emit(args, {"suite_id": args.suite, "rows": rows}, "\n".join(lines))
    return 0


# -- verify -----------------------------------------------------------------


def cmd_verify(args) -> int:
    registry = default_registry()
    suite = registry.resolve(args.suite)
    pk_bytes = _parse_hex(args, args.pk, "--pk")
    message_hash = _parse_hex(args, args.msg_hash, "--msg-hash")
    sig_bytes = _parse_hex(args, args.sig, "--sig")
    context = (
        _parse_hex(args, args.context, "--context")
        if args.context is not None
        else DEFAULT_SESSION_CONTEXT
    )
    try:
        signature = decode_signature(sig_bytes)
        if suite.group is None:
            valid = lamport_verify(pk_bytes, message_hash, signature)
        else:
            public_key = suite.group.decode(pk_bytes)
            valid = schnorr_verify(suite, public_key, message_hash, signature, context)
    except (DecodeError, InvalidKeyError) as exc:
        _emit(args, {"valid": False, "reason": str(exc)}, f"invalid: {exc}")
        return CHECK_FAILED
    _emit(args, {"valid": valid}, "valid" if valid else "invalid")
    return 0 if valid else CHECK_FAILED


# -- serve --------------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from qoesign.service.app import build_app
    from qoesign.service.config import load_config
    from qoesign.service.qtsp_server import build_qtsp_app

    config = load_config(args.config)
    if args.qtsp is not None:
        app = build_qtsp_app(config, args.qtsp)
        port = args.port if args.port is not None else config.listen_port + args.qtsp
    else:
        app = build_app(config)
        port = args.port if args.port is not None else config.listen_port
    host = args.host if args.host is not None else config.listen_host
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--output", choices=("text", "json"), default="text",
        help="result format (default: text)",
    )

    parser = argparse.ArgumentParser(
        prog="qoesign",
        description="collaborative qualified-signature toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", parents=[common], help="run one local signing session")
    demo.add_argument("--n", type=int, default=5, help="number of QTSP nodes")
    demo.add_argument("--t", type=int, default=3, help="signing threshold")
    demo.add_argument("--suite", default="schnorr-toy-v1")
    demo.add_argument("--interactive", action="store_true",
                      help="ask for the approve/deny decision at the terminal")
    demo.add_argument("--message", default="qoesign demo document")
    demo.add_argument("--seed", type=int, default=None,
                      help="seed the run for reproducibility")
    demo.set_defaults(func=cmd_demo)

    scenario = sub.add_parser("scenario", help="adversarial network scenarios")
    scen_sub = scenario.add_subparsers(dest="scenario_command", required=True)
    run_p = scen_sub.add_parser("run", parents=[common], help="run one scenario")
    run_p.add_argument("scenario", help="bundled name or path to a scenario file")
    run_p.add_argument("--seed", type=int, default=None, help="override the seed")
    run_p.set_defaults(func=cmd_scenario_run)
    list_p = scen_sub.add_parser("list", parents=[common], help="list bundled scenarios")
    list_p.set_defaults(func=cmd_scenario_list)

    threat = sub.add_parser("threat", help="threat-model tooling")
    threat_sub = threat.add_subparsers(dest="threat_command", required=True)
    render_p = threat_sub.add_parser("render", parents=[common], help="score and render a matrix")
    render_p.add_argument("--input", default=None, help="dataset file (default: bundled)")
    render_p.add_argument("--rule", choices=("table", "stated"), default="table")
    render_p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    render_p.set_defaults(func=cmd_threat_render)

    bench = sub.add_parser("bench", parents=[common], help="session latency benchmark")
    bench.add_argument("--n-range", default="3..5", help="N or LO..HI (default 3..5)")
    bench.add_argument("--t", default="majority", help="threshold or 'majority'")
    bench.add_argument("--iterations", type=int, default=5)
    bench.add_argument("--suite", default="schnorr-prod-v1")
    bench.add_argument("--seed", type=int, default=2024)
    bench.set_defaults(func=cmd_bench)

    verify = sub.add_parser("verify", parents=[common], help="offline signature check")
    verify.add_argument("--pk", required=True, help="public key, hex")
    verify.add_argument("--suite", required=True)
    verify.add_argument("--msg-hash", required=True, help="32-byte message hash, hex")
    verify.add_argument("--sig", required=True, help="encoded signature, hex")
    verify.add_argument("--context", default=None,
                        help="16-byte session context, hex (default: all zero)")
    verify.set_defaults(func=cmd_verify)

    serve = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    serve.add_argument("--config", default=None, help="config file (default: $QOESIGN_CONFIG)")
    serve.add_argument("--qtsp", type=int, default=None,
                       help="serve this QTSP index instead of the coordinator")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        return _fail(args, str(exc), USAGE_ERROR)
    except (ConfigError, SuiteNotFoundError) as exc:
        return _fail(args, str(exc), USAGE_ERROR)
    except FileNotFoundError as exc:
        return _fail(args, str(exc), USAGE_ERROR)
    except QoesignError as exc:
        return _fail(args, str(exc), CHECK_FAILED)
    except KeyboardInterrupt:
        return _fail(args, "interrupted", CHECK_FAILED)


if __name__ == "__main__":
    sys.exit(main())
