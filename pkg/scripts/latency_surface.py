#!/usr/bin/env python3
"""Session latency over the full (n, t) grid, both groups.

The CLI bench sticks to majority thresholds; this script measures every
admissible threshold for n in a range and emits CSV, which is handy for
plotting how the extra partial verifications scale.

Usage:
    python3 scripts/latency_surface.py [--n-max 5] [--iterations 5] [--suite ID]
"""

from __future__ import annotations

import argparse
import hashlib
import random
import statistics
import sys
import time

from qoesign.protocol.keys import AccessStructure, dkg
from qoesign.protocol.runner import run_signing
from qoesign.suites.registry import default_registry


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-max", type=int, default=5)
    parser.add_argument("--iterations", type=int, default=5)
    parser.add_argument("--suite", default="schnorr-prod-v1")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    suite = default_registry().resolve(args.suite)
    if suite.group is None:
        print(f"error: {args.suite} cannot run threshold sessions", file=sys.stderr)
        return 2
    rng = random.Random(args.seed)

    print("suite,n,t,iterations,median_ms,p90_ms")
    for n in range(2, args.n_max + 1):
        for t in range(1, n + 1):
            key, shares = dkg(AccessStructure(t=t, n=n), suite, rng)
            message_hash = hashlib.sha256(f"surface {n}/{t}".encode()).digest()
            timings = []
            for _ in range(args.iterations):
                start = time.perf_counter()
                _, signature = run_signing(key, suite, shares, message_hash, rng)
                timings.append((time.perf_counter() - start) * 1000)
                assert signature is not None
            timings.sort()
            p90 = timings[min(len(timings) - 1, int(0.9 * len(timings)))]
            print(
                f"{args.suite},{n},{t},{args.iterations},"
                f"{statistics.median(timings):.3f},{p90:.3f}"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
