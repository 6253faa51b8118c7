#!/usr/bin/env python3
"""Generate the fixed production group parameters.

Searches for a 3072-bit prime p with a 256-bit prime q dividing p - 1,
plus a generator of the order-q subgroup. The search is deterministic in
the seed string, so the published constants can be re-derived. Output is
meant to be pasted into qoesign/groups/group.py.
"""

import hashlib

import gmpy2

SEED = b"qoesign-prod-group-v1"
Q_BITS = 256
P_BITS = 3072


def derived_int(label: bytes, counter: int, bits: int) -> int:
    """Expand SEED || label || counter into a `bits`-wide odd integer."""
    out = b""
    i = 0
    while len(out) * 8 < bits:
        out += hashlib.sha256(SEED + label + counter.to_bytes(4, "big") + i.to_bytes(4, "big")).digest()
        i += 1
    x = int.from_bytes(out[: bits // 8], "big")
    x |= (1 << (bits - 1)) | 1  # force top and bottom bit
    return x


def find_q() -> int:
    counter = 0
    while True:
        q = derived_int(b"/q", counter, Q_BITS)
        if gmpy2.is_prime(q, 40):
            return q
        counter += 1


def find_p(q: int) -> int:
    counter = 0
    while True:
        # candidate cofactor k, even, sized so p has exactly P_BITS bits
        k = derived_int(b"/k", counter, P_BITS - Q_BITS) & ~1
        p = q * k + 1
        if p.bit_length() == P_BITS and gmpy2.is_prime(p, 40):
            return p
        counter += 1


def find_g(p: int, q: int) -> int:
    h = 2
    while True:
        g = pow(h, (p - 1) // q, p)
        if g != 1:
            assert pow(g, q, p) == 1
            return g
        h += 1


def main() -> None:
    q = find_q()
    print(f"# q found ({q.bit_length()} bits)")
    p = find_p(q)
    print(f"# p found ({p.bit_length()} bits)")
    g = find_g(p, q)
    print(f"PROD_P = 0x{p:x}")
    print(f"PROD_Q = 0x{q:x}")
    print(f"PROD_G = 0x{g:x}")


if __name__ == "__main__":
    main()
