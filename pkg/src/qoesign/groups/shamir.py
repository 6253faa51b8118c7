"""Shamir secret sharing and Lagrange interpolation at zero.

Shares are evaluations of a degree-(t-1) polynomial whose constant term
is the secret; the secret sits at evaluation point 0 and share indices
start at 1. `coefficients` lets tests inject the non-constant
coefficients for hand-checkable fixtures; production callers pass a
seeded randomness source instead.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from qoesign.errors import ParameterError, ReconstructionError
from qoesign.groups.field import FieldElement, poly_eval


@dataclass(frozen=True)
class Share:
    index: int
    value: FieldElement

    def __post_init__(self):
        if self.index < 1:
            raise ParameterError(f"share index must be >= 1, got {self.index}")


def shamir_split(
    secret: FieldElement,
    t: int,
    n: int,
    rng: random.Random | None = None,
    *,
    coefficients: list[FieldElement] | None = None,
) -> list[Share]:
    """Split `secret` into n shares, any t of which reconstruct it."""
    q = secret.modulus
    if not 1 <= t <= n:
        raise ParameterError(f"need 1 <= t <= n, got t={t}, n={n}")
    if n >= q:
        raise ParameterError(f"n must be below the field size, got n={n}, q={q}")
    if coefficients is None:
        rng = rng or random.SystemRandom()
        coefficients = [
            FieldElement(rng.randrange(q), q) for _ in range(t - 1)
        ]
    if len(coefficients) != t - 1:
        raise ParameterError(
            f"expected {t - 1} non-constant coefficients, got {len(coefficients)}"
        )
    poly = [secret] + list(coefficients)
    return [Share(i, poly_eval(poly, i)) for i in range(1, n + 1)]


def lagrange_coefficient(
    participant_indices: set[int], i: int, modulus: int
) -> FieldElement:
    """Weight turning share i into an additive contribution at point 0."""
    indices = set(participant_indices)
    if i not in indices:
        raise ParameterError(f"index {i} not in participant set {sorted(indices)}")
    if any(j < 1 for j in indices):
        raise ParameterError("participant indices must be nonzero positive")
    num, den = 1, 1
    for j in indices:
        if j == i:
            continue
        num = (num * j) % modulus
        den = (den * (j - i)) % modulus
    return FieldElement(num * pow(den, -1, modulus), modulus)


def shamir_reconstruct(shares: list[Share], t: int) -> FieldElement:
    """Interpolate the secret at 0 from the first t shares (by index)."""
    if len(shares) < t:
        raise ReconstructionError(f"need at least {t} shares, got {len(shares)}")
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise ReconstructionError(f"duplicate share indices: {sorted(indices)}")
    chosen = sorted(shares, key=lambda s: s.index)[:t]
    q = chosen[0].value.modulus
    subset = {s.index for s in chosen}
    acc = FieldElement(0, q)
    for s in chosen:
        acc = acc + lagrange_coefficient(subset, s.index, q) * s.value
    return acc
