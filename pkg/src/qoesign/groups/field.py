"""Prime-field scalars.

All protocol scalars (secrets, shares, nonces, challenges) live in the
scalar field of some group order q. Values are plain Python integers kept
reduced mod q; instances are immutable and hashable.
"""

from __future__ import annotations

from dataclasses import dataclass

from qoesign.errors import ParameterError


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 2:
            raise ParameterError(f"modulus must be >= 2, got {self.modulus}")
        object.__setattr__(self, "value", self.value % self.modulus)

    def _check(self, other: FieldElement) -> None:
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if other.modulus != self.modulus:
            raise ParameterError(
                f"modulus mismatch: {self.modulus} vs {other.modulus}"
            )

    def __add__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return FieldElement(self.value + other.value, self.modulus)

    def __sub__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return FieldElement(self.value - other.value, self.modulus)

    def __mul__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return FieldElement(self.value * other.value, self.modulus)

    def __neg__(self) -> FieldElement:
        return FieldElement(-self.value, self.modulus)

    def inverse(self) -> FieldElement:
        if self.value == 0:
            raise ParameterError("zero has no inverse")
        return FieldElement(pow(self.value, -1, self.modulus), self.modulus)

    def is_zero(self) -> bool:
        return self.value == 0


def poly_eval(coefficients: list[FieldElement], x: int) -> FieldElement:
    """Evaluate sum(c_k * x^k) over the coefficients' field (Horner)."""
    if not coefficients:
        raise ParameterError("empty coefficient list")
    q = coefficients[0].modulus
    acc = 0
    for c in reversed(coefficients):
        if c.modulus != q:
            raise ParameterError("mixed moduli in coefficient list")
        acc = (acc * x + c.value) % q
    return FieldElement(acc, q)
