"""Feldman commitments: public exponentiations of polynomial coefficients.

A dealer publishes A_k = g^(a_k) for every coefficient of its sharing
polynomial; share holder i accepts a dealt value y iff
g^y == prod_k A_k^(i^k). Binding is computational (discrete log), hiding
is only of the coefficients' values, which is all threshold DKG needs.
"""

from __future__ import annotations

from qoesign.errors import ParameterError
from qoesign.groups.field import FieldElement
from qoesign.groups.group import GroupDescription


def feldman_commit(
    coefficients: list[FieldElement], group: GroupDescription
) -> list[int]:
    if not coefficients:
        raise ParameterError("empty coefficient list")
    for c in coefficients:
        if c.modulus != group.order:
            raise ParameterError("coefficient not in the group's scalar field")
    return [group.exp(group.generator, c.value) for c in coefficients]


def feldman_verify_share(
    index: int,
    share_value: FieldElement,
    commitments: list[int],
    group: GroupDescription,
) -> bool:
    if share_value.modulus != group.order:
        raise ParameterError("share not in the group's scalar field")
    expected = group.identity
    power = 1
    for commitment in commitments:
        expected = group.mul(expected, group.exp(commitment, power))
        power = (power * index) % group.order
    return group.exp(group.generator, share_value.value) == expected
