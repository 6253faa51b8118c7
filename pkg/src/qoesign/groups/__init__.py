from qoesign.groups.feldman import feldman_commit, feldman_verify_share
from qoesign.groups.field import FieldElement, poly_eval
from qoesign.groups.group import GroupDescription, production_group, toy_group
from qoesign.groups.shamir import (
    Share,
    lagrange_coefficient,
    shamir_reconstruct,
    shamir_split,
)

__all__ = [
    "FieldElement",
    "GroupDescription",
    "Share",
    "feldman_commit",
    "feldman_verify_share",
    "lagrange_coefficient",
    "poly_eval",
    "production_group",
    "shamir_reconstruct",
    "shamir_split",
    "toy_group",
]
