"""Field arithmetic, Shamir sharing, and Lagrange interpolation."""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qoesign.errors import ParameterError, ReconstructionError
from qoesign.groups import (
    FieldElement,
    Share,
    lagrange_coefficient,
    poly_eval,
    shamir_reconstruct,
    shamir_split,
)

Q = 31


def fe(v: int, q: int = Q) -> FieldElement:
    return FieldElement(v, q)


class TestFieldElement:
    def test_reduction_on_construction(self):
        assert fe(35).value == 4
        assert fe(-1).value == 30

    def test_arithmetic(self):
        assert fe(20) + fe(15) == fe(4)
        assert fe(3) - fe(7) == fe(27)
        assert fe(6) * fe(6) == fe(5)
        assert -fe(1) == fe(30)

    def test_inverse(self):
        for v in range(1, Q):
            assert (fe(v) * fe(v).inverse()).value == 1
        with pytest.raises(ParameterError):
            fe(0).inverse()

    def test_modulus_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            fe(1, 31) + fe(1, 11)

    @given(st.integers(), st.integers())
    def test_add_matches_int_math(self, a, b):
        assert (fe(a) + fe(b)).value == (a + b) % Q

    def test_poly_eval_horner(self):
        # f(x) = 5 + 3x + 2x^2 at x=4: 5 + 12 + 32 = 49 = 18 mod 31
        assert poly_eval([fe(5), fe(3), fe(2)], 4) == fe(18)
        with pytest.raises(ParameterError):
            poly_eval([], 1)


class TestShamirExamples:
    def test_degree_zero_split(self):
        shares = shamir_split(fe(5), 1, 3, coefficients=[])
        assert [s.value.value for s in shares] == [5, 5, 5]

    def test_injected_polynomial_fixture(self):
        # f(x) = 5 + 3x over F31
        shares = shamir_split(fe(5), 2, 3, coefficients=[fe(3)])
        assert [(s.index, s.value.value) for s in shares] == [(1, 8), (2, 11), (3, 14)]

    def test_threshold_exceeds_parties(self):
        with pytest.raises(ParameterError):
            shamir_split(fe(5), 4, 3)

    def test_n_at_least_field_size(self):
        with pytest.raises(ParameterError):
            shamir_split(fe(5), 2, 31)

    def test_reconstruct_two_of_three(self):
        shares = [Share(1, fe(8)), Share(3, fe(14))]
        assert shamir_reconstruct(shares, 2) == fe(5)

    def test_reconstruct_every_pair(self):
        shares = [Share(1, fe(8)), Share(2, fe(11)), Share(3, fe(14))]
        for pair in itertools.combinations(shares, 2):
            assert shamir_reconstruct(list(pair), 2) == fe(5)

    def test_duplicate_index_rejected(self):
        with pytest.raises(ReconstructionError):
            shamir_reconstruct([Share(1, fe(8)), Share(1, fe(8))], 2)

    def test_too_few_shares_rejected(self):
        with pytest.raises(ReconstructionError):
            shamir_reconstruct([Share(1, fe(8))], 2)

    def test_share_index_zero_rejected(self):
        with pytest.raises(ParameterError):
            Share(0, fe(8))


class TestLagrange:
    def test_pair_coefficients(self):
        assert lagrange_coefficient({1, 2}, 1, Q).value == 2
        assert lagrange_coefficient({1, 2}, 2, Q).value == 30

    def test_singleton_is_one(self):
        assert lagrange_coefficient({5}, 5, Q).value == 1
        assert lagrange_coefficient({5}, 5, 11).value == 1

    def test_nonmember_rejected(self):
        with pytest.raises(ParameterError):
            lagrange_coefficient({1, 2}, 3, Q)

    def test_weights_sum_shares_to_secret(self):
        rng = random.Random(1)
        for _ in range(25):
            secret = fe(rng.randrange(Q))
            shares = shamir_split(secret, 3, 5, rng)
            for subset in itertools.combinations(shares, 3):
                indices = {s.index for s in subset}
                acc = fe(0)
                for s in subset:
                    acc = acc + lagrange_coefficient(indices, s.index, Q) * s.value
                assert acc == secret


class TestExhaustiveRoundTrip:
    def test_all_secrets_all_t_n_up_to_five(self):
        # Every secret in F31, every 1 <= t <= n <= 5, fixed seed per case.
        for secret in range(Q):
            for n in range(1, 6):
                for t in range(1, n + 1):
                    rng = random.Random(secret * 100 + n * 10 + t)
                    shares = shamir_split(fe(secret), t, n, rng)
                    assert shamir_reconstruct(shares, t) == fe(secret)
                    for subset in itertools.combinations(shares, t):
                        assert shamir_reconstruct(list(subset), t) == fe(secret)

    def test_perfect_hiding_brute_force(self):
        # With t=2, one share is consistent with every candidate secret:
        # for each claimed secret there exists a polynomial through both.
        rng = random.Random(7)
        shares = shamir_split(fe(12), 2, 3, rng)
        observed = shares[0]
        for candidate in range(Q):
            # slope satisfying observed = candidate + a*index exists iff
            # index is invertible, always true here
            a = (observed.value - fe(candidate)) * fe(observed.index).inverse()
            check = poly_eval([fe(candidate), a], observed.index)
            assert check == observed.value

    @given(
        st.integers(min_value=0, max_value=Q - 1),
        st.integers(min_value=1, max_value=5),
        st.integers(min_value=0, max_value=4),
        st.randoms(use_true_random=False),
    )
    def test_roundtrip_property(self, secret, t, extra, pyrandom):
        n = min(t + extra, 5)
        t = min(t, n)
        shares = shamir_split(fe(secret), t, n, pyrandom)
        assert shamir_reconstruct(shares, t).value == secret
