"""Distributed key material: generation and proactive refresh.

The signing key is split additively into a user component s_U and a
QTSP component s_Q, with s_Q itself Shamir-shared t-of-n across the
QTSP nodes. Every QTSP contributes a random polynomial during
generation, so no single party (including any dealer) ever sees s_Q,
and the user component is generated on the user side only. The public
record carries enough commitments to recompute every participant's
public share, never any secret.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from qoesign.errors import DkgAbortError, InvalidKeyError, ParameterError
from qoesign.groups.feldman import feldman_commit, feldman_verify_share
from qoesign.groups.field import FieldElement, poly_eval
from qoesign.suites.registry import SignatureSuite


@dataclass(frozen=True, order=True)
class Holder:
    """A share holder: the user, or QTSP number `index` (1-based)."""

    kind: str
    index: int = 0

    USER_KIND = "user"
    QTSP_KIND = "qtsp"

    def __post_init__(self):
        if self.kind not in (self.USER_KIND, self.QTSP_KIND):
            raise ParameterError(f"unknown holder kind {self.kind!r}")
        if self.kind == self.QTSP_KIND and self.index < 1:
            raise ParameterError("qtsp holder needs a 1-based index")
        if self.kind == self.USER_KIND and self.index != 0:
            raise ParameterError("user holder carries no index")

    @classmethod
    def user(cls) -> Holder:
        return cls(kind=cls.USER_KIND)

    @classmethod
    def qtsp(cls, index: int) -> Holder:
        return cls(kind=cls.QTSP_KIND, index=index)

    @property
    def is_user(self) -> bool:
        return self.kind == self.USER_KIND

    def __str__(self) -> str:
        return "user" if self.is_user else f"qtsp-{self.index}"


@dataclass(frozen=True)
class AccessStructure:
    """t-of-n over the QTSPs; the user is always additionally required."""

    t: int
    n: int
    user_mandatory: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"need at least one qtsp, got n={self.n}")
        if not 1 <= self.t <= self.n:
            raise ParameterError(f"need 1 <= t <= n, got t={self.t}, n={self.n}")
        if not self.user_mandatory:
            raise ParameterError(
                "signing without mandatory user participation is not supported"
            )


@dataclass(frozen=True)
class KeyShare:
    holder: Holder
    secret: int = field(repr=False)
    epoch: int


@dataclass(frozen=True)
class DistributedKey:
    """Public half of the distributed key. Contains no secret material."""

    suite_id: str
    access: AccessStructure
    group_public_key: int
    user_public_share: int
    qtsp_public_shares: dict[int, int]
    epoch: int
    dealer_commitments: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.epoch < 0:
            raise ParameterError("epoch must be non-negative")
        if set(self.qtsp_public_shares) != set(range(1, self.access.n + 1)):
            raise ParameterError("public shares must cover qtsp indices 1..n")
        if len(self.dealer_commitments) != self.access.n:
            raise ParameterError("expected one commitment vector per dealer")

    def verify_consistency(self, suite: SignatureSuite) -> bool:
        """Recompute the public key and every QTSP public share from
        the dealer commitments plus the user's public share."""
        group = suite.group
        acc = self.user_public_share
        for vector in self.dealer_commitments:
            acc = group.mul(acc, vector[0])
        if acc != self.group_public_key:
            return False
        for i in range(1, self.access.n + 1):
            derived = _public_share_from_commitments(self.dealer_commitments, group, i)
            if derived != self.qtsp_public_shares[i]:
                return False
        return True


def _public_share_from_commitments(commitment_vectors, group, index: int) -> int:
    acc = group.identity
    for vector in commitment_vectors:
        power = 1
        for commitment in vector:
            acc = group.mul(acc, group.exp(commitment, power))
            power = (power * index) % group.order
    return acc


def _draw_polynomial(q: int, degree_plus_one: int, rng: random.Random) -> list[int]:
    return [rng.randrange(q) for _ in range(degree_plus_one)]


def dkg(
    access: AccessStructure,
    suite: SignatureSuite,
    rng: random.Random | None = None,
    *,
    dealer_polynomials: list[list[int]] | None = None,
    user_secret: int | None = None,
    corrupt_share: tuple[int, int] | None = None,
    epoch: int = 0,
) -> tuple[DistributedKey, dict[Holder, KeyShare]]:
    """Joint key generation: n QTSP dealers plus an independent user part.

    `dealer_polynomials`, `user_secret`, and `corrupt_share` exist for
    fixtures: they inject the per-dealer polynomials (coefficient lists,
    constant term first), the user component, and a single tampered
    dealt value (dealer, recipient) respectively.
    """
    if not suite.threshold_capable or suite.group is None:
        raise ParameterError(f"suite {suite.suite_id!r} cannot host threshold keys")
    group = suite.group
    q = group.order
    t, n = access.t, access.n
    if n >= q:
        raise ParameterError(f"group order {q} too small for n={n}")
    rng = rng or random.SystemRandom()

    if dealer_polynomials is None:
        dealer_polynomials = [_draw_polynomial(q, t, rng) for _ in range(n)]
    if len(dealer_polynomials) != n or any(len(p) != t for p in dealer_polynomials):
        raise ParameterError(f"need {n} dealer polynomials with {t} coefficients each")

    commitments: list[list[int]] = []
    dealt: list[list[int]] = []
    for coeffs in dealer_polynomials:
        as_field = [FieldElement(c, q) for c in coeffs]
        commitments.append(feldman_commit(as_field, group))
        dealt.append([poly_eval(as_field, i).value for i in range(1, n + 1)])

    if corrupt_share is not None:
        dealer, recipient = corrupt_share
        dealt[dealer - 1][recipient - 1] = (dealt[dealer - 1][recipient - 1] + 1) % q

    for recipient in range(1, n + 1):
        for dealer in range(1, n + 1):
            value = FieldElement(dealt[dealer - 1][recipient - 1], q)
            if not feldman_verify_share(recipient, value, commitments[dealer - 1], group):
                raise DkgAbortError(
                    dealer, f"share for qtsp {recipient} fails commitment check"
                )

    qtsp_secrets = {
        i: sum(dealt[j][i - 1] for j in range(n)) % q for i in range(1, n + 1)
    }
    qtsp_public = group.identity
    for vector in commitments:
        qtsp_public = group.mul(qtsp_public, vector[0])

    injected_user_secret = user_secret is not None
    if user_secret is None:
        user_secret = group.random_scalar(rng)
    user_secret %= q
    if user_secret == 0:
        raise ParameterError("user component is zero mod group order")

    user_public = group.exp(group.generator, user_secret)
    public_key = group.mul(user_public, qtsp_public)
    # A combined key equal to the identity is unusable; in a real run
    # the parties would regenerate, so redraw the user component. With
    # an injected component there is nothing to redraw: reject.
    while public_key == group.identity:
        if injected_user_secret:
            raise InvalidKeyError("combined public key is the identity element")
        user_secret = group.random_scalar(rng)
        user_public = group.exp(group.generator, user_secret)
        public_key = group.mul(user_public, qtsp_public)

    # Public shares are derived from commitments so anyone can recompute
    # them; the secret-based value must agree for consistent dealing.
    vectors = tuple(tuple(v) for v in commitments)
    public_shares = {
        i: _public_share_from_commitments(vectors, group, i) for i in range(1, n + 1)
    }
    for i, secret in qtsp_secrets.items():
        assert group.exp(group.generator, secret) == public_shares[i]
    key = DistributedKey(
        suite_id=suite.suite_id,
        access=access,
        group_public_key=public_key,
        user_public_share=user_public,
        qtsp_public_shares=public_shares,
        epoch=epoch,
        dealer_commitments=vectors,
    )

    shares: dict[Holder, KeyShare] = {
        Holder.user(): KeyShare(Holder.user(), user_secret, epoch)
    }
    for i, secret in qtsp_secrets.items():
        shares[Holder.qtsp(i)] = KeyShare(Holder.qtsp(i), secret, epoch)
    return key, shares


def refresh_shares(
    key: DistributedKey,
    suite: SignatureSuite,
    shares: dict[Holder, KeyShare],
    rng: random.Random | None = None,
    *,
    dealer_polynomials: list[list[int]] | None = None,
) -> tuple[DistributedKey, dict[Holder, KeyShare]]:
    """Re-randomize QTSP shares with zero-constant polynomials.

    The public key must not move; any dealer whose sharing would shift
    it (nonzero constant term) aborts the refresh with attribution.
    Needs every QTSP share present: refresh is a full-quorum operation.
    """
    group = suite.group
    q = group.order
    t, n = key.access.t, key.access.n
    missing = [i for i in range(1, n + 1) if Holder.qtsp(i) not in shares]
    if missing:
        raise ParameterError(f"refresh needs all qtsp shares, missing {missing}")
    if Holder.user() not in shares:
        raise ParameterError("refresh needs the user share present")
    for share in shares.values():
        if share.epoch != key.epoch:
            raise ParameterError(
                f"stale share for {share.holder} (epoch {share.epoch} != {key.epoch})"
            )
    rng = rng or random.SystemRandom()

    if dealer_polynomials is None:
        dealer_polynomials = [[0] + _draw_polynomial(q, t - 1, rng) for _ in range(n)]
    if len(dealer_polynomials) != n or any(len(p) != t for p in dealer_polynomials):
        raise ParameterError(f"need {n} refresh polynomials with {t} coefficients each")

    refresh_commitments: list[list[int]] = []
    dealt: list[list[int]] = []
    for dealer, coeffs in enumerate(dealer_polynomials, start=1):
        as_field = [FieldElement(c, q) for c in coeffs]
        vector = feldman_commit(as_field, group)
        if vector[0] != group.identity:
            raise DkgAbortError(dealer, "refresh would drift the public key")
        refresh_commitments.append(vector)
        dealt.append([poly_eval(as_field, i).value for i in range(1, n + 1)])

    for recipient in range(1, n + 1):
        for dealer in range(1, n + 1):
            value = FieldElement(dealt[dealer - 1][recipient - 1], q)
            if not feldman_verify_share(
                recipient, value, refresh_commitments[dealer - 1], group
            ):
                raise DkgAbortError(
                    dealer, f"refresh share for qtsp {recipient} fails commitment check"
                )

    merged = tuple(
        tuple(
            group.mul(old, new)
            for old, new in zip(key.dealer_commitments[j], refresh_commitments[j])
        )
        for j in range(n)
    )
    new_epoch = key.epoch + 1
    public_shares = {
        i: _public_share_from_commitments(merged, group, i) for i in range(1, n + 1)
    }
    new_key = DistributedKey(
        suite_id=key.suite_id,
        access=key.access,
        group_public_key=key.group_public_key,
        user_public_share=key.user_public_share,
        qtsp_public_shares=public_shares,
        epoch=new_epoch,
        dealer_commitments=merged,
    )

    new_shares: dict[Holder, KeyShare] = {
        Holder.user(): KeyShare(Holder.user(), shares[Holder.user()].secret, new_epoch)
    }
    for i in range(1, n + 1):
        refreshed = (
            shares[Holder.qtsp(i)].secret
            + sum(dealt[j][i - 1] for j in range(n))
        ) % q
        assert group.exp(group.generator, refreshed) == public_shares[i]
        new_shares[Holder.qtsp(i)] = KeyShare(Holder.qtsp(i), refreshed, new_epoch)
    return new_key, new_shares
