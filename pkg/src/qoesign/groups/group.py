"""Prime-order multiplicative groups.

Two backends behind one description: a hand-checkable toy group (the
order-11 subgroup of Z_23* generated by 2) for exhaustive tests, and a
3072-bit modulus / 256-bit subgroup for realistic benchmark timings.
Elements are subgroup members represented as integers; encodings are
fixed-length big-endian residues and decoding rejects anything that is
not a canonical subgroup member.

Arithmetic is plain Python big-int math: not constant time, not
side-channel hardened. Desk scale only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from qoesign.errors import DecodeError, ParameterError

# Fixed production parameters: p = k*q + 1 with p, q prime, g of order q.
# Derived deterministically by scripts/gen_group_params.py.
PROD_P = int(
    "8ed4ff1abe246870b9d73e9cff7d60683a457f69cef9461dc59721088bf72f1dbcf2b5db"
    "5a8acfa2e2f7363cbfbf420b48ce781f398367536b99fb69c08c975ac1191522819f4ae4"
    "08c607ca0b3e92fda0eeec3c3932358d2ebe89412e77594a3022b7798be65fb0f5ebb381"
    "0eb595e789d069ce77a1bf3a21a7ff53def66a41b3644064de59fd9741ee1bf5eec20538"
    "c708439ce0886c1a2aa766622dfe5746ee77398b183de97f7db4e6563033d91f41d4c512"
    "c5a090703656b41a6e1ada00c5a2a73760e56df1e14040a894466240b875729f6fd734fe"
    "4d24c59312859a336106e518424e5dd657211e2f38eb78ce43057cf94f70a8df9b6dcfa8"
    "7ecc9991045c762868822f76cffb41d885b2dce710d6243acbd64ee34c14055981971865"
    "822220ed856c1d4ca51a33b30b4edebf3a6cddd5f468dcc8a9caa80100b5649c6342d56f"
    "7129af5cee47bc263be853a15933db16ddf745a5ce34cc1a70bd7fbf64ba9db0411342de"
    "34dcdaaa7537d89757ecb74f6dd73f7c4269a525737a011d",
    16,
)
PROD_Q = int(
    "92d71fe392fe8e3333cd98a51f24de5bfe14239437994c243ab55fb4096be055",
    16,
)
PROD_G = int(
    "569cea8730a0a8bb7db48dda31edb3e728cf7602b752ded784bd09fe96f181e26fe7d74e"
    "b8704a0108bb771dc98a44d49dc6a32f608ee97f82a665a58abec55ffa11c7efbf25782c"
    "d15a9d198b4bde3b39d7bf3e4de6890b9da687f96316b26b5db4a141d5f091de0a7e9e36"
    "ef330cabd4e6744c3cb6ee3ff72d4122268a57dd2db783ea7b79dd93770624bf3bc6cecf"
    "caf0f781cc308eb69f391cc67090a3bf0d31028090f2ee9454b440529c54eec4456b9da6"
    "2af7501312d8f08aece9261e90dfd4c74d3d4f55b72f4fe95698f082250013b3264c1269"
    "12c90c0830d1cd03a87eefcbbbd6af245243f6127f2d93798b883be8bbbc46be0cf00089"
    "4879fe76c0f808e0546709b8a1fb955e0bd9a1b843beeb7596a53130fcb1ba323943c010"
    "dd80e74861d9c198498c199bd39206568f5df86c90a1deb93484eafdebec19afb53c5c04"
    "609f9989fcede0cc4d69af0f9ee7e44bc05dd40f11b687ffec41655d8bfb14ee7e88f370"
    "38c512adb0e8872f83411235aad3d43833901945971dee5d",
    16,
)


@dataclass(frozen=True)
class GroupDescription:
    """A prime-order subgroup of Z_p*, with its canonical byte layout."""

    group_id: str
    p: int
    order: int
    generator: int
    element_bytes: int
    scalar_bytes: int
    _members: frozenset | None = field(default=None, repr=False, compare=False)

    @property
    def identity(self) -> int:
        return 1

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def exp(self, base: int, exponent: int) -> int:
        return pow(base, exponent % self.order, self.p)

    def inv(self, a: int) -> int:
        return pow(a, -1, self.p)

    def is_member(self, a: int) -> bool:
        if not 1 <= a < self.p:
            return False
        if self._members is not None:
            return a in self._members
        return pow(a, self.order, self.p) == 1

    def encode(self, a: int) -> bytes:
        if not self.is_member(a):
            raise ParameterError(f"{a} is not an element of {self.group_id}")
        return a.to_bytes(self.element_bytes, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.element_bytes:
            raise DecodeError(
                f"expected {self.element_bytes} bytes, got {len(data)}"
            )
        a = int.from_bytes(data, "big")
        if not self.is_member(a):
            raise DecodeError(f"bytes do not encode a member of {self.group_id}")
        return a

    def encode_scalar(self, s: int) -> bytes:
        return (s % self.order).to_bytes(self.scalar_bytes, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_bytes:
            raise DecodeError(
                f"expected {self.scalar_bytes}-byte scalar, got {len(data)}"
            )
        s = int.from_bytes(data, "big")
        if s >= self.order:
            raise DecodeError("scalar not reduced mod group order")
        return s

    def random_scalar(self, rng) -> int:
        """Uniform nonzero scalar from a random.Random-compatible source."""
        return rng.randrange(1, self.order)


def toy_group() -> GroupDescription:
    """Order-11 subgroup of Z_23*, generator 2. Small enough to enumerate."""
    members = frozenset(pow(2, k, 23) for k in range(11))
    return GroupDescription(
        group_id="toy-p23",
        p=23,
        order=11,
        generator=2,
        element_bytes=4,
        scalar_bytes=2,
        _members=members,
    )


def production_group() -> GroupDescription:
    return GroupDescription(
        group_id="modp-3072-256",
        p=PROD_P,
        order=PROD_Q,
        generator=PROD_G,
        element_bytes=384,
        scalar_bytes=32,
    )
