"""Arithmetic in the cyclic binary polynomial ring R = F2[x]/(x^r - 1).

Coefficient vectors are stored as nonnegative Python integers: bit i of the
integer is the coefficient of x^i, so addition is XOR and a cyclic shift is a
rotate.  ``DensePoly`` wraps such an integer together with its ring;
``SparsePoly`` stores only the sorted support indices and is the carrier for
low-weight values (private key blocks, error vectors).

Multiplication picks between two exact strategies: shifted-XOR accumulation
over the lighter operand's support, and (for two dense operands) an integer
"spread" product that places each coefficient in its own 16-bit lane so that
ordinary bigint multiplication computes the whole convolution at once.
Inversion uses the Fermat exponent 2^(r-1) - 2 with a square-and-multiply
addition chain; raising to 2^k is a single index permutation i -> i*2^k mod r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NotInvertibleError, ParameterError

# Below this support weight the rotate-and-XOR product is cheaper than the
# lane-spread bigint product.
_SPARSE_MUL_CUTOFF = 512


def _small_factors(n: int) -> list[int]:
    """Prime factors of n by trial division (n stays far below 2^32 here)."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_kem_grade(r: int) -> bool:
    """True when r is an odd prime and 2 generates the multiplicative group mod r."""
    if r < 3 or r % 2 == 0:
        return False
    if any(r % d == 0 for d in range(3, math.isqrt(r) + 1, 2)):
        return False
    return all(pow(2, (r - 1) // p, r) != 1 for p in _small_factors(r - 1))


@dataclass(frozen=True)
class RingParams:
    """Circulant block size r, with a flag recording the invertibility check.

    ``kem_validated`` does not take part in equality: it only records whether
    the "r prime and 2 primitive modulo r" property was verified, which
    guarantees every odd-weight element other than the all-ones vector is
    invertible.
    """

    r: int
    kem_validated: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.r < 3 or self.r % 2 == 0:
            raise ParameterError(f"ring size must be odd and >= 3, got {self.r}")

    @classmethod
    def for_kem(cls, r: int) -> "RingParams":
        if not is_kem_grade(r):
            raise ParameterError(f"r={r} is not prime with 2 as a primitive root")
        return cls(r, kem_validated=True)

    @cached_property
    def mask(self) -> int:
        return (1 << self.r) - 1

    @cached_property
    def nbytes(self) -> int:
        return (self.r + 7) // 8


def _check_same_ring(a, b) -> None:
    if a.ring.r != b.ring.r:
        raise ParameterError(f"ring mismatch: r={a.ring.r} vs r={b.ring.r}")


def _bits_to_array(v: int, r: int) -> np.ndarray:
    """Integer bit vector -> uint8 array of length r (index i = coeff of x^i)."""
    raw = v.to_bytes((r + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:r]


def _array_to_bits(arr: np.ndarray) -> int:
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")


def _support_of(v: int, r: int) -> np.ndarray:
    return np.nonzero(_bits_to_array(v, r))[0]


def _fold(v: int, r: int, mask: int) -> int:
    # reduce a value of fewer than 2r bits modulo x^r - 1
    return (v >> r) ^ (v & mask)


def _mul_int_shift(a: int, b: int, r: int, mask: int) -> int:
    # rotate-and-XOR over the support of a; a is expected to be the lighter one
    acc = 0
    while a:
        low = a & -a
        acc ^= b << (low.bit_length() - 1)
        a ^= low
    return _fold(acc, r, mask)


def _mul_int_spread(a: int, b: int, r: int, mask: int) -> int:
    # Each coefficient occupies a 16-bit lane; convolution sums are at most
    # min(weight) <= r < 2^16, so lanes never carry into each other.
    av = _bits_to_array(a, r).astype("<u2")
    bv = _bits_to_array(b, r).astype("<u2")
    prod = int.from_bytes(av.tobytes(), "little") * int.from_bytes(bv.tobytes(), "little")
    lanes = np.frombuffer(prod.to_bytes(4 * r, "little"), dtype="<u2")
    coeff = lanes[:r].astype(np.uint32)
    coeff[: r - 1] += lanes[r : 2 * r - 1]
    return _array_to_bits((coeff & 1).astype(np.uint8))


def _mul_int(a: int, b: int, r: int, mask: int) -> int:
    wa = a.bit_count()
    wb = b.bit_count()
    if wa > wb:
        a, b, wa, wb = b, a, wb, wa
    if wa <= _SPARSE_MUL_CUTOFF or r >= 1 << 16:
        return _mul_int_shift(a, b, r, mask)
    return _mul_int_spread(a, b, r, mask)


def _frobenius_int(v: int, r: int, e: int) -> int:
    """Raise to the power 2^e: permutes index i to i * 2^e mod r."""
    supp = _support_of(v, r)
    if supp.size == 0:
        return 0
    dest = (supp.astype(np.int64) * pow(2, e, r)) % r
    arr = np.zeros(r, dtype=np.uint8)
    arr[dest] = 1
    return _array_to_bits(arr)


def _invert_int(a: int, r: int, mask: int) -> tuple[int, int]:
    """Inverse via the exponent 2^(r-1) - 2; returns (inverse, multiplications).

    Maintains X = a^(2^e - 1) while consuming the bits of n = r - 2 from the
    most significant end; one final power of two turns a^(2^n - 1) into
    a^(2^(r-1) - 2).  The multiplication count is floor(log2(n)) + wt(n) - 1.
    """
    n = r - 2
    x = a
    e = 1
    muls = 0
    for bit in bin(n)[3:]:
        x = _mul_int(_frobenius_int(x, r, e), x, r, mask)
        muls += 1
        e *= 2
        if bit == "1":
            x = _mul_int(_frobenius_int(x, r, 1), a, r, mask)
            muls += 1
            e += 1
    return _frobenius_int(x, r, 1), muls


def iti_mul_bound(r: int) -> int:
    """Multiplication budget of the inversion chain: floor(log2(r-1)) + wt(r-2) - 1."""
    return (r - 1).bit_length() - 1 + (r - 2).bit_count() - 1


@dataclass(frozen=True)
class SparsePoly:
    """Ring element stored as strictly increasing support indices."""

    ring: RingParams
    support: tuple[int, ...]

    def __post_init__(self):
        r = self.ring.r
        prev = -1
        for i in self.support:
            if not prev < i < r:
                raise ParameterError(f"support must be strictly increasing in [0, {r})")
            prev = i

    @classmethod
    def from_indices(cls, ring: RingParams, indices) -> "SparsePoly":
        return cls(ring, tuple(sorted(int(i) for i in indices)))

    def weight(self) -> int:
        return len(self.support)

    def to_dense(self) -> "DensePoly":
        bits = 0
        for i in self.support:
            bits |= 1 << i
        return DensePoly(self.ring, bits)


@dataclass(frozen=True)
class DensePoly:
    """Ring element stored as an r-bit integer (bit i = coefficient of x^i)."""

    ring: RingParams
    bits: int

    def __post_init__(self):
        assert 0 <= self.bits <= self.ring.mask, "pad bits above r must stay zero"

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, ring: RingParams) -> "DensePoly":
        return cls(ring, 0)

    @classmethod
    def one(cls, ring: RingParams) -> "DensePoly":
        return cls(ring, 1)

    @classmethod
    def x_power(cls, ring: RingParams, k: int) -> "DensePoly":
        return cls(ring, 1 << (k % ring.r))

    @classmethod
    def all_ones(cls, ring: RingParams) -> "DensePoly":
        return cls(ring, ring.mask)

    @classmethod
    def from_bytes_le(cls, ring: RingParams, raw: bytes) -> "DensePoly":
        if len(raw) != ring.nbytes:
            raise ParameterError(f"expected {ring.nbytes} bytes, got {len(raw)}")
        v = int.from_bytes(raw, "little")
        if v > ring.mask:
            raise ParameterError("pad bits beyond r must be zero")
        return cls(ring, v)

    @classmethod
    def from_hex(cls, ring: RingParams, s: str) -> "DensePoly":
        return cls.from_bytes_le(ring, bytes.fromhex(s))

    # -- serialization ------------------------------------------------------

    def to_bytes_le(self) -> bytes:
        return self.bits.to_bytes(self.ring.nbytes, "little")

    def to_hex(self) -> str:
        return self.to_bytes_le().hex()

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "DensePoly") -> "DensePoly":
        _check_same_ring(self, other)
        return DensePoly(self.ring, self.bits ^ other.bits)

    def __mul__(self, other: "DensePoly") -> "DensePoly":
        _check_same_ring(self, other)
        return DensePoly(self.ring, _mul_int(self.bits, other.bits, self.ring.r, self.ring.mask))

    def square(self) -> "DensePoly":
        return DensePoly(self.ring, _frobenius_int(self.bits, self.ring.r, 1))

    def shift(self, k: int) -> "DensePoly":
        k %= self.ring.r
        if k == 0:
            return self
        r, mask = self.ring.r, self.ring.mask
        return DensePoly(self.ring, ((self.bits << k) | (self.bits >> (r - k))) & mask)

    def star(self, other: "DensePoly") -> "DensePoly":
        _check_same_ring(self, other)
        return DensePoly(self.ring, self.bits & other.bits)

    def weight(self) -> int:
        return self.bits.bit_count()

    def invert(self) -> "DensePoly":
        inv, _ = invert_counted(self)
        return inv

    def support(self) -> np.ndarray:
        return _support_of(self.bits, self.ring.r)

    def to_sparse(self) -> SparsePoly:
        return SparsePoly(self.ring, tuple(int(i) for i in self.support()))


def add(a: DensePoly, b: DensePoly) -> DensePoly:
    return a + b


def mul(a: DensePoly, b: DensePoly) -> DensePoly:
    return a * b


def mul_sparse(a: SparsePoly, b: DensePoly) -> DensePoly:
    """Product of a sparse and a dense element (rotate-XOR over a's support)."""
    if a.ring.r != b.ring.r:
        raise ParameterError(f"ring mismatch: r={a.ring.r} vs r={b.ring.r}")
    r, mask = b.ring.r, b.ring.mask
    acc = 0
    for s in a.support:
        acc ^= b.bits << s
    return DensePoly(b.ring, _fold(_fold(acc, r, mask), r, mask))


def invert_counted(a: DensePoly) -> tuple[DensePoly, int]:
    """Inverse of a plus the number of ring multiplications the chain used.

    Correctness is established after the fact: the result is accepted only if
    a * result == 1, which also rejects non-invertible inputs.
    """
    r, mask = a.ring.r, a.ring.mask
    inv, muls = _invert_int(a.bits, r, mask)
    if _mul_int(a.bits, inv, r, mask) != 1:
        raise NotInvertibleError(f"element of weight {a.weight()} is not invertible (r={r})")
    return DensePoly(a.ring, inv), muls


# -- extended-Euclid inverse, used as an independent cross-check in tests ----

def _deg(v: int) -> int:
    return v.bit_length() - 1


def _poly_divmod_nc(a: int, b: int) -> tuple[int, int]:
    # plain (non-cyclic) F2[x] division
    q = 0
    db = _deg(b)
    while a and _deg(a) >= db:
        sh = _deg(a) - db
        q |= 1 << sh
        a ^= b << sh
    return q, a


def _poly_mul_nc(a: int, b: int) -> int:
    acc = 0
    while a:
        low = a & -a
        acc ^= b << (low.bit_length() - 1)
        a ^= low
    return acc


def invert_oracle(a: DensePoly) -> DensePoly:
    """Inverse by the extended Euclidean algorithm modulo x^r - 1.

    Deliberately simple; kept as the second, independent route to the same
    answer as :func:`invert_counted`.
    """
    r = a.ring.r
    modulus = (1 << r) | 1
    r0, r1 = modulus, a.bits
    s0, s1 = 0, 1
    while r1:
        q, rem = _poly_divmod_nc(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, s0 ^ _poly_mul_nc(q, s1)
    if r0 != 1:
        raise NotInvertibleError(f"gcd(a, x^{r}-1) != 1")
    _, rem = _poly_divmod_nc(s0, modulus)
    return DensePoly(a.ring, rem)
