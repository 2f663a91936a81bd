"""Key generation, encapsulation, and decapsulation.

All randomness is squeezed from SHAKE256 streams so that every operation is a
deterministic function of its seed and reproduces bit-for-bit across
platforms.  Stream framing: one domain-tag byte, then for each input field a
big-endian 4-byte length followed by the field bytes.  Domain tags:

  0x48 / 0x4C / 0x4B   error hash H / mask hash L / key hash K
  0x30 / 0x31 / 0x32   key generation: h0 block, h1 block, sigma
  0x4D                 encapsulation message
  0x43                 checked-keygen candidate sub-seeds
  0x57                 weak-key and crafted-error generators
  0x54                 per-trial seeds in the failure-rate laboratory
  0x5E                 expansion of a 64-bit command-line seed
"""

from __future__ import annotations

import hashlib

from .errors import NotInvertibleError, ParameterError
from .keys import Ciphertext, ErrorPair, PrivateKey, PublicKey, SharedKey, SystemParams
from .ring import DensePoly, SparsePoly, mul_sparse

TAG_H = 0x48
TAG_L = 0x4C
TAG_K = 0x4B
TAG_KEYGEN_H0 = 0x30
TAG_KEYGEN_H1 = 0x31
TAG_KEYGEN_SIGMA = 0x32
TAG_ENCAPS_M = 0x4D
TAG_CHECKED_SUBSEED = 0x43
TAG_WEAK = 0x57
TAG_TRIAL = 0x54
TAG_CLI_SEED = 0x5E


class XofStream:
    """An extendable byte stream squeezed from SHAKE256.

    hashlib squeezes the first n bytes of the output stream on every
    ``digest(n)`` call, so re-digesting with a doubled length yields a
    consistent prefix; the buffer grows geometrically and reads are served
    from it.
    """

    def __init__(self, tag: int, fields: list[bytes] | tuple[bytes, ...]):
        h = hashlib.shake_256()
        h.update(bytes([tag]))
        for f in fields:
            h.update(len(f).to_bytes(4, "big"))
            h.update(f)
        self._h = h
        self._buf = b""
        self._pos = 0

    def read(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._buf):
            size = max(64, len(self._buf))
            while size < end:
                size *= 2
            self._buf = self._h.digest(size)
        out = self._buf[self._pos : end]
        self._pos = end
        return out

    def read_u32(self) -> int:
        return int.from_bytes(self.read(4), "little")

    def read_bits(self, nbits: int) -> bytes:
        """ceil(nbits/8) bytes with bits above nbits cleared in the last byte."""
        raw = bytearray(self.read((nbits + 7) // 8))
        if nbits % 8:
            raw[-1] &= (1 << (nbits % 8)) - 1
        return bytes(raw)


def expand_u64_seed(seed: int) -> bytes:
    """32-byte seed derived from a 64-bit integer (the CLI's --seed)."""
    if not 0 <= seed < 1 << 64:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return XofStream(TAG_CLI_SEED, [seed.to_bytes(8, "big")]).read(32)


def sample_fixed_weight(stream: XofStream, n_total: int, weight: int) -> tuple[int, ...]:
    """Exactly ``weight`` distinct indices in [0, n_total), uniform and unbiased.

    Reads little-endian 32-bit values; values at or above the largest multiple
    of n_total below 2^32 are rejected (no modulo bias), as are duplicates.
    """
    if weight > n_total:
        raise ParameterError(f"weight {weight} exceeds domain size {n_total}")
    limit = (1 << 32) // n_total * n_total
    chosen: set[int] = set()
    while len(chosen) < weight:
        v = stream.read_u32()
        if v >= limit:
            continue
        chosen.add(v % n_total)
    return tuple(sorted(chosen))


def sample_sigma(seed: bytes, params: SystemParams) -> bytes:
    return XofStream(TAG_KEYGEN_SIGMA, [seed]).read_bits(params.l)


def sample_private_key(params: SystemParams, seed: bytes) -> PrivateKey:
    """First draw of (h0, h1, sigma); no invertibility handling, no inversion.

    This is what the failure-rate laboratory samples per trial: decoding only
    needs the private key.  On a validated ring the draw always equals the
    private half of :func:`keygen` for the same seed.
    """
    if len(seed) != 32:
        raise ParameterError("keygen seed must be 32 bytes")
    ring = params.ring
    h0 = SparsePoly(ring, sample_fixed_weight(XofStream(TAG_KEYGEN_H0, [seed]), params.r, params.w2))
    h1 = SparsePoly(ring, sample_fixed_weight(XofStream(TAG_KEYGEN_H1, [seed]), params.r, params.w2))
    return PrivateKey(h0=h0, h1=h1, sigma=sample_sigma(seed, params))


def keygen(params: SystemParams, seed: bytes) -> tuple[PrivateKey, PublicKey]:
    """Sample (h0, h1, sigma) and publish h = h1 * h0^-1."""
    if len(seed) != 32:
        raise ParameterError("keygen seed must be 32 bytes")
    ring = params.ring
    h0_stream = XofStream(TAG_KEYGEN_H0, [seed])
    h1 = SparsePoly(ring, sample_fixed_weight(XofStream(TAG_KEYGEN_H1, [seed]), params.r, params.w2))
    sigma = sample_sigma(seed, params)
    while True:
        h0 = SparsePoly(ring, sample_fixed_weight(h0_stream, params.r, params.w2))
        try:
            h0_inv = h0.to_dense().invert()
            break
        except NotInvertibleError:
            # cannot happen on a validated ring; retrying on the same stream
            # protects experimental moduli
            continue
    h = mul_sparse(h1, h0_inv)
    return PrivateKey(h0=h0, h1=h1, sigma=sigma), PublicKey(h=h)


def hash_H(m: bytes, params: SystemParams) -> ErrorPair:
    """Expand a message into the weight-t error pair over 2r positions."""
    if len(m) != params.l_bytes:
        raise ParameterError(f"message must be {params.l_bytes} bytes")
    idx = sample_fixed_weight(XofStream(TAG_H, [m]), 2 * params.r, params.t)
    ring = params.ring
    e0 = SparsePoly(ring, tuple(i for i in idx if i < params.r))
    e1 = SparsePoly(ring, tuple(i - params.r for i in idx if i >= params.r))
    return ErrorPair(e0=e0, e1=e1)


def _error_pair_bytes(e: ErrorPair, params: SystemParams) -> bytes:
    # 2r-bit concatenation e0 || e1, little-endian bit order within bytes
    v = e.e0.to_dense().bits | (e.e1.to_dense().bits << params.r)
    return v.to_bytes((2 * params.r + 7) // 8, "little")


def hash_L(e: ErrorPair, params: SystemParams) -> bytes:
    return XofStream(TAG_L, [_error_pair_bytes(e, params)]).read_bits(params.l)


def hash_K(m: bytes, c: Ciphertext, params: SystemParams) -> SharedKey:
    stream = XofStream(TAG_K, [m, c.c0.to_bytes_le(), c.c1])
    return SharedKey(stream.read_bits(params.l))


def _xor_bytes(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


def encaps(pk: PublicKey, params: SystemParams, seed: bytes) -> tuple[Ciphertext, SharedKey]:
    """Encapsulate under h: C = (e0 + e1*h, m xor L(e0, e1)), K = K(m, C)."""
    if pk.h.ring.r != params.r:
        raise ParameterError("public key does not match parameters")
    if len(seed) != 32:
        raise ParameterError("encaps seed must be 32 bytes")
    m = XofStream(TAG_ENCAPS_M, [seed]).read_bits(params.l)
    e = hash_H(m, params)
    c0 = e.e0.to_dense() + mul_sparse(e.e1, pk.h)
    c1 = _xor_bytes(m, hash_L(e, params))
    c = Ciphertext(c0=c0, c1=c1)
    return c, hash_K(m, c, params)


def syndrome(c0: DensePoly, h0: SparsePoly) -> DensePoly:
    """Decoder input S = c0 * h0."""
    return mul_sparse(h0, c0)


def decaps(sk: PrivateKey, c: Ciphertext, params: SystemParams, decoder_cfg=None) -> SharedKey:
    """Decapsulate; never signals failure (implicit rejection via sigma)."""
    key, _ = decaps_with_diagnostics(sk, c, params, decoder_cfg)
    return key


def decaps_with_diagnostics(sk: PrivateKey, c: Ciphertext, params: SystemParams,
                            decoder_cfg=None):
    """Decapsulate and also return the decoder outcome.

    The outcome is measurement-only (for the failure-rate laboratory and the
    CLI diagnostics flag); the returned shared key is exactly what
    :func:`decaps` produces.
    """
    from .decoder import DecoderConfig, bgf_decode

    sk.check_params(params)
    c.check_params(params)
    cfg = decoder_cfg if decoder_cfg is not None else DecoderConfig.for_params(params)
    s = syndrome(c.c0, sk.h0)
    outcome = bgf_decode(s, sk.h0, sk.h1, cfg)
    e_prime = outcome.error
    m_prime = _xor_bytes(c.c1, hash_L(e_prime, params))
    if hash_H(m_prime, params) != e_prime:
        m_prime = sk.sigma
    return hash_K(m_prime, c, params), outcome
