"""Classify a private key as Weak or Normal before it is ever used.

Two screens run in order.  The first accumulates, per block, the multiplicity
of every cyclic distance between support positions and rejects the key when
any multiplicity exceeds the threshold T (catches the single-block families).
The second slides h1 over h0 at every alignment that makes a support position
of h1 land on one of h0 and rejects when the blocks intersect in more than T
positions (catches the cross-block family).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BudgetExhaustedError, ParameterError
from .kem import TAG_CHECKED_SUBSEED, XofStream, keygen
from .keys import PrivateKey, PublicKey, SystemParams
from .ring import SparsePoly
from .weakkeys import distance


@dataclass(frozen=True)
class KeyCheckConfig:
    """Multiplicity/intersection threshold; keys exceeding it are Weak."""

    threshold_T: int = 10

    def __post_init__(self):
        if self.threshold_T < 1:
            raise ParameterError("threshold must be >= 1")


@dataclass(frozen=True)
class PerBlockMultiplicity:
    block: int
    distance: int
    multiplicity: int

    def to_json_dict(self) -> dict:
        return {"kind": "per_block_multiplicity", "block": self.block,
                "distance": self.distance, "multiplicity": self.multiplicity}


@dataclass(frozen=True)
class CrossBlockIntersection:
    shift: int
    size: int

    def to_json_dict(self) -> dict:
        return {"kind": "cross_block_intersection", "shift": self.shift,
                "size": self.size}


@dataclass(frozen=True)
class KeyVerdict:
    verdict: str  # "Weak" or "Normal"
    reason: PerBlockMultiplicity | CrossBlockIntersection | None = None

    def __post_init__(self):
        if (self.verdict == "Weak") != (self.reason is not None):
            raise ParameterError("a reason accompanies exactly the Weak verdict")

    @property
    def is_weak(self) -> bool:
        return self.verdict == "Weak"

    def to_json_dict(self, cfg: KeyCheckConfig) -> dict:
        return {"verdict": self.verdict,
                "reason": self.reason.to_json_dict() if self.reason else None,
                "T": cfg.threshold_T}


def key_check(h0: SparsePoly, h1: SparsePoly, cfg: KeyCheckConfig) -> KeyVerdict:
    """Weak/Normal verdict from supports alone (sigma never matters)."""
    if h0.weight() != h1.weight():
        raise ParameterError("blocks must have equal weight")
    r = h0.ring.r
    t = cfg.threshold_T

    for block_index, h in enumerate((h0, h1)):
        mult: dict[int, int] = {}
        supp = h.support
        for j in range(len(supp)):
            for k in range(j + 1, len(supp)):
                d = distance(supp[j], supp[k], r)
                mult[d] = mult.get(d, 0) + 1
        if mult:
            worst = max(mult, key=lambda d: (mult[d], -d))
            if mult[worst] > t:
                return KeyVerdict("Weak", PerBlockMultiplicity(
                    block=block_index, distance=worst, multiplicity=mult[worst]))

    h0_dense = h0.to_dense()
    h1_dense = h1.to_dense()
    seen: set[int] = set()
    for pj in h0.support:
        for pk in h1.support:
            shift = (pj - pk) % r
            if shift in seen:
                continue
            seen.add(shift)
            size = h0_dense.star(h1_dense.shift(shift)).weight()
            if size > t:
                return KeyVerdict("Weak", CrossBlockIntersection(shift=shift, size=size))
    return KeyVerdict("Normal")


def keygen_checked(params: SystemParams, seed: bytes, cfg: KeyCheckConfig,
                   budget: int = 100) -> tuple[PrivateKey, PublicKey, int]:
    """Generate keys until one passes the check; returns (sk, pk, rejected).

    Candidates are screened on their sampled blocks before the public key is
    derived, so rejected candidates never pay for an inversion.
    """
    from .kem import sample_private_key

    rejected = 0
    for i in range(budget):
        sub_seed = XofStream(TAG_CHECKED_SUBSEED, [seed, i.to_bytes(4, "big")]).read(32)
        candidate = sample_private_key(params, sub_seed)
        if key_check(candidate.h0, candidate.h1, cfg).is_weak:
            rejected += 1
            continue
        sk, pk = keygen(params, sub_seed)
        if sk.h0 != candidate.h0 and key_check(sk.h0, sk.h1, cfg).is_weak:
            # an experimental ring resampled h0 past the screened draw
            rejected += 1
            continue
        return sk, pk, rejected
    raise BudgetExhaustedError(
        f"no key passed the check in {budget} attempts (T={cfg.threshold_T})")
