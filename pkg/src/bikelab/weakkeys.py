"""Weak-key families, distance spectra, crafted error patterns, and densities.

Three families of dangerous private keys are generated constructively:

  type 1  one block carries a run of f support positions at constant step d
          (plus random fill), giving distance d a multiplicity of at least
          f - 1 in that block; the other block is uniformly random;
  type 2  one block whose spectrum has multiplicity exactly m at one
          distance, planted as an (m+1)-term arithmetic chain and verified;
          the other block is uniformly random;
  type 3  cross-block structure: m support positions of h1 are a rotation of
          m support positions of h0, so some alignment of the two blocks
          intersects in exactly m positions.

For types 1 and 2 the structured block index is a fair coin from the seed
stream: the family's counting formulas carry a factor 2 for exactly this
choice, so sampling the class uniformly requires it (and the measured
failure rates of the family depend on the other block staying random).
Every generator re-verifies its defining property before returning and
resamples on the rare collision, so outputs are correct by construction.
Key-space fractions for the families are computed exactly with big-integer
binomials; only their log2 is exposed as a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BudgetExhaustedError, ParameterError
from .kem import TAG_WEAK, XofStream, sample_fixed_weight, sample_sigma
from .keys import ErrorPair, PrivateKey, SystemParams
from .ring import RingParams, SparsePoly

_RESAMPLE_BUDGET = 1000


def distance(i: int, j: int, r: int) -> int:
    """Cyclic distance between positions i and j, in [0, r/2]."""
    return min((i - j + r) % r, (j - i + r) % r)


def _draw_index(stream: XofStream, n: int) -> int:
    """One unbiased index in [0, n) (same rejection rule as the weight sampler)."""
    limit = (1 << 32) // n * n
    while True:
        v = stream.read_u32()
        if v < limit:
            return v % n


@dataclass(frozen=True)
class DistanceSpectrum:
    """Multiplicity of every distance 1..U among a support's position pairs."""

    r: int
    U: int
    mult: dict[int, int]

    def existing(self) -> set[int]:
        return {d for d, m in self.mult.items() if m > 0}

    def csv_rows(self) -> list[str]:
        return [f"{d},{self.mult[d]}" for d in range(1, self.U + 1)]

    CSV_HEADER = "d,multiplicity"


def spectrum_of_support(supp, r: int, U: int | None = None) -> DistanceSpectrum:
    """Spectrum by direct pair enumeration; works for any r >= 2 (even included)."""
    if U is None:
        U = r // 2
    if not 1 <= U <= r // 2:
        raise ParameterError(f"U must be in [1, {r // 2}]")
    mult = dict.fromkeys(range(1, U + 1), 0)
    supp = tuple(supp)
    for a in range(len(supp)):
        for b in range(a + 1, len(supp)):
            d = distance(supp[a], supp[b], r)
            if 1 <= d <= U:
                mult[d] += 1
    return DistanceSpectrum(r=r, U=U, mult=mult)


def spectrum(h: SparsePoly, U: int | None = None) -> DistanceSpectrum:
    """Distance spectrum of a ring element's support."""
    return spectrum_of_support(h.support, h.ring.r, U)


@dataclass(frozen=True)
class WeakKeySpec:
    """Family selector plus the family-specific parameters."""

    family: int
    f: int | None = None
    d: int | None = None
    l_shift: int = 0
    m: int | None = None

    def __post_init__(self):
        if self.family not in (1, 2, 3):
            raise ParameterError(f"unknown weak-key family {self.family}")
        if self.family == 1 and (self.f is None or self.d is None):
            raise ParameterError("type 1 requires f and d")
        if self.family == 2 and (self.m is None or self.d is None):
            raise ParameterError("type 2 requires m and d")
        if self.family == 3 and self.m is None:
            raise ParameterError("type 3 requires m")

    def generate(self, params: SystemParams, seed: bytes) -> PrivateKey:
        if self.family == 1:
            return gen_type1(params, self.f, self.d, self.l_shift, seed)
        if self.family == 2:
            return gen_type2(params, self.d, self.m, seed)
        return gen_type3(params, self.m, seed)

    def label(self) -> str:
        if self.family == 1:
            return f"type1:f={self.f},d={self.d},shift={self.l_shift}"
        if self.family == 2:
            return f"type2:d={self.d},m={self.m}"
        return f"type3:m={self.m}"

    def to_json_dict(self) -> dict:
        return {"family": self.family, "f": self.f, "d": self.d,
                "l_shift": self.l_shift, "m": self.m}

    @classmethod
    def parse(cls, text: str) -> "WeakKeySpec":
        """Parse "type1:f=40,d=1" style descriptors (shift and d may be omitted)."""
        head, _, rest = text.partition(":")
        if not head.startswith("type") or head[4:] not in ("1", "2", "3"):
            raise ParameterError(f"bad weak-key family in {text!r}")
        family = int(head[4:])
        kv: dict[str, int] = {}
        if rest:
            for part in rest.split(","):
                k, _, v = part.partition("=")
                if k not in ("f", "d", "m", "shift") or not v.lstrip("-").isdigit():
                    raise ParameterError(f"bad weak-key parameter {part!r}")
                kv[k] = int(v)
        d_default = kv.get("d", 1)
        if family == 1:
            return cls(1, f=kv.get("f"), d=d_default, l_shift=kv.get("shift", 0))
        if family == 2:
            return cls(2, d=d_default, m=kv.get("m"))
        return cls(3, m=kv.get("m"))


def _phi_map(positions, d: int, l_shift: int, r: int) -> tuple[int, ...]:
    """Rotate by l_shift, then send position p to p*d mod r."""
    return tuple(sorted(((p + l_shift) % r) * d % r for p in positions))


def gen_type1(params: SystemParams, f: int, d: int, l_shift: int, seed: bytes) -> PrivateKey:
    """One block with f support positions at constant step d plus random fill."""
    r, w2 = params.r, params.w2
    if not 2 <= f <= w2:
        raise ParameterError(f"f must be in [2, {w2}], got {f}")
    if not 1 <= d <= r // 2:
        raise ParameterError(f"d must be in [1, {r // 2}], got {d}")
    if not 0 <= l_shift < r:
        raise ParameterError(f"shift must be in [0, {r}), got {l_shift}")
    ring = params.ring
    stream = XofStream(TAG_WEAK, [seed, bytes([1])])
    weak_index = stream.read(1)[0] & 1
    for _ in range(_RESAMPLE_BUDGET):
        # run on positions 0..f-1; random section disjoint on f..r-1
        fill = sample_fixed_weight(stream, r - f, w2 - f)
        base = list(range(f)) + [f + p for p in fill]
        mapped = _phi_map(base, d, l_shift, r)
        if len(set(mapped)) == w2:
            structured = SparsePoly(ring, mapped)
            break
    else:
        raise BudgetExhaustedError("type-1 position map kept colliding")
    free = SparsePoly(ring, sample_fixed_weight(stream, r, w2))
    blocks = (structured, free) if weak_index == 0 else (free, structured)
    return PrivateKey(h0=blocks[0], h1=blocks[1], sigma=sample_sigma(seed, params))


def gen_type2(params: SystemParams, d: int, m: int, seed: bytes) -> PrivateKey:
    """One block whose spectrum multiplicity at distance d is exactly m."""
    r, w2 = params.r, params.w2
    if not 1 <= m <= w2 - 1:
        raise ParameterError(f"m must be in [1, {w2 - 1}], got {m}")
    if not 1 <= d <= r // 2:
        raise ParameterError(f"d must be in [1, {r // 2}], got {d}")
    ring = params.ring
    stream = XofStream(TAG_WEAK, [seed, bytes([2])])
    weak_index = stream.read(1)[0] & 1
    for _ in range(_RESAMPLE_BUDGET):
        start = _draw_index(stream, r)
        chain = {(start + j * d) % r for j in range(m + 1)}
        if len(chain) != m + 1:
            continue
        support = set(chain)
        while len(support) < w2:
            support.add(_draw_index(stream, r))
        block = SparsePoly.from_indices(ring, support)
        if spectrum(block, r // 2).mult[d] == m:
            structured = block
            break
    else:
        raise BudgetExhaustedError(
            f"no weight-{w2} block with multiplicity exactly {m} at d={d} "
            f"within {_RESAMPLE_BUDGET} attempts")
    free = SparsePoly(ring, sample_fixed_weight(stream, r, w2))
    blocks = (structured, free) if weak_index == 0 else (free, structured)
    return PrivateKey(h0=blocks[0], h1=blocks[1], sigma=sample_sigma(seed, params))


def gen_type3(params: SystemParams, m: int, seed: bytes) -> PrivateKey:
    """Blocks where a rotation of h1 matches h0 in exactly m support positions."""
    r, w2 = params.r, params.w2
    if not 1 <= m <= w2:
        raise ParameterError(f"m must be in [1, {w2}], got {m}")
    ring = params.ring
    stream = XofStream(TAG_WEAK, [seed, bytes([3])])
    for _ in range(_RESAMPLE_BUDGET):
        h0 = SparsePoly(ring, sample_fixed_weight(stream, r, w2))
        picked = sample_fixed_weight(stream, w2, m)
        shared = [h0.support[i] for i in picked]
        rot = _draw_index(stream, r)
        support = {(p + rot) % r for p in shared}
        h0_dense = h0.to_dense()
        while len(support) < w2:
            cand = _draw_index(stream, r)
            if cand in support:
                continue
            if (h0_dense.bits >> ((cand - rot) % r)) & 1:
                continue  # would inflate the overlap at the planted alignment
            support.add(cand)
        h1 = SparsePoly.from_indices(ring, support)
        align = (-rot) % r
        if h0_dense.star(h1.to_dense().shift(align)).weight() == m:
            return PrivateKey(h0=h0, h1=h1, sigma=sample_sigma(seed, params))
    raise BudgetExhaustedError("type-3 overlap kept colliding")


def gen_psi_d_error(params: SystemParams, d: int, seed: bytes) -> ErrorPair:
    """Error with all weight in the first half: t/2 disjoint pairs at distance d."""
    r, t = params.r, params.t
    if t % 2 != 0:
        raise ParameterError("crafted pair errors need an even t")
    if not 1 <= d <= r // 2:
        raise ParameterError(f"d must be in [1, {r // 2}], got {d}")
    ring = params.ring
    stream = XofStream(TAG_WEAK, [seed, bytes([4]), d.to_bytes(4, "big")])
    for _ in range(_RESAMPLE_BUDGET):
        used: set[int] = set()
        ok = True
        for _ in range(t // 2):
            for _ in range(_RESAMPLE_BUDGET):
                p = _draw_index(stream, r)
                q = (p + d) % r
                if p not in used and q not in used and p != q:
                    used.add(p)
                    used.add(q)
                    break
            else:
                ok = False
                break
        if ok:
            return ErrorPair(e0=SparsePoly.from_indices(ring, used),
                             e1=SparsePoly(ring, ()))
    raise BudgetExhaustedError("could not place disjoint distance-d pairs")


# -- exact key-space counting -------------------------------------------------

def _comb(n: int, k: int) -> int:
    """Binomial with the convention C(n, k) = 0 outside 0 <= k <= n."""
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


@dataclass(frozen=True)
class BigCount:
    """Exact nonnegative count with a log2 view."""

    value: int

    @property
    def log2(self) -> float:
        if self.value == 0:
            return float("-inf")
        return math.log2(self.value)


def count_type1(params: SystemParams, f: int) -> BigCount:
    """2 r floor(r/2) C(r-f, w/2-f): size bound of the type-1 family."""
    r, w2 = params.r, params.w2
    if not 0 <= f <= w2:
        raise ParameterError(f"f must be in [0, {w2}], got {f}")
    return BigCount(2 * r * (r // 2) * _comb(r - f, w2 - f))


def eta_type1(params: SystemParams, f: int) -> float:
    """log2 of the type-1 key fraction (single-block normalization C(r, w/2))."""
    num = count_type1(params, f)
    if num.value == 0:
        return float("-inf")
    return num.log2 - math.log2(_comb(params.r, params.w2))


def count_type2_upper(params: SystemParams, m: int, s: int) -> BigCount:
    """Run-structure bound for blocks of s zero-runs and s one-runs.

    Sums (o1 + z1) C(w/2 - o1 - 1, s - 2) C(r - w/2 - z1 - 1, s - 2) over
    z1 in [1, r - w + m + 1] and o1 in [1, m + 1], times 2 floor(r/2).
    """
    r, w, w2 = params.r, params.w, params.w2
    if s < 2:
        raise ParameterError(f"s must be >= 2, got {s}")
    if not 1 <= m <= w2 - 1:
        raise ParameterError(f"m must be in [1, {w2 - 1}], got {m}")
    ones_total = sum(_comb(w2 - o1 - 1, s - 2) for o1 in range(1, m + 2))
    ones_weighted = sum(o1 * _comb(w2 - o1 - 1, s - 2) for o1 in range(1, m + 2))
    total = 0
    for z1 in range(1, r - w + m + 2):
        zc = _comb(r - w2 - z1 - 1, s - 2)
        if zc:
            total += zc * (ones_weighted + z1 * ones_total)
    return BigCount(2 * (r // 2) * total)


def count_type2_upper_total(params: SystemParams, m: int, s_max: int) -> BigCount:
    """Sum of the per-s bounds for s = 2..s_max (convenience wrapper)."""
    return BigCount(sum(count_type2_upper(params, m, s).value
                        for s in range(2, s_max + 1)))


def count_type3_upper(params: SystemParams, m: int) -> BigCount:
    """r C(w/2, m) C(r-m, w/2-m): size bound of the type-3 family."""
    r, w2 = params.r, params.w2
    if not 0 <= m <= w2:
        raise ParameterError(f"m must be in [0, {w2}], got {m}")
    return BigCount(r * _comb(w2, m) * _comb(r - m, w2 - m))


def eta_type3(params: SystemParams, m: int) -> float:
    """log2 of the type-3 key fraction (single-block normalization)."""
    num = count_type3_upper(params, m)
    if num.value == 0:
        return float("-inf")
    return num.log2 - math.log2(_comb(params.r, params.w2))


# -- spectrum-based reconstruction --------------------------------------------

def reconstruct_from_spectrum(spec: DistanceSpectrum, target_weight: int,
                              r: int) -> SparsePoly | None:
    """Search for a support whose spectrum matches, up to rotation/reflection.

    Places the first two positions at 0 and the smallest spectral distance,
    then extends position by position, consuming multiplicities from the
    remaining multiset and backtracking from dead ends.  Returns None when no
    support realizes the spectrum.
    """
    if spec.U != r // 2:
        raise ParameterError("reconstruction needs the complete spectrum (U = floor(r/2))")
    total = sum(spec.mult.values())
    if total != target_weight * (target_weight - 1) // 2:
        return None
    if target_weight == 0:
        return SparsePoly(RingParams(r), ())
    if target_weight == 1:
        return SparsePoly(RingParams(r), (0,))
    remaining = dict(spec.mult)
    existing = sorted(d for d, mcount in spec.mult.items() if mcount > 0)
    if not existing:
        return None
    d1 = existing[0]
    remaining[d1] -= 1
    placed = [0, d1]

    # Positions beyond the anchored pair are enumerated in ascending order so
    # every candidate set is visited exactly once (not once per permutation).
    def construct(min_next: int) -> bool:
        if len(placed) == target_weight:
            return True
        for cand in range(min_next, r):
            if cand == d1:
                continue
            consumed = 0
            ok = True
            for p in placed:
                dd = distance(cand, p, r)
                if remaining.get(dd, 0) <= 0:
                    ok = False
                    break
                remaining[dd] -= 1
                consumed += 1
            if ok:
                placed.append(cand)
                if construct(cand + 1):
                    return True
                placed.pop()
            for p in placed[:consumed]:
                remaining[distance(cand, p, r)] += 1
        return False

    if construct(1):
        return SparsePoly.from_indices(RingParams(r), placed)
    return None


def canonical_orbit(support: tuple[int, ...], r: int) -> tuple[int, ...]:
    """Canonical representative of a support under rotation and reflection."""
    best = None
    for base in (support, tuple((-p) % r for p in support)):
        for p in base:
            rotated = tuple(sorted((q - p) % r for q in base))
            if best is None or rotated < best:
                best = rotated
    return best
