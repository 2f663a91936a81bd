import pytest

from bikelab import (BudgetExhaustedError, KeyCheckConfig, ParameterError,
                     custom_params, gen_type1, gen_type2, gen_type3, key_check,
                     keygen_checked, sample_private_key)
from bikelab.kem import expand_u64_seed
from bikelab.keycheck import CrossBlockIntersection, KeyVerdict, PerBlockMultiplicity
from bikelab.keys import PrivateKey
from bikelab.ring import SparsePoly

TOY = custom_params(r=1019, w=42, t=30)
T10 = KeyCheckConfig(threshold_T=10)


def seed(i: int) -> bytes:
    return expand_u64_seed(1000 + i)


class TestVerdictShape:
    def test_reason_iff_weak(self):
        with pytest.raises(ParameterError):
            KeyVerdict("Weak", None)
        with pytest.raises(ParameterError):
            KeyVerdict("Normal", CrossBlockIntersection(1, 2))

    def test_json_fields(self):
        v = KeyVerdict("Weak", PerBlockMultiplicity(0, 4, 12))
        blob = v.to_json_dict(T10)
        assert blob["verdict"] == "Weak"
        assert blob["T"] == 10
        assert blob["reason"]["kind"] == "per_block_multiplicity"


class TestKeyCheckSoundness:
    def test_type1_weak_when_f_minus_1_exceeds_t(self):
        for i in range(10):
            key = gen_type1(TOY, 12, 1 + i % 7, 0, seed(i))
            verdict = key_check(key.h0, key.h1, T10)
            assert verdict.is_weak

    def test_type2_weak_when_m_exceeds_t(self):
        for i in range(10):
            key = gen_type2(TOY, 2 + i % 5, 12, seed(i))
            assert key_check(key.h0, key.h1, T10).is_weak

    def test_type3_weak_when_m_exceeds_t(self):
        for i in range(10):
            key = gen_type3(TOY, 12, seed(i))
            verdict = key_check(key.h0, key.h1, T10)
            assert verdict.is_weak

    def test_type3_reason_is_cross_block_when_blocks_clean(self):
        # pick a seed whose blocks pass the per-block screen so the
        # intersection screen is the one that fires
        for i in range(50):
            key = gen_type3(TOY, 12, seed(i))
            verdict = key_check(key.h0, key.h1, T10)
            if isinstance(verdict.reason, CrossBlockIntersection):
                assert verdict.reason.size > 10
                return
        pytest.fail("no type-3 key exercised the intersection screen")

    def test_strictness_at_exact_threshold(self):
        # multiplicity exactly T does not trip the screen (strict >)
        key = gen_type2(TOY, 3, 10, seed(3))
        verdict = key_check(key.h0, key.h1, T10)
        if verdict.is_weak:
            # the planted block has exactly 10; a trip must come from the
            # free block or the cross screen, not the planted multiplicity
            assert not (isinstance(verdict.reason, PerBlockMultiplicity)
                        and verdict.reason.multiplicity == 10)

    def test_rotation_invariance(self):
        key = gen_type1(TOY, 12, 3, 0, seed(4))
        k = 77
        rot = PrivateKey(
            h0=SparsePoly(TOY.ring, tuple(sorted((p + k) % TOY.r for p in key.h0.support))),
            h1=SparsePoly(TOY.ring, tuple(sorted((p + k) % TOY.r for p in key.h1.support))),
            sigma=key.sigma)
        assert key_check(key.h0, key.h1, T10).is_weak == \
            key_check(rot.h0, rot.h1, T10).is_weak

    def test_per_block_screen_survives_independent_rotations(self):
        # spectra are rotation invariant, so a per-block trip cannot be
        # rotated away even when the blocks rotate by different amounts
        key = gen_type2(TOY, 4, 12, seed(14))
        base = key_check(key.h0, key.h1, T10)
        assert isinstance(base.reason, PerBlockMultiplicity)
        rot = lambda h, k: SparsePoly(
            TOY.ring, tuple(sorted((p + k) % TOY.r for p in h.support)))
        moved = key_check(rot(key.h0, 31), rot(key.h1, 250), T10)
        assert moved.is_weak
        assert isinstance(moved.reason, PerBlockMultiplicity)
        assert moved.reason.multiplicity == base.reason.multiplicity

    def test_sigma_never_matters(self):
        key = sample_private_key(TOY, seed(5))
        other = PrivateKey(h0=key.h0, h1=key.h1, sigma=bytes(len(key.sigma)))
        assert key_check(key.h0, key.h1, T10) == key_check(other.h0, other.h1, T10)

    def test_weight_mismatch(self):
        h0 = SparsePoly(TOY.ring, tuple(range(TOY.w2)))
        h1 = SparsePoly(TOY.ring, tuple(range(TOY.w2 - 2)))
        with pytest.raises(ParameterError):
            key_check(h0, h1, T10)

    def test_negative_shift_exponent_reduced(self):
        # support pairs with p_j < p_k exercise the negative shift branch
        ring = TOY.ring
        h0 = SparsePoly(ring, tuple(range(0, 2 * TOY.w2, 2)))
        h1 = SparsePoly(ring, tuple(range(501, 501 + 2 * TOY.w2, 2)))
        verdict = key_check(h0, h1, KeyCheckConfig(threshold_T=TOY.w2 - 1))
        assert isinstance(verdict, KeyVerdict)


class TestKeygenChecked:
    def test_maximal_threshold_accepts_first(self, toy_params):
        cfg = KeyCheckConfig(threshold_T=toy_params.w2)
        sk, pk, rejected = keygen_checked(toy_params, seed(6), cfg)
        assert rejected == 0

    def test_t1_exhausts_budget(self, toy_params):
        # nearly every key repeats some distance, so T=1 rejects everything
        with pytest.raises(BudgetExhaustedError):
            keygen_checked(toy_params, seed(7), KeyCheckConfig(threshold_T=1), budget=20)

    def test_t1_exhausts_budget_at_full_parameters(self, l1_params):
        with pytest.raises(BudgetExhaustedError):
            keygen_checked(l1_params, seed(7), KeyCheckConfig(threshold_T=1), budget=5)

    def test_output_passes_check(self, toy_params):
        cfg = KeyCheckConfig(threshold_T=8)
        sk, pk, _ = keygen_checked(toy_params, seed(8), cfg)
        assert not key_check(sk.h0, sk.h1, cfg).is_weak

    def test_deterministic(self, toy_params):
        cfg = KeyCheckConfig(threshold_T=8)
        assert keygen_checked(toy_params, seed(9), cfg) == \
            keygen_checked(toy_params, seed(9), cfg)

    def test_acceptance_rate_band_100_seeds(self, toy_params):
        # regression band at the default threshold: nearly all first tries pass
        first_try = 0
        for i in range(100):
            _, _, rejected = keygen_checked(toy_params, seed(200 + i), T10)
            if rejected == 0:
                first_try += 1
        assert first_try >= 95

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            KeyCheckConfig(threshold_T=0)
