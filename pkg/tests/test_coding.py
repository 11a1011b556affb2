import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccest.coding import (CodecConfig, ber, conv_encode, decode_chain, deinterleave, encode_chain,
                          hard_union_bound, interleave, interleaver_perm, mse_normalized, qpsk_hard,
                          qpsk_map, qpsk_quantize, qpsk_soft, viterbi_decode)

SMALL = CodecConfig(generators=(0o5, 0o7), constraint=3, rows=4, cols=3)


def shift_register_encode(bits, gens, K):
    reg = [0] * K
    out = []
    for b in list(bits) + [0] * (K - 1):
        reg = [b] + reg[:-1]
        for g in gens:
            taps = [(g >> (K - 1 - j)) & 1 for j in range(K)]
            out.append(sum(t & r for t, r in zip(taps, reg)) % 2)
    return np.array(out, dtype=np.uint8)


class TestEncoder:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=60))
    def test_matches_shift_register(self, bits):
        cfg = CodecConfig()
        got = conv_encode(np.array([bits]), cfg)[0]
        np.testing.assert_array_equal(got, shift_register_encode(bits, cfg.generators, 7))

    def test_impulse_response_is_generators(self):
        out = conv_encode(np.array([[1, 0, 0, 0, 0, 0]]))[0]
        g0 = [int(c) for c in format(0o133, "07b")]
        g1 = [int(c) for c in format(0o171, "07b")]
        np.testing.assert_array_equal(out[0::2][:7], g0)
        np.testing.assert_array_equal(out[1::2][:7], g1)

    def test_zero_bits_zero_code(self):
        assert not conv_encode(np.zeros((2, 10), dtype=np.uint8)).any()


class TestViterbi:
    def test_brute_force_ml_small_code(self):
        rng = np.random.default_rng(0)
        words = {bits: conv_encode(np.array([bits]), SMALL)[0] for bits in itertools.product((0, 1), repeat=4)}
        for _ in range(50):
            rx = rng.integers(0, 2, 12).astype(np.uint8)
            dec = tuple(viterbi_decode(1.0 - 2.0 * rx[None], SMALL)[0])
            best = min(np.sum(w != rx) for w in words.values())
            assert np.sum(words[dec] != rx) == best

    def test_corrects_two_errors(self):
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, (1, 100)).astype(np.uint8)
        code = conv_encode(bits)
        code[0, [10, 60]] ^= 1
        np.testing.assert_array_equal(viterbi_decode(1.0 - 2.0 * code), bits)

    def test_zero_codeword(self):
        assert not viterbi_decode(np.ones((1, 40))).any()


class TestInterleaver:
    def test_row_in_column_out(self):
        cfg = CodecConfig(generators=(0o5, 0o7), constraint=3, rows=2, cols=3)
        np.testing.assert_array_equal(interleaver_perm(cfg), [0, 3, 1, 4, 2, 5])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_identity(self, seed):
        x = np.random.default_rng(seed).standard_normal((3, CodecConfig().block_bits))
        np.testing.assert_array_equal(deinterleave(interleave(x)), x)

    def test_is_permutation(self):
        assert sorted(interleaver_perm()) == list(range(512))


class TestQPSK:
    def test_unit_energy(self):
        s = qpsk_map(np.array([0, 0, 0, 1, 1, 0, 1, 1]))
        np.testing.assert_allclose(np.abs(s), 1)

    def test_gray_adjacency(self):
        pts = {b: qpsk_map(np.array(b))[0] for b in itertools.product((0, 1), repeat=2)}
        for a, b in itertools.combinations(pts, 2):
            hamming = sum(x != y for x, y in zip(a, b))
            adjacent = math.isclose(abs(pts[a] - pts[b]), math.sqrt(2))
            assert adjacent == (hamming == 1)

    def test_hard_soft_quantize(self):
        bits = np.random.default_rng(2).integers(0, 2, 40)
        s = qpsk_map(bits)
        np.testing.assert_array_equal(qpsk_hard(s), bits)
        np.testing.assert_array_equal(qpsk_soft(s) < 0, bits.astype(bool))
        np.testing.assert_allclose(qpsk_quantize(0.9 * s), s)


class TestChain:
    def test_round_trip(self):
        cfg = CodecConfig()
        bits = np.random.default_rng(3).integers(0, 2, 3 * cfg.info_bits).astype(np.uint8)
        s = encode_chain(bits)
        assert s.size == 3 * cfg.block_bits // 2
        np.testing.assert_array_equal(decode_chain(s), bits)
        np.testing.assert_array_equal(decode_chain(s, soft=True), bits)

    def test_zero_bits_constant_point(self):
        s = encode_chain(np.zeros(CodecConfig().info_bits, dtype=np.uint8))
        np.testing.assert_allclose(s, (1 + 1j) / math.sqrt(2))

    def test_rejects_partial_block(self):
        with pytest.raises(ValueError):
            encode_chain(np.zeros(7))
        with pytest.raises(ValueError):
            decode_chain(np.zeros(7))

    def test_ber_vs_union_bound(self):
        cfg = CodecConfig()
        rng = np.random.default_rng(4)
        blocks = math.ceil(1e5 / cfg.info_bits)
        bits = rng.integers(0, 2, blocks * cfg.info_bits).astype(np.uint8)
        s = encode_chain(bits)
        sigma2 = 10 ** (-6 / 10)
        r = s + math.sqrt(sigma2 / 2) * (rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size))
        measured = ber(bits, decode_chain(r))
        bound = hard_union_bound(6.0)
        print(f"BER at 6 dB: {measured:.3e}, union bound {bound:.3e}")
        assert measured <= 2 * bound


class TestMetrics:
    def test_ber(self):
        assert ber([0, 1, 1, 0], [0, 1, 0, 0]) == 0.25
        assert ber([], []) == 0.0
        with pytest.raises(ValueError):
            ber([0], [0, 1])

    def test_mse_identical_floor(self):
        H = np.ones((3, 3))
        assert mse_normalized(H, H) == -100.0

    def test_mse_zero_estimate(self):
        H = np.random.default_rng(5).standard_normal((4, 4))
        assert mse_normalized(np.zeros_like(H), H) == pytest.approx(0.0)

    def test_diagonal_only_penalty(self):
        rng = np.random.default_rng(6)
        band = rng.standard_normal((2, 8, 1, 5)) + 1j * rng.standard_normal((2, 8, 1, 5))
        est = np.zeros_like(band)
        est[..., 2] = band[..., 2]
        off = np.sum(np.abs(band) ** 2) - np.sum(np.abs(band[..., 2]) ** 2)
        expect = 10 * math.log10(off / np.sum(np.abs(band) ** 2))
        assert mse_normalized(est, band) == pytest.approx(expect)

    def test_mask_and_reference(self):
        H = np.array([1.0, 2.0])
        assert mse_normalized(np.array([0.0, 0.0]), H, mask=[True, False]) == pytest.approx(0.0)
        assert mse_normalized(np.array([0.0, 2.0]), H, reference=10.0) == pytest.approx(-10.0)
        with pytest.raises(ValueError):
            mse_normalized(H, H, mask=[False, False])

    def test_union_bound_decreasing(self):
        vals = [hard_union_bound(x) for x in (4, 6, 8)]
        assert vals[0] > vals[1] > vals[2] > 0
