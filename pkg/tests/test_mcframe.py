import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccest.mcframe import (MCConfig, ambiguity_row, cross_ambiguity, demodulate, make_cp_ofdm,
                           modulate)


def direct_modulate(a, cfg):
    s = np.zeros(cfg.N_r, dtype=complex)
    for n in range(cfg.N_r):
        for l in range(cfg.L):
            t = n - l * cfg.N
            if 0 <= t < cfg.g.size:
                for k in range(cfg.K):
                    s[n] += a[l, k] * cfg.g[t] * np.exp(2j * np.pi * k * t / cfg.K)
    return s


def direct_demodulate(r, cfg):
    out = np.zeros((cfg.L, cfg.K), dtype=complex)
    for l in range(cfg.L):
        for k in range(cfg.K):
            for t in range(cfg.gamma.size):
                out[l, k] += r[t + l * cfg.N] * np.conj(cfg.gamma[t]) * np.exp(-2j * np.pi * k * t / cfg.K)
    return out


def random_pulses(rng, K=6, N=8, L=2, lg=11, lgam=9):
    g = rng.standard_normal(lg) + 1j * rng.standard_normal(lg)
    gam = rng.standard_normal(lgam) + 1j * rng.standard_normal(lgam)
    return MCConfig(K, N, L, g, gam)


class TestConstruction:
    def test_full_scale_geometry(self):
        cfg = make_cp_ofdm(512, 640, 16)
        assert cfg.N_r == 10240
        assert cfg.cp_length == 128

    def test_large_frame_geometry(self):
        assert make_cp_ofdm(2048, 2560, 16).N_r == 40960

    def test_zero_cp(self):
        cfg = make_cp_ofdm(4, 4, 2)
        assert cfg.cp_length == 0
        np.testing.assert_array_equal(cfg.gamma, np.full(4, 0.25))
        assert cfg.N_r == cfg.L * cfg.N

    def test_pulses(self):
        cfg = make_cp_ofdm(8, 10, 4)
        np.testing.assert_array_equal(cfg.g, np.ones(10))
        np.testing.assert_array_equal(cfg.gamma[:2], 0)
        np.testing.assert_array_equal(cfg.gamma[2:], np.full(8, 1 / 8))
        assert cfg.is_cp_ofdm

    @pytest.mark.parametrize("K,N,L", [(8, 4, 2), (8, 10, 3), (0, 4, 2)])
    def test_rejects_bad_geometry(self, K, N, L):
        with pytest.raises(ValueError):
            make_cp_ofdm(K, N, L) if K else MCConfig(K, N, L, np.ones(4), np.ones(4))

    def test_pulses_are_read_only(self):
        cfg = make_cp_ofdm(4, 5, 2)
        with pytest.raises(ValueError):
            cfg.g[0] = 2


class TestModulate:
    def test_zero_grid(self):
        cfg = make_cp_ofdm(8, 10, 2)
        assert not np.any(modulate(np.zeros((2, 8)), cfg))

    def test_single_symbol_is_g(self):
        cfg = make_cp_ofdm(8, 10, 2)
        a = np.zeros((2, 8))
        a[0, 0] = 1
        s = modulate(a, cfg)
        np.testing.assert_allclose(s[:10], 1, atol=1e-14)
        np.testing.assert_allclose(s[10:], 0, atol=1e-14)

    def test_tone(self):
        cfg = make_cp_ofdm(4, 4, 2)
        a = np.zeros((2, 4))
        a[0, 1] = 1
        s = modulate(a, cfg)
        np.testing.assert_allclose(s[:4], np.exp(1j * np.pi * np.arange(4) / 2), atol=1e-14)
        np.testing.assert_allclose(s[4:], 0, atol=1e-14)

    def test_matches_direct_sum_general_pulses(self):
        rng = np.random.default_rng(0)
        cfg = random_pulses(rng)
        a = rng.standard_normal((cfg.L, cfg.K)) + 1j * rng.standard_normal((cfg.L, cfg.K))
        np.testing.assert_allclose(modulate(a, cfg), direct_modulate(a, cfg), atol=1e-11)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            modulate(np.zeros((3, 8)), make_cp_ofdm(8, 10, 2))


class TestDemodulate:
    def test_zero(self):
        cfg = make_cp_ofdm(8, 10, 2)
        assert not np.any(demodulate(np.zeros(cfg.N_r), cfg))

    def test_single_tone(self):
        cfg = make_cp_ofdm(8, 10, 2)
        k0 = 3
        r = np.zeros(cfg.N_r, dtype=complex)
        n = np.arange(10)
        r[:10] = np.exp(2j * np.pi * k0 * n / 8)
        out = demodulate(r, cfg)
        expect = np.zeros(8)
        expect[k0] = 1
        np.testing.assert_allclose(out[0], expect, atol=1e-13)

    def test_matches_direct_sum_general_pulses(self):
        rng = np.random.default_rng(1)
        cfg = random_pulses(rng)
        r = rng.standard_normal(cfg.N_r) + 1j * rng.standard_normal(cfg.N_r)
        np.testing.assert_allclose(demodulate(r, cfg), direct_demodulate(r, cfg), atol=1e-11)

    def test_short_input(self):
        cfg = make_cp_ofdm(8, 10, 2)
        with pytest.raises(ValueError):
            demodulate(np.zeros(cfg.N_r - 1), cfg)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6).map(lambda x: 2 ** x), st.integers(0, 8), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_cp_ofdm_perfect_reconstruction(K, cp, half_L, seed):
    cfg = make_cp_ofdm(K, K + cp, 2 * half_L)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((cfg.L, K)) + 1j * rng.standard_normal((cfg.L, K))
    out = demodulate(modulate(a, cfg), cfg)
    assert np.linalg.norm(out - a) <= 1e-10 * np.linalg.norm(a)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    cfg = random_pulses(rng)
    a, b = (rng.standard_normal((cfg.L, cfg.K)) + 1j * rng.standard_normal((cfg.L, cfg.K)) for _ in range(2))
    c = complex(rng.standard_normal(), rng.standard_normal())
    lhs = modulate(a + c * b, cfg)
    rhs = modulate(a, cfg) + c * modulate(b, cfg)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)
    r, q = (rng.standard_normal(cfg.N_r) + 1j * rng.standard_normal(cfg.N_r) for _ in range(2))
    lhs = demodulate(r + c * q, cfg)
    rhs = demodulate(r, cfg) + c * demodulate(q, cfg)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


class TestAmbiguity:
    def test_origin(self):
        assert cross_ambiguity(make_cp_ofdm(16, 20, 2), 0, 0.0) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("m", [0, 1, 2, 4])
    def test_cp_absorbs_delay(self, m):
        assert cross_ambiguity(make_cp_ofdm(16, 20, 2), m, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_no_overlap(self):
        cfg = make_cp_ofdm(16, 20, 2)
        assert cross_ambiguity(cfg, 40, 0.1) == 0
        assert cross_ambiguity(cfg, -25, 0.0) == 0

    def test_row_matches_pointwise(self):
        rng = np.random.default_rng(2)
        cfg = random_pulses(rng)
        for m in (-3, 0, 2, 5):
            row = ambiguity_row(cfg, m, 16)
            pts = [cross_ambiguity(cfg, m, j / 16) for j in range(16)]
            np.testing.assert_allclose(row, pts, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(-12, 12), st.floats(-0.5, 0.5), st.integers(0, 1000))
    def test_coarse_bound(self, m, xi, seed):
        cfg = random_pulses(np.random.default_rng(seed))
        bound = np.sum(np.abs(cfg.gamma)) * np.max(np.abs(cfg.g))
        assert abs(cross_ambiguity(cfg, m, xi)) <= bound * (1 + 1e-12)
