"""Pulse-shaping multicarrier modulator/demodulator.

Sampling period is fixed to 1, so every Doppler quantity is carried as a
normalized frequency in cycles per sample.
"""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class MCConfig:
    """Frame geometry and transmit/receive pulses.

    Parameters
    ----------
    K : int
        Number of subcarriers.
    N : int
        Symbol duration in samples (``N >= K``).
    L : int
        MC symbols per block (even).
    g, gamma : ndarray
        Transmit and receive pulses as finite sample sequences starting at
        ``n = 0``. ``gamma`` is supported on ``{0, ..., L_gamma}`` with
        ``L_gamma = len(gamma) - 1``.
    """

    K: int
    N: int
    L: int
    g: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("K", "N", "L"):
            v = getattr(self, name)
            if int(v) != v or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.N < self.K:
            raise ValueError(f"N={self.N} must be >= K={self.K}")
        if self.L % 2:
            raise ValueError(f"L={self.L} must be even")
        g = np.asarray(self.g, dtype=complex).ravel()
        gamma = np.asarray(self.gamma, dtype=complex).ravel()
        if g.size == 0 or gamma.size == 0:
            raise ValueError("pulses must be non-empty")
        g.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "gamma", gamma)

    @property
    def L_gamma(self):
        return self.gamma.size - 1

    @property
    def N_r(self):
        """Receive-window length ``(L-1) N + L_gamma + 1``."""
        return (self.L - 1) * self.N + self.L_gamma + 1

    def key(self):
        """Hashable identity used for caching derived quantities."""
        return (self.K, self.N, self.L, self.g.tobytes(), self.gamma.tobytes())

    @property
    def cp_length(self):
        return self.N - self.K

    @property
    def is_cp_ofdm(self):
        ref = make_cp_ofdm(self.K, self.N, self.L)
        return (self.g.shape == ref.g.shape and self.gamma.shape == ref.gamma.shape
                and np.array_equal(self.g, ref.g) and np.array_equal(self.gamma, ref.gamma))


def make_cp_ofdm(K, N, L):
    """CP-OFDM pulse pair: rectangular ``g`` of length N, receive pulse
    ``1/K`` on the last K samples of the symbol."""
    if int(N) < int(K):
        raise ValueError(f"N={N} must be >= K={K}")
    g = np.ones(N)
    gamma = np.zeros(N)
    gamma[N - K:] = 1.0 / K
    return MCConfig(K, N, L, g, gamma)


def _check_grid(grid, cfg):
    grid = np.asarray(grid)
    if grid.shape != (cfg.L, cfg.K):
        raise ValueError(f"symbol grid shape {grid.shape} does not match (L, K) = {(cfg.L, cfg.K)}")
    return grid


def modulate(grid, cfg):
    """Transmit signal ``s[n] = sum_{l,k} a[l,k] g[n-lN] exp(j2pi k (n-lN)/K)``
    on ``n = 0, ..., N_r - 1``."""
    a = _check_grid(grid, cfg)
    K, N, Lg = cfg.K, cfg.N, cfg.g.size
    n = np.arange(Lg)
    # per-symbol multicarrier waveform is K-periodic in n
    wave = K * np.fft.ifft(a, axis=1)[:, n % K] * cfg.g
    s = np.zeros(cfg.N_r, dtype=complex)
    for l in range(cfg.L):
        start = l * N
        stop = min(start + Lg, s.size)
        if stop > start:
            s[start:stop] += wave[l, :stop - start]
    return s


def demodulate(r, cfg):
    """Demodulated symbols ``r[l,k] = sum_n r[n] gamma*[n-lN] exp(-j2pi k (n-lN)/K)``."""
    r = np.asarray(r)
    if r.ndim != 1 or r.size < cfg.N_r:
        raise ValueError(f"receive signal must have at least N_r={cfg.N_r} samples")
    K, N = cfg.K, cfg.N
    Lgam = cfg.gamma.size
    idx = np.arange(cfg.L)[:, None] * N + np.arange(Lgam)[None, :]
    seg = r[idx] * np.conj(cfg.gamma)[None, :]
    # fold onto K samples before the K-point DFT
    pad = (-Lgam) % K
    seg = np.pad(seg, ((0, 0), (0, pad))).reshape(cfg.L, -1, K).sum(axis=1)
    return np.fft.fft(seg, axis=1)


def cross_ambiguity(cfg, m, xi):
    """``A(m, xi) = sum_n gamma[n] g*[n-m] exp(-j2pi xi n)``; zero without overlap."""
    n = np.arange(cfg.gamma.size)
    gi = n - int(m)
    ok = (gi >= 0) & (gi < cfg.g.size)
    if not ok.any():
        return 0j
    n = n[ok]
    return complex(np.sum(cfg.gamma[n] * np.conj(cfg.g[gi[ok]]) * np.exp(-2j * np.pi * xi * n)))


def ambiguity_row(cfg, m, n_freq=None):
    """``A(m, j / n_freq)`` for ``j = 0, ..., n_freq - 1`` via one FFT
    (``n_freq`` defaults to ``N_r``)."""
    n_freq = cfg.N_r if n_freq is None else n_freq
    n = np.arange(cfg.gamma.size)
    gi = n - int(m)
    ok = (gi >= 0) & (gi < cfg.g.size)
    x = np.zeros(cfg.gamma.size, dtype=complex)
    x[ok] = cfg.gamma[n[ok]] * np.conj(cfg.g[gi[ok]])
    pad = (-x.size) % n_freq
    x = np.pad(x, (0, pad)).reshape(-1, n_freq).sum(axis=0)
    return np.fft.fft(x)
