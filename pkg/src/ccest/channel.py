"""Doubly selective channel synthesis and its delay-Doppler views.

The continuous-time filter cascade is not simulated. A specular path enters
the discrete impulse response through the closed-form delay kernel
``phi`` and a complex exponential in time.
"""
from dataclasses import dataclass

import numpy as np

from .mcframe import ambiguity_row

_LIMIT_STEP = 1e-6


@dataclass(frozen=True)
class FilterModel:
    """Interpolation/anti-aliasing filter pair, either ideal lowpass
    (``rolloff=None``) or root-raised-cosine with the given roll-off."""

    rolloff: float = None

    def __post_init__(self):
        if self.rolloff is not None and not (0 < self.rolloff <= 1):
            raise ValueError(f"roll-off must lie in (0, 1], got {self.rolloff}")

    @classmethod
    def ideal(cls):
        return cls(None)

    @classmethod
    def rrc(cls, rolloff):
        return cls(float(rolloff))

    @property
    def decay_order(self):
        """Exponent ``s`` of the polynomial decay of ``|phi|``."""
        return 1 if self.rolloff is None else 3


@dataclass(frozen=True)
class ScattererPath:
    delay_norm: float
    doppler_norm: float
    gain: complex


@dataclass(frozen=True)
class DiffuseSpec:
    """Brick-shaped diffuse scattering over delays ``0..delay_span-1`` and
    Doppler ``[-doppler_max, doppler_max]`` (cycles/sample).

    ``power_db_below_specular`` is measured relative to ``reference_power``.
    """

    delay_span: int
    doppler_max: float
    power_db_below_specular: float = 20.0
    reference_power: float = 1.0

    def __post_init__(self):
        if self.delay_span < 1:
            raise ValueError("delay_span must be >= 1")
        if self.doppler_max < 0:
            raise ValueError("doppler_max must be >= 0")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Time-varying impulse response ``h[n, m]`` on ``n < N_r``, ``m < m_max``."""

    h: np.ndarray

    @property
    def m_max(self):
        return self.h.shape[1]

    @property
    def N_r(self):
        return self.h.shape[0]

    def __add__(self, other):
        if self.h.shape != other.h.shape:
            raise ValueError("channel shapes differ")
        return ChannelRealization(self.h + other.h)


def _rc(x, rho):
    return np.sinc(x) * np.cos(rho * np.pi * x) / (1.0 - (2.0 * rho * x) ** 2)


def phi_kernel(model, doppler_norm, x):
    """Delay leakage kernel.

    Ideal lowpass gives ``sinc(x)``; the root-raised-cosine pair gives the
    raised-cosine shape ``sinc(x) cos(rho pi x) / (1 - (2 rho x)^2)``, an
    approximation valid for moderate Doppler (hence ``doppler_norm`` is
    accepted but unused). The removable singularity at ``|2 rho x| = 1`` is
    evaluated as a symmetric limit.
    """
    x = np.asarray(x, dtype=float)
    if model.rolloff is None:
        return np.sinc(x).astype(complex)
    rho = model.rolloff
    out = np.empty(x.shape, dtype=float)
    sing = np.isclose(np.abs(2 * rho * x), 1.0, rtol=0, atol=1e-9)
    out[~sing] = _rc(x[~sing], rho)
    xs = x[sing]
    out[sing] = 0.5 * (_rc(xs + _LIMIT_STEP, rho) + _rc(xs - _LIMIT_STEP, rho))
    return out.astype(complex)


def psi_kernel(y, N_r):
    """Doppler leakage kernel ``sin(pi y) / (N_r sin(pi y / N_r))``."""
    if N_r < 1:
        raise ValueError("N_r must be >= 1")
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape, dtype=float)
    q = y / N_r
    at_period = np.isclose(q, np.round(q), rtol=0, atol=1e-12)
    at_int = np.isclose(y, np.round(y), rtol=0, atol=1e-12) & ~at_period
    rest = ~(at_period | at_int)
    qi = np.round(q[at_period]).astype(np.int64)
    out[at_period] = np.where((qi * (N_r + 1)) % 2 == 0, 1.0, -1.0)
    out[at_int] = 0.0
    yr = y[rest]
    out[rest] = np.sin(np.pi * yr) / (N_r * np.sin(np.pi * yr / N_r))
    return out if out.ndim else float(out)


def _check_paths(paths, m_max, doppler_max):
    for p in paths:
        if p.delay_norm < 0 or p.delay_norm > m_max - 1:
            raise ValueError(f"path delay {p.delay_norm} outside [0, {m_max - 1}]")
        lim = 0.5 if doppler_max is None else doppler_max
        if abs(p.doppler_norm) > lim + 1e-15:
            raise ValueError(f"path Doppler {p.doppler_norm} exceeds {lim}")


def synth_specular(paths, model, cfg, m_max, doppler_max=None):
    """``h[n,m] = sum_p eta_p phi(m - tau_p) exp(j 2 pi nu_p n)``."""
    _check_paths(paths, m_max, doppler_max)
    h = np.zeros((cfg.N_r, m_max), dtype=complex)
    if not paths:
        return ChannelRealization(h)
    n = np.arange(cfg.N_r)
    m = np.arange(m_max)
    tau = np.array([p.delay_norm for p in paths])
    nu = np.array([p.doppler_norm for p in paths])
    eta = np.array([p.gain for p in paths], dtype=complex)
    delay_part = np.stack([phi_kernel(model, v, m - t) for t, v in zip(tau, nu)])
    time_part = np.exp(2j * np.pi * np.outer(nu, n))
    h = (time_part * eta[:, None]).T @ delay_part
    return ChannelRealization(h)


def synth_diffuse(spec, rng, cfg):
    """Diffuse part as a lattice of i.i.d. complex Gaussian scatterers at
    integer delays and canonical Doppler bins ``d / N_r``.

    The lattice is leakage-free, so the realized scattering function is flat
    over the brick. ``power_db_below_specular = inf`` disables the part.
    """
    N_r = cfg.N_r
    h = np.zeros((N_r, spec.delay_span), dtype=complex)
    if np.isinf(spec.power_db_below_specular):
        return ChannelRealization(h)
    d_max = int(np.floor(spec.doppler_max * N_r + 1e-9))
    d = np.arange(-d_max, d_max + 1)
    power = spec.reference_power * 10.0 ** (-spec.power_db_below_specular / 10.0)
    var = power / (d.size * spec.delay_span)
    eta = np.sqrt(var / 2) * (rng.standard_normal((d.size, spec.delay_span))
                              + 1j * rng.standard_normal((d.size, spec.delay_span)))
    n = np.arange(N_r)
    h = np.exp(2j * np.pi * np.outer(n, d) / N_r) @ eta
    return ChannelRealization(h)


def spreading(h):
    """Discrete delay-Doppler spreading function, shape ``(m_max, N_r)``:
    ``S[m,i] = (1/N_r) sum_n h[n,m] exp(-j 2 pi i n / N_r)``."""
    hh = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    return np.fft.fft(hh, axis=0).T / hh.shape[0]


def inverse_spreading(S):
    S = np.asarray(S)
    return ChannelRealization((np.fft.ifft(S, axis=1) * S.shape[1]).T)


def fold_to_F(S, cfg, D=None):
    """``F[m,i] = sum_q S[m, i+qL] A*(m, (i+qL)/N_r)``.

    Returns a ``D x L`` array whose column ``c`` holds Doppler index
    ``i = c - L/2``.
    """
    S = np.asarray(S)
    N_r, L = cfg.N_r, cfg.L
    if S.shape[1] != N_r:
        raise ValueError(f"spreading function has {S.shape[1]} Doppler bins, expected N_r={N_r}")
    D = S.shape[0] if D is None else D
    if D > S.shape[0]:
        S = np.pad(S, ((0, D - S.shape[0]), (0, 0)))
    i = np.arange(-L // 2, L // 2)
    j = (i[:, None] + L * np.arange(cfg.N)[None, :]) % N_r
    F = np.empty((D, L), dtype=complex)
    for m in range(D):
        prod = S[m] * np.conj(ambiguity_row(cfg, m))
        F[m] = prod[j].sum(axis=1)
    return F


def synthesize_diagonal(F, cfg):
    """Diagonal coefficients ``H[l,k] = sum_{m,i} F[m,i] exp(-j2pi(km/K - li/L))``
    from a ``D x J`` array with Doppler index ``i = c - J/2``."""
    F = np.asarray(F)
    D, J = F.shape
    K, L = cfg.K, cfg.L
    if D > K or J > L:
        raise ValueError("coefficient support exceeds the frame")
    full = np.zeros((K, L), dtype=complex)
    i = np.arange(-J // 2, J // 2) % L
    full[:D, i] = F
    # exp(-j2pi km/K) over m, exp(+j2pi li/L) over i
    return (L * np.fft.ifft(np.fft.fft(full, axis=0), axis=1)).T


def noise_variance(signal, snr_db):
    """Per-sample noise variance that puts ``signal`` at ``snr_db``."""
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    energy = np.sum(np.abs(signal) ** 2)
    return energy / (signal.size * 10.0 ** (snr_db / 10.0))


def convolve_tv(s, h):
    """Noise-free channel output ``sum_m h[n,m] s[n-m]`` for ``n < N_r``."""
    hh = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    N_r, M = hh.shape
    s = np.asarray(s, dtype=complex)
    x = np.zeros(N_r, dtype=complex)
    ns = min(s.size, N_r)
    x[:ns] = s[:ns]
    out = np.zeros(N_r, dtype=complex)
    for m in range(M):
        out[m:] += hh[m:, m] * x[:N_r - m]
    return out


def apply_channel_awgn(s, h, snr_db, rng):
    """Pass ``s`` through ``h`` and add white complex Gaussian noise whose
    variance is set from the empirical clean-signal energy of this block."""
    clean = convolve_tv(s, h)
    var = noise_variance(clean, snr_db)
    if var == 0.0:
        return clean
    z = np.sqrt(var / 2) * (rng.standard_normal(clean.size) + 1j * rng.standard_normal(clean.size))
    return clean + z


def system_band(h, cfg, l_max=0, k_max=0):
    """Banded system channel coefficients.

    Returns ``Hb`` of shape ``(L, K, 2 l_max + 1, 2 k_max + 1)`` with
    ``Hb[l, k, dl + l_max, dk + k_max] = H[l,k; l+dl, (k+dk) mod K]``
    (zero where ``l + dl`` leaves the frame). Accepts any time-varying
    response sampled on ``n < N_r``.
    """
    hh = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    return _band_kernel(hh.T[None], cfg, l_max, k_max, contract=None)[..., 0]


def _band_kernel(resp, cfg, l_max, k_max, contract):
    """Shared machinery for the system channel in terms of time-varying
    responses.

    ``resp`` has shape ``(P, M, N_r)``: ``P`` responses over delays ``m < M``.
    For ``contract=None`` each response is a full channel and the result is
    ``(L, K, 2l_max+1, 2k_max+1, P)``. Otherwise ``contract`` is ignored by
    this helper; callers needing per-delay kernels use ``_xi``.
    """
    P, M, N_r = resp.shape
    K, N, L = cfg.K, cfg.N, cfg.L
    dls = np.arange(-l_max, l_max + 1)
    dks = np.arange(-k_max, k_max + 1)
    out = np.zeros((L, K, dls.size, dks.size, P), dtype=complex)
    kp = np.arange(K)
    for l in range(L):
        for a, dl in enumerate(dls):
            if not 0 <= l + dl < L:
                continue
            xi = _xi(resp, cfg, l, dl, dks)  # (P, M, n_dk)
            if M > K:
                raise ValueError("delay support exceeds K")
            Z = np.fft.fft(xi, n=K, axis=1)  # sum_m ... exp(-j2pi k' m / K) -> (P, K, n_dk)
            phase = np.exp(-2j * np.pi * N * kp * dl / K)
            for b, dk in enumerate(dks):
                kk = (kp + dk) % K
                out[l, :, a, b, :] = (phase[kk][:, None] * Z[:, kk, b].T)
    return out


def _xi(resp, cfg, l, dl, dks):
    """``sum_n gamma*[n] exp(j2pi n dk/K) g[n-m-dl N] resp[m, n+lN]`` for
    each response, delay ``m`` and offset ``dk``; shape ``(P, M, len(dks))``."""
    P, M, N_r = resp.shape
    K, N = cfg.K, cfg.N
    Lgam = cfg.gamma.size
    n = np.arange(Lgam)
    gidx = n[None, :] - np.arange(M)[:, None] - dl * N
    ok = (gidx >= 0) & (gidx < cfg.g.size)
    gmask = np.where(ok, cfg.g[np.clip(gidx, 0, cfg.g.size - 1)], 0)
    x = resp[:, :, l * N + n] * (np.conj(cfg.gamma) * 1)[None, None, :] * gmask[None]
    pad = (-Lgam) % K
    x = np.pad(x, ((0, 0), (0, 0), (0, pad))).reshape(P, M, -1, K).sum(axis=2)
    X = K * np.fft.ifft(x, axis=2)  # sum_n x[n] exp(+j2pi n dk / K)
    return X[:, :, np.asarray(dks) % K]


def diagonal_coefficients(h, cfg):
    """``H[l,k] = H[l,k; l,k]`` computed directly from the impulse response."""
    return system_band(h, cfg, 0, 0)[:, :, 0, 0]
