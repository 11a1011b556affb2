"""Data chain: rate-1/2 convolutional code, block interleaver, Gray 4-QAM.

One codeword fills one interleaver block: ``rows * cols`` coded bits, i.e.
``rows * cols / 2 - (constraint - 1)`` information bits plus flush bits.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import comb, erfc

SQRT1_2 = 1 / np.sqrt(2)


@dataclass(frozen=True)
class CodecConfig:
    generators: tuple = (0o133, 0o171)
    constraint: int = 7
    rows: int = 32
    cols: int = 16
    soft: bool = False

    def __post_init__(self):
        if len(self.generators) != 2:
            raise ValueError("rate-1/2 code needs exactly two generators")
        if (self.rows * self.cols) % 2:
            raise ValueError("interleaver block must hold whole code symbols")
        if self.info_bits < 1:
            raise ValueError("interleaver block too small for the trellis")

    @property
    def block_bits(self):
        return self.rows * self.cols

    @property
    def info_bits(self):
        return self.block_bits // 2 - (self.constraint - 1)

    @property
    def n_states(self):
        return 1 << (self.constraint - 1)


def _taps(cfg):
    # bit j of the generator taps the input delayed by (K-1-j)
    K = cfg.constraint
    return [np.array([(g >> (K - 1 - d)) & 1 for d in range(K)], dtype=np.uint8)
            for g in cfg.generators]


def conv_encode(bits, cfg=CodecConfig()):
    """Encode rows of ``bits`` (shape ``(B, n)``), appending flush zeros.

    Output has shape ``(B, 2 (n + K - 1))`` with the two generator outputs
    interleaved per step.
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    K = cfg.constraint
    u = np.concatenate([bits, np.zeros((bits.shape[0], K - 1), np.uint8)], axis=1)
    padded = np.concatenate([np.zeros((bits.shape[0], K - 1), np.uint8), u], axis=1)
    out = np.empty((bits.shape[0], u.shape[1], 2), dtype=np.uint8)
    for o, tap in enumerate(_taps(cfg)):
        acc = np.zeros(u.shape, dtype=np.uint8)
        for d in range(K):
            if tap[d]:
                acc ^= padded[:, K - 1 - d:K - 1 - d + u.shape[1]]
        out[:, :, o] = acc
    return out.reshape(bits.shape[0], -1)


def _trellis(cfg):
    """Next state and the two output bits for every (state, input).

    State holds the previous ``K-1`` inputs, most recent in the top bit.
    """
    K = cfg.constraint
    ns = cfg.n_states
    taps = _taps(cfg)
    nxt = np.empty((ns, 2), dtype=np.int64)
    outs = np.empty((ns, 2, 2), dtype=np.uint8)
    for s in range(ns):
        hist = [(s >> (K - 2 - d)) & 1 for d in range(K - 1)]  # delays 1..K-1
        for b in (0, 1):
            window = [b] + hist
            for o, tap in enumerate(taps):
                outs[s, b, o] = int(np.dot(tap, window)) & 1
            nxt[s, b] = (b << (K - 2)) | (s >> 1)
    return nxt, outs


def viterbi_decode(metrics, cfg=CodecConfig()):
    """Maximum-likelihood decoding of terminated codewords.

    Parameters
    ----------
    metrics : ndarray, shape (B, 2 T)
        Per coded bit, a real value whose sign favors bit 0 when positive
        (hard decisions enter as +-1, soft ones as scaled LLRs).

    Returns
    -------
    ndarray, shape (B, T - K + 1)
        Decoded information bits with flush bits removed.
    """
    metrics = np.atleast_2d(np.asarray(metrics, dtype=float))
    B, n = metrics.shape
    T = n // 2
    nxt, outs = _trellis(cfg)
    ns = cfg.n_states
    sgn = 1.0 - 2.0 * outs.astype(float)  # (ns, 2, 2)
    # predecessor table: each state has two (prev_state, input) entries
    prev = [[] for _ in range(ns)]
    for s in range(ns):
        for b in (0, 1):
            prev[nxt[s, b]].append((s, b))
    ps = np.array([[p[0] for p in prev[s]] for s in range(ns)])
    pb = np.array([[p[1] for p in prev[s]] for s in range(ns)])
    branch_sign = sgn[ps, pb]  # (ns, 2 pred, 2 outputs)
    pm = np.full((B, ns), -np.inf)
    pm[:, 0] = 0.0
    choice = np.empty((T, B, ns), dtype=np.uint8)
    m2 = metrics.reshape(B, T, 2)
    for t in range(T):
        bm = np.einsum("bo,spo->bsp", m2[:, t], branch_sign)
        cand = pm[:, ps] + bm
        c = np.argmax(cand, axis=2).astype(np.uint8)
        choice[t] = c
        pm = np.take_along_axis(cand, c[..., None].astype(np.int64), axis=2)[..., 0]
    state = np.zeros(B, dtype=np.int64)  # terminated in state 0
    bits = np.empty((B, T), dtype=np.uint8)
    rows = np.arange(B)
    for t in range(T - 1, -1, -1):
        c = choice[t, rows, state]
        bits[:, t] = pb[state, c]
        state = ps[state, c]
    return bits[:, :T - (cfg.constraint - 1)]


def interleaver_perm(cfg=CodecConfig()):
    """Row-in/column-out: written row by row, read column by column."""
    return np.arange(cfg.block_bits).reshape(cfg.rows, cfg.cols).T.ravel()


def interleave(x, cfg=CodecConfig()):
    x = np.asarray(x)
    return x.reshape(-1, cfg.block_bits)[:, interleaver_perm(cfg)].reshape(x.shape)


def deinterleave(x, cfg=CodecConfig()):
    x = np.asarray(x)
    out = np.empty_like(x.reshape(-1, cfg.block_bits))
    out[:, interleaver_perm(cfg)] = x.reshape(-1, cfg.block_bits)
    return out.reshape(x.shape)


def qpsk_map(bits):
    """Gray 4-QAM with unit energy: bit pair ``(b0, b1)`` sets the signs of
    the real and imaginary parts."""
    b = np.asarray(bits, dtype=np.uint8).reshape(-1, 2)
    return ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1])) * SQRT1_2


def qpsk_hard(symbols):
    s = np.asarray(symbols).ravel()
    return np.stack([s.real < 0, s.imag < 0], axis=1).astype(np.uint8).ravel()


def qpsk_soft(symbols):
    """Max-log LLR up to a common positive scale (exact for 4-QAM)."""
    s = np.asarray(symbols).ravel()
    return np.stack([s.real, s.imag], axis=1).ravel()


def qpsk_quantize(symbols):
    s = np.asarray(symbols)
    return (np.where(s.real < 0, -1.0, 1.0) + 1j * np.where(s.imag < 0, -1.0, 1.0)) * SQRT1_2


def encode_chain(bits, cfg=CodecConfig()):
    """Information bits (a multiple of ``cfg.info_bits``) to 4-QAM symbols."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % cfg.info_bits:
        raise ValueError(f"bit count {bits.size} is not a multiple of {cfg.info_bits}")
    code = conv_encode(bits.reshape(-1, cfg.info_bits), cfg)
    return qpsk_map(interleave(code, cfg).ravel())


def decode_chain(symbols, cfg=CodecConfig(), soft=None):
    """Inverse of :func:`encode_chain` for equalized (soft) symbols."""
    soft = cfg.soft if soft is None else soft
    s = np.asarray(symbols).ravel()
    if (2 * s.size) % cfg.block_bits:
        raise ValueError(f"{s.size} symbols do not fill whole interleaver blocks")
    if soft:
        m = qpsk_soft(s)
    else:
        m = 1.0 - 2.0 * qpsk_hard(s).astype(float)
    m = deinterleave(m.reshape(-1, cfg.block_bits), cfg)
    return viterbi_decode(m, cfg).ravel()


def symbols_per_block(cfg=CodecConfig()):
    return cfg.block_bits // 2


def ber(tx_bits, rx_bits):
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.size != rx.size:
        raise ValueError("bit sequences differ in length")
    if tx.size == 0:
        return 0.0
    return float(np.mean(tx != rx))


MSE_FLOOR_DB = -100.0


def mse_normalized(H_hat, H_true, mask=None, reference=None):
    """``10 log10(sum_mask |H_hat - H|^2 / sum_mask |H|^2)``.

    ``reference`` replaces the denominator, e.g. by an ensemble mean of the
    channel energy. Results are floored at ``MSE_FLOOR_DB``.
    """
    H_hat = np.asarray(H_hat)
    H_true = np.asarray(H_true)
    mask = np.ones(H_true.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    err = float(np.sum(np.abs(H_hat[mask] - H_true[mask]) ** 2))
    den = float(np.sum(np.abs(H_true[mask]) ** 2)) if reference is None else reference
    if err == 0.0:
        return MSE_FLOOR_DB
    return max(10 * math.log10(err / den), MSE_FLOOR_DB)


# Information-bit weights of the (133,171) code at distances 10, 12, 14, 16, 18
_SPECTRUM_133_171 = {10: 36, 12: 211, 14: 1404, 16: 11633, 18: 77433}


def hard_union_bound(es_n0_db, terms=_SPECTRUM_133_171):
    """Union bound on the hard-decision Viterbi BER for the (133,171) code
    with Gray 4-QAM at the given ``Es/N0`` (two coded bits per symbol)."""
    ec_n0 = 10 ** (es_n0_db / 10) / 2
    p = 0.5 * erfc(math.sqrt(ec_n0))
    total = 0.0
    for d, w in terms.items():
        pd = sum(comb(d, e) * p ** e * (1 - p) ** (d - e) for e in range(d // 2 + 1, d + 1))
        if d % 2 == 0:
            pd += 0.5 * comb(d, d // 2) * (p * (1 - p)) ** (d // 2)
        total += w * pd
    return float(total)
