"""Decision-directed estimation of diagonal and ICI/ISI coefficients.

The channel is expanded as ``h[n,m] = sum_i T[m,i] psi_i[n]`` over the
explicit functions of a :class:`~ccest.bases.CombinedBasis`. Every system
coefficient ``H[l,k; l+dl, k']`` is linear in ``T`` through the kernel
``Xi`` computed once per (frame, basis, band).
"""
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .channel import _xi, system_band
from .coding import qpsk_quantize

_XI_CACHE = {}


@dataclass(frozen=True)
class DDConfig:
    l_max: int = 0
    k_max: int = 3
    epsilon: float = 0.2
    max_rounds: int = 9
    equalizer_iters: int = 15
    omp_iters: int = 90
    tol: float = 1e-3

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.l_max < 0 or self.k_max < 0 or self.max_rounds < 0:
            raise ValueError("band half-widths and rounds must be nonnegative")


def xi_tensor(cfg, basis, D, l_max, k_max):
    """``Xi[l, dl, i, m, dk]``: contribution of ``T[m,i]`` to
    ``H[l,k; l+dl, k+dk]`` before the ``exp(-j2pi k' m/K)`` and
    ``exp(-j2pi N k' dl/K)`` factors. Zero where ``l + dl`` leaves the frame."""
    key = (cfg.key(), basis.functions.tobytes(), D, l_max, k_max)
    hit = _XI_CACHE.get(key)
    if hit is not None:
        return hit
    J = basis.J
    resp = np.broadcast_to(basis.functions[:, None, :], (J, D, cfg.N_r))
    dks = np.arange(-k_max, k_max + 1)
    out = np.zeros((cfg.L, 2 * l_max + 1, J, D, dks.size), dtype=complex)
    for l in range(cfg.L):
        for a, dl in enumerate(range(-l_max, l_max + 1)):
            if 0 <= l + dl < cfg.L:
                out[l, a] = _xi(resp, cfg, l, dl, dks)
    if len(_XI_CACHE) > 8:
        _XI_CACHE.clear()
    _XI_CACHE[key] = out
    return out


def _phases(cfg, l_max):
    kp = np.arange(cfg.K)
    dls = np.arange(-l_max, l_max + 1)
    return np.exp(-2j * np.pi * cfg.N * np.outer(dls, kp) / cfg.K)  # (n_dl, K)


def band_from_T(T, cfg, xi, l_max, k_max):
    """Banded coefficients ``(L, K, 2l_max+1, 2k_max+1)`` from ``T`` (D x J)."""
    L, K = cfg.L, cfg.K
    ph = _phases(cfg, l_max)
    kp = np.arange(K)
    out = np.zeros((L, K, 2 * l_max + 1, 2 * k_max + 1), dtype=complex)
    for l in range(L):
        for a in range(2 * l_max + 1):
            Y = np.einsum("imb,mi->mb", xi[l, a], T)
            Z = np.fft.fft(Y, n=K, axis=0)  # (k', dk)
            for b, dk in enumerate(range(-k_max, k_max + 1)):
                kk = (kp + dk) % K
                out[l, :, a, b] = ph[a, kk] * Z[kk, b]
    return out


def reconstruct_H_from_T(T_hat, cfg, basis, band=(0, 0)):
    """Banded system coefficients of ``h[n,m] = sum_i T[m,i] psi_i[n]``."""
    T_hat = np.asarray(T_hat)
    h = (basis.functions.T @ T_hat.T)  # (N_r, D)
    return system_band(h, cfg, band[0], band[1])


def h_from_T(T_hat, basis):
    return basis.functions.T @ np.asarray(T_hat).T


@dataclass(eq=False)
class MeasurementProblem:
    operator: solvers.MeasurementOperator
    y: np.ndarray
    scale: np.ndarray
    rows: np.ndarray  # (Q, 2) positions (l, k)
    shape: tuple  # (D, J)


def build_dd_measurement(r_grid, p_ext, core, cfg, xi, l_max, k_max):
    """Measurement equation on the core set.

    Parameters
    ----------
    r_grid : ndarray (L, K)
    p_ext : ndarray (L, K)
        Known or decided symbols; only entries in ``core + V`` are read.
    core : ndarray of bool (L, K)
        Rows of the equation.
    xi : ndarray
        Output of :func:`xi_tensor` for the same band.

    Column ``(m, i)`` of the returned (normalized) operator is stacked as
    ``m J + i``.
    """
    if not np.any(core):
        raise ValueError("empty core set")
    L, K = cfg.L, cfg.K
    _, n_dl, J, D, n_dk = xi.shape
    ph = _phases(cfg, l_max)
    kp = np.arange(K)
    E = np.exp(-2j * np.pi * np.outer(kp, np.arange(D)) / K)  # (k', m)
    blocks = []
    rows = []
    for l in range(L):
        ks = np.flatnonzero(core[l])
        if ks.size == 0:
            continue
        W = np.zeros((ks.size, D, J), dtype=complex)
        for a, dl in enumerate(range(-l_max, l_max + 1)):
            if not 0 <= l + dl < L:
                continue
            for b, dk in enumerate(range(-k_max, k_max + 1)):
                kk = (ks + dk) % K
                coef = p_ext[l + dl, kk] * ph[a, kk]
                W += (coef[:, None] * E[kk])[:, :, None] * xi[l, a, :, :, b].T[None]
        blocks.append(W.reshape(ks.size, D * J))
        rows.append(np.stack([np.full(ks.size, l), ks], axis=1))
    A = np.vstack(blocks)
    rows = np.vstack(rows)
    y = np.asarray(r_grid)[rows[:, 0], rows[:, 1]]
    op = solvers.MeasurementOperator.from_matrix(A)
    nop, s = op.normalized()
    return MeasurementProblem(nop, y, s, rows, (D, J))


def ici_equalize_lsqr(H_band, r_grid, iters=15):
    """Per-symbol least-squares equalization of the ICI band by LSQR.

    Only the ``dl = 0`` slice is used; ISI is left to the noise.
    """
    H_band = np.asarray(H_band)
    L, K, n_dl, n_dk = H_band.shape
    l_max, k_max = n_dl // 2, n_dk // 2
    Hc = H_band[:, :, l_max, :]
    dks = np.arange(-k_max, k_max + 1)
    out = np.empty((L, K), dtype=complex)
    for l in range(L):
        Hl = Hc[l]

        def fwd(a, Hl=Hl):
            return sum(Hl[:, b] * np.roll(a, -dk) for b, dk in enumerate(dks))

        def adj(y, Hl=Hl):
            return sum(np.roll(np.conj(Hl[:, b]) * y, dk) for b, dk in enumerate(dks))

        op = solvers.MeasurementOperator(fwd, adj, (K, K))
        out[l], _ = solvers.lsqr(op, r_grid[l], max_iter=iters, tol=1e-14)
    return out


def one_tap(H_diag, r_grid):
    H_diag = np.asarray(H_diag)
    safe = np.where(H_diag == 0, 1.0, H_diag)
    return np.where(H_diag == 0, 0.0, np.asarray(r_grid) / safe)


def reliable_set(a_soft, pilot_mask, pilot_grid, epsilon, l_max, k_max):
    """Core set, extended pilot set and extended pilot values.

    A symbol is reliable if it is a pilot or both quadrature components of
    its soft estimate exceed ``epsilon`` in magnitude. The core set holds
    every position whose whole ``V`` neighborhood (circular in ``k``) is
    reliable; neighbors beyond the frame edge in ``l`` do not disqualify.

    Returns
    -------
    core, extended : ndarray of bool (L, K)
    values : ndarray (L, K)
        Quantized decisions with true pilots substituted.
    """
    a_soft = np.asarray(a_soft)
    L, K = a_soft.shape
    rel = pilot_mask | ((np.abs(a_soft.real) > epsilon) & (np.abs(a_soft.imag) > epsilon))
    core = np.ones((L, K), dtype=bool)
    for dl in range(-l_max, l_max + 1):
        shifted = np.ones((L, K), dtype=bool)
        lo, hi = max(0, -dl), min(L, L - dl)
        shifted[lo:hi] = rel[lo + dl:hi + dl]
        for dk in range(-k_max, k_max + 1):
            core &= np.roll(shifted, -dk, axis=1)
    ext = dilate(core, l_max, k_max) | pilot_mask
    values = np.where(pilot_mask, pilot_grid, qpsk_quantize(a_soft))
    return core, ext, values


def dilate(mask, l_max, k_max):
    L, K = mask.shape
    out = np.zeros_like(mask)
    for dl in range(-l_max, l_max + 1):
        lo, hi = max(0, -dl), min(L, L - dl)
        src = np.zeros_like(mask)
        src[lo:hi] = mask[lo:hi]
        moved = np.zeros_like(mask)
        moved[lo + dl:hi + dl] = src[lo:hi]
        for dk in range(-k_max, k_max + 1):
            out |= np.roll(moved, dk, axis=1)
    return out


@dataclass(eq=False)
class FullEstimate:
    T_hat: np.ndarray
    H_band: np.ndarray
    rounds_run: int
    reliable_fraction_per_round: list
    soft_per_round: list = field(default_factory=list, repr=False)
    band_per_round: list = field(default_factory=list, repr=False)
    core_size_per_round: list = field(default_factory=list)
    fallback_rounds: list = field(default_factory=list)


def _solve_T(prob, S):
    sol = solvers.omp(prob.operator, prob.y, min(S, prob.operator.Q, prob.operator.M))
    D, J = prob.shape
    return (sol.x_hat * prob.scale).reshape(D, J), sol


def omp_sparsity(dd, Q):
    """OMP iteration count, capped at half the number of equations so small
    round-0 problems stay overdetermined."""
    return max(1, min(dd.omp_iters, Q // 2))


def decision_directed_estimate(r_grid, pilots_grid, pilot_mask, basis, cfg, dd=DDConfig(),
                               D=None, rounds=None, sparsity=None, solver=None):
    """Iterative decision-directed estimator.

    Round 0 uses the diagonal coefficients only, with the true pilots as
    equations, and a one-tap equalizer. Each later round builds the
    equation over the core set with the full band, solves it with OMP,
    equalizes the band with LSQR and re-selects reliable symbols. Stops
    after ``dd.max_rounds`` rounds or once the banded estimate changes by
    less than ``dd.tol`` (relative Frobenius norm).

    ``sparsity`` and ``solver`` override the OMP iteration count and the
    recovery routine (a callable ``(op, y) -> SparseSolution``), which is
    how round 0 doubles as a diagonal estimator for other solvers.
    """
    r_grid = np.asarray(r_grid)
    L, K = cfg.L, cfg.K
    D = cfg.K // 4 if D is None else D
    rounds = dd.max_rounds if rounds is None else rounds
    l_max, k_max = dd.l_max, dd.k_max
    xi = xi_tensor(cfg, basis, D, l_max, k_max)
    xi0 = xi[:, l_max:l_max + 1, :, :, k_max:k_max + 1]

    def recover(prob):
        if solver is not None:
            sol = solver(prob.operator, prob.y)
            return (sol.x_hat * prob.scale).reshape(prob.shape), sol
        S = omp_sparsity(dd, prob.operator.Q) if sparsity is None else sparsity
        return _solve_T(prob, S)

    # round 0
    prob = build_dd_measurement(r_grid, pilots_grid, pilot_mask, cfg, xi0, 0, 0)
    T, _ = recover(prob)
    band = band_from_T(T, cfg, xi, l_max, k_max)
    soft = one_tap(band[:, :, l_max, k_max], r_grid)
    soft = np.where(pilot_mask, pilots_grid, soft)
    res = FullEstimate(T, band, 0, [], [soft], [band], [int(pilot_mask.sum())], [])
    core, ext, values = reliable_set(soft, pilot_mask, pilots_grid, dd.epsilon, l_max, k_max)
    res.reliable_fraction_per_round.append(float(ext.mean()))
    for r in range(1, rounds + 1):
        if core.any():
            prob = build_dd_measurement(r_grid, values, core, cfg, xi, l_max, k_max)
            res.core_size_per_round.append(int(core.sum()))
        else:
            prob = build_dd_measurement(r_grid, pilots_grid, pilot_mask, cfg, xi0, 0, 0)
            res.core_size_per_round.append(0)
            res.fallback_rounds.append(r)
        T, _ = recover(prob)
        new_band = band_from_T(T, cfg, xi, l_max, k_max)
        soft = ici_equalize_lsqr(new_band, r_grid, dd.equalizer_iters)
        soft = np.where(pilot_mask, pilots_grid, soft)
        change = np.linalg.norm(new_band - band) / max(np.linalg.norm(new_band), 1e-300)
        band = new_band
        res.T_hat, res.H_band, res.rounds_run = T, band, r
        res.soft_per_round.append(soft)
        res.band_per_round.append(band)
        core, ext, values = reliable_set(soft, pilot_mask, pilots_grid, dd.epsilon, l_max, k_max)
        res.reliable_fraction_per_round.append(float(ext.mean()))
        if change < dd.tol:
            break
    return res
