"""Compressive estimation of the diagonal channel coefficients.

Pilots sit on the subsampled grid ``(lambda dL, kappa dK)``. Grid samples
are stacked as ``kappa J + lambda``; unknown coefficients as
``(i + J/2) D + m``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .channel import synthesize_diagonal

QPSK = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / np.sqrt(2)


@dataclass(frozen=True)
class SubsampledGrid:
    K: int
    L: int
    delta_K: int = 1
    delta_L: int = 1

    def __post_init__(self):
        if self.K % self.delta_K or self.L % self.delta_L:
            raise ValueError(f"subsampling ({self.delta_L}, {self.delta_K}) must divide (L, K) = ({self.L}, {self.K})")

    @property
    def D(self):
        return self.K // self.delta_K

    @property
    def J(self):
        return self.L // self.delta_L

    @property
    def size(self):
        return self.J * self.D


@dataclass(eq=False)
class PilotSet:
    """Pilot positions ``(l, k)`` sorted by grid stacking index, with values."""

    positions: np.ndarray
    values: np.ndarray
    seed: object = None
    grid: SubsampledGrid = None

    @property
    def count(self):
        return len(self.values)

    def mask(self, L, K):
        m = np.zeros((L, K), dtype=bool)
        if self.count:
            m[self.positions[:, 0], self.positions[:, 1]] = True
        return m

    def as_grid(self, L, K):
        g = np.zeros((L, K), dtype=complex)
        if self.count:
            g[self.positions[:, 0], self.positions[:, 1]] = self.values
        return g

    def stack_index(self):
        """Position of each pilot in the ``kappa J + lambda`` stacking."""
        g = self.grid
        lam = self.positions[:, 0] // g.delta_L
        kap = self.positions[:, 1] // g.delta_K
        return kap * g.J + lam


def draw_pilots(grid, count, rng, seed=None):
    """Uniformly random distinct grid positions with random unit-modulus
    4-QAM values."""
    if count < 0 or count > grid.size:
        raise ValueError(f"pilot count {count} exceeds grid size {grid.size}")
    idx = np.sort(rng.choice(grid.size, size=count, replace=False))
    kap, lam = np.divmod(idx, grid.J)
    pos = np.stack([lam * grid.delta_L, kap * grid.delta_K], axis=1).astype(np.int64)
    vals = QPSK[rng.integers(0, 4, size=count)]
    return PilotSet(pos.reshape(-1, 2), vals, seed, grid)


def ls_pilot_estimates(r_grid, pilots):
    """``r[l,k] / p[l,k]`` at the pilots, in stacking order."""
    if np.any(pilots.values == 0):
        raise ValueError("pilot values must be nonzero")
    r_grid = np.asarray(r_grid)
    return r_grid[pilots.positions[:, 0], pilots.positions[:, 1]] / pilots.values


def _basis_stack(basis, D, J):
    mats = basis.stacked()
    if mats.shape != (D, J, J):
        raise ValueError(f"basis shape {mats.shape} does not match (D, J, J) = {(D, J, J)}")
    return mats


def synthesis_operator(basis, grid, rows=None):
    """Measurement operator ``V`` restricted to ``rows`` of the stacking.

    Column ``(i', m)`` is ``exp(-j2pi kappa m/D) conj(B_m[i', lam]) / sqrt(D)``.
    With ``rows=None`` the full ``JD x JD`` synthesis is returned.
    """
    D, J = grid.D, grid.J
    Bs = _basis_stack(basis, D, J)
    rows = np.arange(J * D) if rows is None else np.asarray(rows, dtype=np.int64)
    kap, lam = np.divmod(rows, J)

    def fwd(x):
        beta = x.reshape(J, D).T  # (m, i')
        X = np.einsum("mil,mi->ml", Bs.conj(), beta)  # x_m[lam]
        H = np.fft.fft(X, axis=0, norm="ortho")  # (kappa, lam)
        return H[kap, lam]

    def adj(y):
        Z = np.zeros((D, J), dtype=complex)
        np.add.at(Z, (kap, lam), y)
        X = np.fft.ifft(Z, axis=0, norm="ortho")
        beta = np.einsum("mil,ml->mi", Bs, X)
        return beta.T.ravel()

    def cols(idx):
        ip, m = np.divmod(np.asarray(idx, dtype=np.int64), D)
        ph = np.exp(-2j * np.pi * np.outer(kap, m) / D) / np.sqrt(D)
        return ph * np.conj(Bs[m[None, :], ip[None, :], lam[:, None]])

    op = solvers.MeasurementOperator(fwd, adj, (rows.size, J * D), columns=cols)
    counts = np.bincount(lam, minlength=J).astype(float)
    norms2 = np.einsum("mil,l->mi", np.abs(Bs) ** 2, counts) / D  # (m, i')
    op._norms = np.sqrt(norms2.T.ravel())
    return op


@dataclass
class SolverSpec:
    """Recovery algorithm and its parameters.

    ``sparsity=None`` means the formula estimate from the number of pilots
    and unknowns. ``lasso_lambda`` is relative to ``max |Phi^H y|``.
    """

    name: str = "omp"
    sparsity: int = None
    cosamp_iters: int = 15
    lsqr_iters: int = 30
    lasso_lambda: float = 0.01
    lasso_iters: int = 300

    def resolve_sparsity(self, Q, M):
        if self.sparsity is not None:
            return int(min(self.sparsity, M))
        return min(solvers.sparsity_estimate(Q, M), M)


def solve(op, y, spec, M_for_sparsity=None):
    M_s = op.M if M_for_sparsity is None else M_for_sparsity
    S = spec.resolve_sparsity(op.Q, M_s)
    if spec.name == "omp":
        return solvers.omp(op, y, min(S, op.Q))
    if spec.name == "cosamp":
        return solvers.cosamp(op, y, min(S, op.Q), spec.cosamp_iters, spec.lsqr_iters)
    if spec.name == "lasso":
        scale = np.max(np.abs(op.adjoint(y))) if np.any(y) else 1.0
        return solvers.fista_lasso(op, y, spec.lasso_lambda * scale, spec.lasso_iters, 1e-6)
    raise ValueError(f"unknown solver {spec.name!r}")


@dataclass(eq=False)
class DiagonalEstimate:
    H_hat: np.ndarray
    F_hat: np.ndarray
    solver_report: solvers.SparseSolution = field(repr=False)


def grid_to_F(H_grid):
    """Inverse of the 2-D grid expansion: ``F[m, i]`` from ``H[kappa, lam]``
    with ``F[m,i] = (1/JD) sum H exp(+j2pi(kappa m/D - lam i/J))``.

    Columns of the result are ordered ``i = -J/2..J/2-1``.
    """
    D, J = H_grid.shape
    T = np.fft.ifft(H_grid, axis=0)  # (1/D) sum_kappa exp(+j..)
    T = np.fft.fft(T, axis=1) / J  # (1/J) sum_lam exp(-j..)
    i = np.arange(-J // 2, J // 2) % J
    return T[:, i]


def estimate_diagonal(r_grid, pilots, basis, cfg, spec=None, M_for_sparsity=None):
    """Compressive estimate of all ``H[l,k]`` from pilot observations.

    ``basis`` is a :class:`~ccest.bases.BasisFamily`; the DFT family gives
    the basic estimator.
    """
    spec = SolverSpec() if spec is None else spec
    grid = pilots.grid
    if grid.K != cfg.K or grid.L != cfg.L:
        raise ValueError("pilot grid does not match the frame")
    y = ls_pilot_estimates(r_grid, pilots)
    op = synthesis_operator(basis, grid, pilots.stack_index())
    nop, s = op.normalized()
    sol = solve(nop, y, spec, M_for_sparsity)
    beta = sol.x_hat * s
    H_grid = synthesis_operator(basis, grid).forward(beta).reshape(grid.D, grid.J)
    F = grid_to_F(H_grid)
    return DiagonalEstimate(synthesize_diagonal(F, cfg), F, sol)
