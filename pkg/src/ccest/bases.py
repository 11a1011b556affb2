"""Dictionaries for the delay-Doppler expansion.

Per-delay unitary ``J x J`` matrices ``B_m`` act along the time index
``lambda`` of the subsampled grid. Row ``i + J/2`` of ``B_m`` is the
conjugate of the 1-D basis function ``b_{m,i}``, so the coefficients of a
length-``J`` vector ``x`` are ``B_m x``.
"""
from dataclasses import dataclass, field
import json
import math

import numpy as np
from scipy.signal import windows

from .channel import phi_kernel
from .mcframe import ambiguity_row


def dft_matrix(J):
    """Unitary DFT with rows ordered by Doppler index ``i = -J/2..J/2-1``:
    ``B[i + J/2, lam] = exp(-j 2 pi lam i / J) / sqrt(J)``."""
    if J < 1:
        raise ValueError("J must be >= 1")
    i = np.arange(J) - J // 2
    lam = np.arange(J)
    return np.exp(-2j * np.pi * np.outer(i, lam) / J) / np.sqrt(J)


@dataclass(eq=False)
class BasisFamily:
    """``D`` unitary matrices (shared storage when all are equal)."""

    matrices: list
    provenance: str = "dft"
    cost_trace: list = field(default_factory=list)

    @property
    def D(self):
        return len(self.matrices)

    @property
    def J(self):
        return self.matrices[0].shape[0]

    def stacked(self):
        return np.stack(self.matrices)

    def unitarity_error(self):
        I = np.eye(self.J)
        return max(float(np.max(np.abs(B @ B.conj().T - I))) for B in self.matrices)

    def coherence(self):
        """``sqrt(JD)`` times the largest entry of the 2-D basis, which
        reduces to ``sqrt(J) max |B_m|``."""
        return float(np.sqrt(self.J) * max(np.max(np.abs(B)) for B in self.matrices))


def dft_basis(J, D):
    if D < 1:
        raise ValueError("D must be >= 1")
    B = dft_matrix(J)
    return BasisFamily([B] * D, "dft", [])


@dataclass(frozen=True)
class DopplerGrid:
    """Doppler set at half the canonical spacing, ``nu = d / (2 N_r)``."""

    N_r: int
    nu_max: float

    @property
    def nu_delta(self):
        return 1.0 / (2 * self.N_r)

    @property
    def d_range(self):
        dm = int(math.ceil(self.nu_max / self.nu_delta - 1e-9))
        return np.arange(-dm, dm + 1)

    @property
    def values(self):
        return self.d_range * self.nu_delta


def _psi_spectrum(nu, N_r):
    """Spreading-function Doppler profile of ``exp(j 2 pi nu n)``."""
    n = np.arange(N_r)
    return np.fft.fft(np.exp(2j * np.pi * np.outer(nu, n)), axis=1) / N_r


def c_vectors(cfg, grid, m, J=None, nus=None):
    """Time-domain profiles ``c_m^(nu)`` on the subsampled grid, one row per
    Doppler value.

    ``C[nu, lam] = sum_i sum_q psi^(nu)[i+qL] A*(m, (i+qL)/N_r)
    exp(j 2 pi lam dL i / L)`` with ``dL = L / J``; for ``J = L`` this is the
    plain length-``J`` inverse DFT of the folded profile.
    """
    J = cfg.L if J is None else J
    if cfg.L % J:
        raise ValueError(f"J={J} must divide L={cfg.L}")
    nus = grid.values if nus is None else np.asarray(nus, dtype=float)
    N_r, L = cfg.N_r, cfg.L
    spec = _psi_spectrum(nus, N_r) * np.conj(ambiguity_row(cfg, m))[None, :]
    i = np.arange(-L // 2, L // 2)
    j = (i[:, None] + L * np.arange(cfg.N)[None, :]) % N_r
    F = spec[:, j].sum(axis=2)  # (n_nu, L) over i
    dL = L // J
    lam = np.arange(J)
    return F @ np.exp(2j * np.pi * np.outer(i, lam * dL) / L)


def l1_cost(B, C):
    """``sum_nu ||B c^(nu)||_1`` for ``C`` holding one vector per row."""
    return float(np.sum(np.abs(C @ B.T)))


def _expm_j(A):
    w, Q = np.linalg.eigh(A)
    return (Q * np.exp(1j * w)) @ Q.conj().T


def _project_box(A, rho):
    A = 0.5 * (A + A.conj().T)
    return np.clip(A.real, -rho, rho) + 1j * np.clip(A.imag, -rho, rho)


def hermitian_l1_step(V, rho, iters=200):
    """Approximate minimizer of ``sum_nu ||v + jAv||_1`` over Hermitian
    ``A`` with real and imaginary parts of every entry in ``[-rho, rho]``.

    ``V`` holds one vector ``v^(nu)`` per column. Projected subgradient
    with step ``rho / sqrt(k)`` along the normalized subgradient; the best
    iterate (including ``A = 0``) is returned.

    Returns
    -------
    A : ndarray
    objective : float
    """
    V = np.asarray(V, dtype=complex)
    J = V.shape[0]
    A = np.zeros((J, J), dtype=complex)

    def obj(A):
        return float(np.sum(np.abs(V + 1j * (A @ V))))

    best_A, best = A.copy(), obj(A)
    if rho <= 0:
        return best_A, best
    for k in range(1, iters + 1):
        U = V + 1j * (A @ V)
        mag = np.abs(U)
        S = np.where(mag > 0, U / np.where(mag > 0, mag, 1), 0)
        G = -1j * (S @ V.conj().T)
        G = 0.5 * (G + G.conj().T)
        gn = np.linalg.norm(G)
        if gn == 0:
            break
        A = _project_box(A - (rho / math.sqrt(k)) * G / gn, rho)
        f = obj(A)
        if f < best:
            best_A, best = A.copy(), f
    return best_A, best


def _optimize_one(C, rho0, rho_min, max_iter, inner_iters):
    B = dft_matrix(C.shape[1])
    cost = l1_cost(B, C)
    trace = [cost]
    rho = rho0
    for _ in range(max_iter):
        if rho < rho_min:
            break
        V = B @ C.T
        A, _ = hermitian_l1_step(V, rho, inner_iters)
        Bn = _expm_j(A) @ B
        cn = l1_cost(Bn, C)
        if cn < cost:
            B, cost = Bn, cn
        else:
            rho *= 0.5
        trace.append(cost)
    return B, trace


def optimize_bases(C_per_m, rho0=0.05, rho_min=1e-4, max_iter=100, inner_iters=200,
                   provenance="det"):
    """Iterative unitary basis optimization, one problem per delay.

    Parameters
    ----------
    C_per_m : list of ndarray
        Entry ``m`` holds the (possibly weighted) vectors ``c_m^(nu)`` as
        rows. Delays whose vectors are proportional to an earlier delay's
        share its result.

    Notes
    -----
    Each step solves the linearized ``l1`` problem around ``B`` and applies
    ``exp(jA)``, which keeps ``B`` unitary. A step is accepted only if the
    true cost drops; otherwise the box radius is halved. The returned
    ``cost_trace`` is that of delay 0 summed with the others, and is
    non-increasing because each per-delay trace is.
    """
    if not rho0 > rho_min > 0:
        raise ValueError("need rho0 > rho_min > 0")
    mats = []
    traces = []
    cache = []
    for C in C_per_m:
        C = np.asarray(C, dtype=complex)
        hit = None
        for key, res in cache:
            if key.shape == C.shape and _proportional(key, C):
                hit = res
                break
        if hit is None:
            hit = _optimize_one(C, rho0, rho_min, max_iter, inner_iters)
            cache.append((C, hit))
        mats.append(hit[0])
        traces.append(hit[1])
    n = max(len(t) for t in traces)
    total = np.zeros(n)
    for t in traces:
        total += np.pad(np.asarray(t), (0, n - len(t)), mode="edge")
    return BasisFamily(mats, provenance, total.tolist())


def _proportional(a, b, tol=1e-10):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return na == nb
    s = np.vdot(a, b) / na ** 2
    return np.linalg.norm(b - s * a) <= tol * nb


def deterministic_basis(cfg, D, J, nu_max, **kw):
    grid = DopplerGrid(cfg.N_r, nu_max)
    C = [c_vectors(cfg, grid, m, J) for m in range(D)]
    return optimize_bases(C, provenance="det", **kw)


@dataclass(eq=False)
class StatPrior:
    """Delay-Doppler prior on a tensor grid.

    ``pdf`` and ``sigma2`` have shape ``(len(tau), len(nu))``;
    ``tau_weights`` and ``nu_weights`` are 1-D quadrature weights.
    """

    tau: np.ndarray
    nu: np.ndarray
    pdf: np.ndarray
    sigma2: np.ndarray
    tau_weights: np.ndarray
    nu_weights: np.ndarray

    def __post_init__(self):
        if np.any(self.pdf < 0) or np.any(self.sigma2 < 0):
            raise ValueError("pdf and sigma2 must be nonnegative")
        mass = float(np.sum(self.pdf * self.weights))
        if mass == 0:
            raise ValueError("prior has no mass")
        if abs(mass - 1.0) > 1e-6:
            raise ValueError(f"pdf integrates to {mass}, not 1")

    @property
    def weights(self):
        return np.outer(self.tau_weights, self.nu_weights)

    @classmethod
    def uniform_bands(cls, tau_max, bands, n_tau=256, n_nu=64):
        """Constant pdf and unit variance on ``[0, tau_max] x union(bands)``."""
        tau = np.linspace(0, tau_max, n_tau)
        wt = _trapezoid(tau)
        nu = np.concatenate([np.linspace(lo, hi, n_nu) for lo, hi in bands])
        wnu = np.concatenate([_trapezoid(np.linspace(lo, hi, n_nu)) for lo, hi in bands])
        order = np.argsort(nu, kind="stable")
        nu, wnu = nu[order], wnu[order]
        area = wt.sum() * wnu.sum()
        pdf = np.full((tau.size, nu.size), 1.0 / area)
        return cls(tau, nu, pdf, np.ones_like(pdf), wt, wnu)


def _trapezoid(x):
    w = np.zeros(x.size)
    if x.size > 1:
        dx = np.diff(x)
        w[:-1] += dx / 2
        w[1:] += dx / 2
    else:
        w[:] = 1.0
    return w


def stat_weights(prior, model, D, grid):
    """``G^(nu)[m] = int sigma |phi(m - tau)| p dtau`` at each grid Doppler.

    The delay integral uses the prior's quadrature; values at the grid's
    Doppler points are linearly interpolated along ``nu`` (zero outside
    the prior's Doppler range). Returns shape ``(len(grid.values), D)``.
    """
    m = np.arange(D)
    phi = np.abs(np.stack([phi_kernel(model, 0.0, mm - prior.tau) for mm in m]))  # (D, n_tau)
    integrand = np.sqrt(prior.sigma2) * prior.pdf * prior.tau_weights[:, None]
    g_nodes = phi @ integrand  # (D, n_nu)
    if not np.any(g_nodes):
        raise ValueError("prior has no weight on delays 0..D-1")
    nus = grid.values
    out = np.empty((nus.size, D))
    for mm in range(D):
        if prior.nu.size == 1:
            out[:, mm] = np.where(np.isclose(nus, prior.nu[0]), g_nodes[mm, 0], 0.0)
        else:
            out[:, mm] = np.interp(nus, prior.nu, g_nodes[mm], left=0.0, right=0.0)
    return out


def statistical_basis(cfg, D, J, nu_max, prior, model, **kw):
    grid = DopplerGrid(cfg.N_r, nu_max)
    G = stat_weights(prior, model, D, grid)
    C = [c_vectors(cfg, grid, m, J) * G[:, m][:, None] for m in range(D)]
    return optimize_bases(C, provenance="stat", **kw)


def dpss(N_r, W, count):
    """Leading ``count`` Slepian sequences for length ``N_r`` and half
    bandwidth ``W`` (cycles/sample), unit energy, by decreasing
    concentration."""
    if not 0 < W < 0.5:
        raise ValueError(f"W={W} must lie in (0, 1/2)")
    if count < 1 or count > N_r:
        raise ValueError("count out of range")
    seq = windows.dpss(N_r, N_r * W, Kmax=count, sym=True, norm=2)
    return np.atleast_2d(seq)


def dpss_concentration(seq, W):
    """Fraction of each sequence's energy inside ``[-W, W]`` from the sinc
    kernel quadratic form."""
    seq = np.atleast_2d(seq)
    n = np.arange(seq.shape[1])
    d = n[:, None] - n[None, :]
    K = 2 * W * np.sinc(2 * W * d)
    return np.einsum("kn,nm,km->k", seq, K, seq) / np.sum(seq ** 2, axis=1)


@dataclass(eq=False)
class CombinedBasis:
    """Explicit part of the DFT-DPSS time basis; rows are ``psi_i[n]``."""

    functions: np.ndarray
    J0: int
    J1: int

    @property
    def J(self):
        return self.functions.shape[0]

    @property
    def N_r(self):
        return self.functions.shape[1]

    @property
    def dpss_tail_count(self):
        return self.N_r - self.J

    def gram_error(self):
        G = self.functions.conj() @ self.functions.T
        return float(np.max(np.abs(G - np.eye(self.J))))


def combined_basis(N_r, nu_max, J1=4):
    """DFT functions for ``i = -J0..J0`` followed by ``J1 - 1`` DPSS
    orthonormalized against everything before them (one Gram-Schmidt step
    each), ``J0 = floor(nu_max N_r)``."""
    if J1 < 2:
        raise ValueError("J1 must be >= 2")
    J0 = int(math.floor(nu_max * N_r + 1e-9))
    J = 2 * J0 + J1
    if J >= N_r:
        raise ValueError(f"J={J} must be smaller than N_r={N_r}")
    n = np.arange(N_r)
    funcs = np.empty((J, N_r), dtype=complex)
    funcs[:2 * J0 + 1] = np.exp(2j * np.pi * np.outer(np.arange(-J0, J0 + 1), n) / N_r) / np.sqrt(N_r)
    W = nu_max if nu_max > 0 else 0.5 / N_r
    slep = dpss(N_r, W, J)
    for r in range(2 * J0 + 1, J):
        v = slep[r].astype(complex)
        for _ in range(2):  # second pass for numerical orthogonality
            v = v - funcs[:r].T @ (funcs[:r].conj() @ v)
        funcs[r] = v / np.linalg.norm(v)
    return CombinedBasis(funcs, J0, J1)


def vartheta(functions, nu):
    """``sum_n exp(j 2 pi nu n) conj(psi_i[n])`` for each row ``psi_i``.

    Accepts a :class:`CombinedBasis` or a raw array of functions.
    """
    f = functions.functions if isinstance(functions, CombinedBasis) else np.atleast_2d(functions)
    n = np.arange(f.shape[1])
    return f.conj() @ np.exp(2j * np.pi * nu * n)


def dft_functions(N_r):
    """All ``N_r`` unit-norm DFT functions with frequencies ``0..N_r-1``."""
    n = np.arange(N_r)
    return np.exp(2j * np.pi * np.outer(n, n) / N_r) / np.sqrt(N_r)


def energy_outside(basis, nu):
    """``vartheta`` energy not captured by the explicit functions; by
    Parseval the total is ``N_r``."""
    v = vartheta(basis, nu)
    return float(basis.N_r - np.sum(np.abs(v) ** 2))


# --- serialization --------------------------------------------------------

_FORMAT = "ccest-dictionary/1"


def _hexify(a):
    a = np.ascontiguousarray(a, dtype=complex).ravel()
    return [[float(z.real).hex(), float(z.imag).hex()] for z in a]


def _unhex(rows, shape):
    v = np.array([complex(float.fromhex(r), float.fromhex(i)) for r, i in rows])
    return v.reshape(shape)


def dumps(obj, N_r=None):
    """Serialize a :class:`BasisFamily` or :class:`CombinedBasis` to text.

    Floats are written as hex literals so a load/dump round trip is
    bit-identical.
    """
    if isinstance(obj, BasisFamily):
        doc = {"format": _FORMAT, "kind": "basis_family", "provenance": obj.provenance,
               "J": obj.J, "D": obj.D, "N_r": N_r,
               "cost_trace": [float(c).hex() for c in obj.cost_trace],
               "matrices": [_hexify(B) for B in obj.matrices]}
    elif isinstance(obj, CombinedBasis):
        doc = {"format": _FORMAT, "kind": "combined", "J": obj.J, "N_r": obj.N_r,
               "J0": obj.J0, "J1": obj.J1, "functions": _hexify(obj.functions)}
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def loads(text):
    doc = json.loads(text)
    if doc.get("format") != _FORMAT:
        raise ValueError("not a dictionary file")
    J = doc["J"]
    if doc["kind"] == "basis_family":
        mats = [_unhex(m, (J, J)) for m in doc["matrices"]]
        if len(mats) != doc["D"]:
            raise ValueError("matrix count does not match D")
        trace = [float.fromhex(c) for c in doc["cost_trace"]]
        return BasisFamily(mats, doc["provenance"], trace)
    if doc["kind"] == "combined":
        return CombinedBasis(_unhex(doc["functions"], (J, doc["N_r"])), doc["J0"], doc["J1"])
    raise ValueError(f"unknown kind {doc['kind']!r}")


def save(obj, path, N_r=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj, N_r))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
