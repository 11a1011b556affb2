"""Sparse recovery over abstract linear operators.

All solvers are complex-valued and only touch the measurement matrix
through ``forward``/``adjoint`` and, for greedy refits, ``columns``.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import solve_triangular


class MeasurementOperator:
    """Linear map ``C^M -> C^Q`` with its adjoint.

    Parameters
    ----------
    forward, adjoint : callable
        ``forward(x)`` for ``x`` of length ``M``; ``adjoint(y)`` for ``y`` of
        length ``Q``.
    shape : tuple
        ``(Q, M)``.
    columns : callable, optional
        ``columns(idx)`` returning the dense ``Q x len(idx)`` submatrix. If
        omitted, columns are synthesized by applying ``forward`` to unit
        vectors.
    """

    def __init__(self, forward, adjoint, shape, columns=None, matrix=None):
        self._fwd = forward
        self._adj = adjoint
        self.Q, self.M = (int(shape[0]), int(shape[1]))
        self._cols = columns
        self.matrix = matrix
        self._norms = None

    @property
    def shape(self):
        return (self.Q, self.M)

    @classmethod
    def from_matrix(cls, A):
        A = np.asarray(A, dtype=complex)
        AH = A.conj().T
        return cls(lambda x: A @ x, lambda y: AH @ y, A.shape,
                   columns=lambda idx: A[:, idx], matrix=A)

    def forward(self, x):
        return self._fwd(np.asarray(x, dtype=complex))

    def adjoint(self, y):
        return self._adj(np.asarray(y, dtype=complex))

    def columns(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if self._cols is not None:
            return np.asarray(self._cols(idx))
        out = np.empty((self.Q, idx.size), dtype=complex)
        e = np.zeros(self.M, dtype=complex)
        for c, j in enumerate(idx):
            e[j] = 1.0
            out[:, c] = self.forward(e)
            e[j] = 0.0
        return out

    @property
    def column_norms(self):
        if self._norms is None:
            if self.matrix is not None:
                self._norms = np.linalg.norm(self.matrix, axis=0)
            else:
                self._norms = np.linalg.norm(self.columns(np.arange(self.M)), axis=0)
        return self._norms

    def normalized(self, norms=None):
        """Operator with unit-norm columns, ``A diag(1/norms)``.

        Returns ``(op, scale)`` with ``scale = 1/norms``; zero columns raise.
        """
        norms = self.column_norms if norms is None else np.asarray(norms, dtype=float)
        if np.any(norms <= 0):
            raise ValueError("measurement operator has zero columns")
        s = 1.0 / norms
        if self.matrix is not None:
            op = MeasurementOperator.from_matrix(self.matrix * s[None, :])
        else:
            op = MeasurementOperator(lambda x: self.forward(x * s),
                                     lambda y: s * self.adjoint(y),
                                     self.shape,
                                     columns=lambda idx: self.columns(idx) * s[idx][None, :])
        op._norms = np.ones(self.M)
        return op, s

    def adjoint_mismatch(self, rng, probes=3):
        """Largest relative ``|<Ax,y> - <x,A^H y>|`` over random probes."""
        worst = 0.0
        for _ in range(probes):
            x = rng.standard_normal(self.M) + 1j * rng.standard_normal(self.M)
            y = rng.standard_normal(self.Q) + 1j * rng.standard_normal(self.Q)
            lhs = np.vdot(y, self.forward(x))
            rhs = np.vdot(self.adjoint(y), x)
            scale = np.linalg.norm(x) * np.linalg.norm(y)
            worst = max(worst, abs(lhs - rhs) / scale)
        return worst


def partial_dft(M, rows):
    """Rows ``rows`` of the unitary ``M``-point DFT as a fast operator."""
    rows = np.asarray(rows, dtype=np.int64)

    def fwd(x):
        return np.fft.fft(x, norm="ortho")[rows]

    def adj(y):
        z = np.zeros(M, dtype=complex)
        np.add.at(z, rows, y)
        return np.fft.ifft(z, norm="ortho")

    def cols(idx):
        return np.exp(-2j * np.pi * np.outer(rows, idx) / M) / np.sqrt(M)

    op = MeasurementOperator(fwd, adj, (rows.size, M), columns=cols)
    op._norms = np.full(M, np.sqrt(rows.size / M))
    return op


def as_operator(A):
    return A if isinstance(A, MeasurementOperator) else MeasurementOperator.from_matrix(A)


@dataclass
class SparseSolution:
    x_hat: np.ndarray
    support: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool = True
    rank_deficient: bool = False
    residual_trace: list = field(default_factory=list)


def omp(A, y, S, tol=1e-12):
    """Orthogonal matching pursuit, ``S`` greedy selections with an exact
    least-squares refit after each (incremental QR of the selected columns).

    Stops early only if the residual drops to ``tol * ||y||``; the support
    then has fewer than ``S`` atoms. A selected column that is numerically
    dependent on earlier ones ends the loop with a minimum-norm refit and
    sets ``rank_deficient``.
    """
    A = as_operator(A)
    y = np.asarray(y, dtype=complex)
    if S < 0 or S > A.M:
        raise ValueError(f"sparsity {S} outside [0, {A.M}]")
    x = np.zeros(A.M, dtype=complex)
    r = y.copy()
    ynorm = float(np.linalg.norm(y))
    trace = [ynorm]
    support = []
    Qb = np.zeros((A.Q, S), dtype=complex)
    R = np.zeros((S, S), dtype=complex)
    z = np.zeros(S, dtype=complex)
    deficient = False
    it = 0
    for it in range(1, S + 1):
        if trace[-1] <= tol * ynorm:
            it -= 1
            break
        corr = np.abs(A.adjoint(r))
        corr[support] = -1.0
        j = int(np.argmax(corr))
        a = A.columns([j])[:, 0]
        k = len(support)
        q = a.copy()
        coef = np.zeros(k, dtype=complex)
        for _ in range(2):  # re-orthogonalize once
            c = Qb[:, :k].conj().T @ q
            q -= Qb[:, :k] @ c
            coef += c
        nq = np.linalg.norm(q)
        support.append(j)
        if nq <= 1e-10 * max(np.linalg.norm(a), 1e-300):
            deficient = True
            break
        Qb[:, k] = q / nq
        R[:k, k] = coef
        R[k, k] = nq
        z[k] = np.vdot(Qb[:, k], y)
        r = y - Qb[:, :k + 1] @ z[:k + 1]
        trace.append(float(np.linalg.norm(r)))
    k = len(support)
    if deficient:
        cols = A.columns(support)
        x[support] = np.linalg.lstsq(cols, y, rcond=None)[0]
        trace.append(float(np.linalg.norm(y - cols @ x[support])))
    elif k:
        x[support] = solve_triangular(R[:k, :k], z[:k])
    return SparseSolution(x, np.array(support, dtype=np.int64), trace[-1], it,
                          True, deficient, trace)


def lsqr(A, b, max_iter=100, tol=1e-12, x0=None):
    """Paige-Saunders LSQR for ``min ||Ax - b||``; complex-valued.

    Starting from zero, the iterates converge to the minimum-norm
    least-squares solution. Stops when the normal-equation residual
    ``||A^H r||`` falls below ``tol * ||A|| ||r||`` (estimated), when
    ``||r|| <= tol * ||b||``, or after ``max_iter`` iterations.

    Returns
    -------
    x : ndarray
    info : dict
        ``iterations``, ``rnorm``, ``arnorm`` estimates.
    """
    A = as_operator(A)
    b = np.asarray(b, dtype=complex)
    x = np.zeros(A.M, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    r0 = b - A.forward(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r0)
    info = {"iterations": 0, "rnorm": beta, "arnorm": 0.0}
    if beta == 0.0:
        return x, info
    u = r0 / beta
    v = A.adjoint(u)
    alpha = np.linalg.norm(v)
    if alpha == 0.0:
        return x, info
    v = v / alpha
    w = v.copy()
    phibar, rhobar = beta, alpha
    bnorm = beta
    anorm2 = 0.0
    for it in range(1, max_iter + 1):
        u = A.forward(v) - alpha * u
        beta = np.linalg.norm(u)
        if beta > 0:
            u = u / beta
        anorm2 += alpha * alpha + beta * beta
        v = A.adjoint(u) - beta * v
        alpha = np.linalg.norm(v)
        if alpha > 0:
            v = v / alpha
        rho = math.hypot(rhobar, beta)
        c, s = rhobar / rho, beta / rho
        theta = s * alpha
        rhobar = -c * alpha
        phi = c * phibar
        phibar = s * phibar
        x = x + (phi / rho) * w
        w = v - (theta / rho) * w
        rnorm = phibar
        arnorm = phibar * alpha * abs(c)
        info.update(iterations=it, rnorm=rnorm, arnorm=arnorm)
        if rnorm <= tol * bnorm:
            break
        if arnorm <= tol * math.sqrt(anorm2) * rnorm:
            break
        if alpha == 0.0:
            break
    return x, info


def cosamp(A, y, S, max_iter=15, lsqr_iter=30, tol=1e-12):
    """Compressive sampling matching pursuit.

    Each iteration merges the current support with the ``2S`` largest
    proxy entries, solves least squares on the merged columns by
    :func:`lsqr`, and prunes to the ``S`` largest. The best iterate by
    residual norm is returned.
    """
    A = as_operator(A)
    y = np.asarray(y, dtype=complex)
    if S < 0 or S > A.M:
        raise ValueError(f"sparsity {S} outside [0, {A.M}]")
    x = np.zeros(A.M, dtype=complex)
    ynorm = np.linalg.norm(y)
    best = (ynorm, x.copy(), np.zeros(0, dtype=np.int64))
    trace = [ynorm]
    if S == 0 or ynorm == 0.0:
        return SparseSolution(x, best[2], ynorm, 0, True, False, trace)
    supp = np.zeros(0, dtype=np.int64)
    r = y.copy()
    it = 0
    deficient = False
    for it in range(1, max_iter + 1):
        proxy = np.abs(A.adjoint(r))
        omega = np.argsort(-proxy, kind="stable")[:2 * S]
        T = np.union1d(omega, supp)
        sub = MeasurementOperator.from_matrix(A.columns(T))
        b, _ = lsqr(sub, y, max_iter=lsqr_iter, tol=1e-14)
        keep = np.argsort(-np.abs(b), kind="stable")[:S]
        supp = np.sort(T[keep])
        x = np.zeros(A.M, dtype=complex)
        x[T[keep]] = b[keep]
        r = y - A.forward(x)
        rn = float(np.linalg.norm(r))
        trace.append(rn)
        if rn < best[0]:
            best = (rn, x.copy(), supp.copy())
        if rn <= tol * ynorm:
            break
        if len(trace) > 2 and abs(trace[-2] - rn) <= 1e-12 * ynorm:
            break
    if best[2].size < min(S, A.Q):
        deficient = np.linalg.matrix_rank(A.columns(best[2])) < best[2].size if best[2].size else False
    return SparseSolution(best[1], best[2], best[0], it, True, bool(deficient), trace)


def soft_threshold(z, t):
    """Complex soft-thresholding: shrink magnitudes by ``t``, keep phases."""
    mag = np.abs(z)
    scale = np.where(mag > t, 1.0 - t / np.maximum(mag, 1e-300), 0.0)
    return z * scale


def operator_norm_sq(A, iters=50, rng=None):
    """Power-iteration estimate of ``||A||^2``."""
    A = as_operator(A)
    if A.matrix is not None:
        return float(np.linalg.norm(A.matrix, 2) ** 2)
    rng = np.random.default_rng(0) if rng is None else rng
    x = rng.standard_normal(A.M) + 1j * rng.standard_normal(A.M)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        z = A.adjoint(A.forward(x))
        lam = np.linalg.norm(z)
        if lam == 0:
            return 0.0
        x = z / lam
    return float(lam) * 1.01


def fista_lasso(A, y, lam, max_iter=500, tol=1e-8, lipschitz=None):
    """FISTA for ``0.5 ||Ax - y||^2 + lam ||x||_1`` with monotone restarts.

    Whenever a step would raise the objective, the momentum is reset and
    the previous iterate kept, so the recorded objective never increases.
    ``converged`` is False when ``max_iter`` ran out before the relative
    change fell under ``tol``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    A = as_operator(A)
    y = np.asarray(y, dtype=complex)
    Lc = operator_norm_sq(A) if lipschitz is None else lipschitz
    x = np.zeros(A.M, dtype=complex)
    if Lc == 0.0 or not np.any(y):
        return SparseSolution(x, np.zeros(0, dtype=np.int64), float(np.linalg.norm(y)), 0)

    def objective(v):
        return 0.5 * np.linalg.norm(A.forward(v) - y) ** 2 + lam * np.sum(np.abs(v))

    z = x.copy()
    t = 1.0
    fx = objective(x)
    trace = [fx]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = A.adjoint(A.forward(z) - y)
        xn = soft_threshold(z - grad / Lc, lam / Lc)
        fn = objective(xn)
        if fn > fx:
            # restart momentum from the last accepted point
            z = x.copy()
            t = 1.0
            if np.array_equal(z, xn):
                converged = True
                break
            continue
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = xn + ((t - 1.0) / tn) * (xn - x)
        step = np.linalg.norm(xn - x)
        x, t, fx = xn, tn, fn
        trace.append(fx)
        if step <= tol * max(np.linalg.norm(x), 1e-300):
            converged = True
            break
    supp = np.flatnonzero(np.abs(x) > 1e-12)
    return SparseSolution(x, supp, float(np.linalg.norm(A.forward(x) - y)), it,
                          converged, False, trace)


def sparsity_estimate(Q, M):
    """``ceil(Q / (2 log10 M))``.

    The base-10 logarithm is the one that reproduces ``S = 262`` for
    ``Q = 2048``, ``M = 8192``; the natural log would give 114.
    """
    if Q < 1 or M < 2:
        raise ValueError("need Q >= 1 and M >= 2")
    return int(math.ceil(Q / (2.0 * math.log10(M)) - 1e-12))


def coherence(U):
    """``sqrt(M) max |U_ij|`` of an ``M x M`` unitary matrix."""
    U = np.asarray(U)
    return float(np.sqrt(U.shape[0]) * np.max(np.abs(U)))


def pilot_count_bound(S, J, D, mu, gamma, eta, C=1.0):
    """Pilot count sufficient for the RIP, ``C gamma^-2 ln(JD)^4 mu^2 S ln(1/eta)``.

    Only a diagnostic: ``C`` is an unspecified universal constant.
    """
    for name, v in (("S", S), ("J", J), ("D", D), ("mu", mu), ("gamma", gamma), ("eta", eta), ("C", C)):
        if v <= 0:
            raise ValueError(f"{name} must be positive")
    return C * gamma ** -2 * math.log(J * D) ** 4 * mu ** 2 * S * math.log(1.0 / eta)
