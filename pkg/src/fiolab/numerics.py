"""
Dense complex eigensolvers.

Hermitian matrices are diagonalized by a cyclic Jacobi method with a
round-robin (parallel) ordering, so that each round applies N/2 disjoint
plane rotations as one vectorized numpy update.  Unitary matrices are
diagonalized through the commuting Hermitian pair U + U^H and i(U - U^H).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateClusterFailure, NoConvergence, NotHermitian, NotUnitary

MAX_SWEEPS = 100
HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-8
CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors stored as columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)
        self.vectors.setflags(write=False)

    def __len__(self):
        return len(self.values)

    def pairs(self):
        for k in range(len(self.values)):
            yield self.values[k], self.vectors[:, k]


def as_complex_matrix(M) -> np.ndarray:
    A = np.array(M, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


@lru_cache(maxsize=64)
def _round_robin(n: int):
    """Disjoint (p, q) pairings covering every unordered pair once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        P, Q = [], []
        for k in range(m // 2):
            p, q = players[k], players[m - 1 - k]
            if p < n and q < n:
                P.append(min(p, q))
                Q.append(max(p, q))
        rounds.append((np.array(P, dtype=np.intp), np.array(Q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def fix_phases(V: np.ndarray) -> np.ndarray:
    # first entry of largest modulus made real and nonnegative
    idx = np.argmax(np.abs(V), axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    mod = np.abs(lead)
    phase = np.where(mod > 0, lead / np.where(mod > 0, mod, 1.0), 1.0)
    V = V * np.conj(phase)[None, :]
    V[idx, np.arange(V.shape[1])] = np.abs(V[idx, np.arange(V.shape[1])])
    return V


def _jacobi(A: np.ndarray, max_sweeps: int = MAX_SWEEPS):
    """Diagonalize Hermitian A in place; returns (diagonal, accumulated rotations)."""
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    if n == 1:
        return A.diagonal().real.copy(), V
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n), V
    target = n * np.finfo(float).eps * scale
    rounds = _round_robin(n)
    off_mask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(A[off_mask]) ** 2))
        if off <= target:
            return A.diagonal().real.copy(), V
        for P, Q in rounds:
            apq = A[P, Q]
            r = np.abs(apq)
            active = r > 1e-300
            if not active.any():
                continue
            P, Q, apq, r = P[active], Q[active], apq[active], r[active]
            app = A[P, P].real
            aqq = A[Q, Q].real
            tau = (aqq - app) / (2.0 * r)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            e = np.conj(apq) / r  # e^{-i phi}
            gpp, gpq, gqp, gqq = c, s, -s * e, c * e

            Ap, Aq = A[:, P], A[:, Q]
            A[:, P] = Ap * gpp + Aq * gqp
            A[:, Q] = Ap * gpq + Aq * gqq
            Ap, Aq = A[P, :], A[Q, :]
            A[P, :] = np.conj(gpp)[:, None] * Ap + np.conj(gqp)[:, None] * Aq
            A[Q, :] = np.conj(gpq)[:, None] * Ap + np.conj(gqq)[:, None] * Aq
            A[P, Q] = 0.0
            A[Q, P] = 0.0

            Vp, Vq = V[:, P], V[:, Q]
            V[:, P] = Vp * gpp + Vq * gqp
            V[:, Q] = Vp * gpq + Vq * gqq
        A[...] = 0.5 * (A + A.conj().T)
    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (n={n})")


def eigh_hermitian(H, max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises NotHermitian when max|H - H^H| exceeds 1e-10 * max|H|.
    """
    H = as_complex_matrix(H)
    if H.shape[0] != H.shape[1]:
        raise NotHermitian(f"matrix is not square: {H.shape}")
    hmax = np.abs(H).max()
    if np.abs(H - H.conj().T).max() > HERMITIAN_TOL * max(hmax, np.finfo(float).tiny):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    A = 0.5 * (H + H.conj().T)
    w, V = _jacobi(A, max_sweeps)
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], fix_phases(V[:, order]))


def _clusters(w: np.ndarray, gap: float):
    """Split sorted values into runs whose consecutive gaps are <= gap."""
    groups, start = [], 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > gap:
            groups.append(np.arange(start, k))
            start = k
    return groups


def eig_unitary(U, cluster_tol: float = CLUSTER_TOL) -> EigenDecomposition:
    """Eigenphases in [0, 2pi) (ascending) and eigenvectors of a unitary matrix.

    U + U^H is diagonalized first; each cluster of (numerically) equal
    eigenvalues is then split by diagonalizing i(U - U^H) restricted to it.
    """
    U = as_complex_matrix(U)
    n = U.shape[0]
    if U.shape[1] != n:
        raise NotUnitary(f"matrix is not square: {U.shape}")
    if np.abs(U.conj().T @ U - np.eye(n)).max() > UNITARY_TOL:
        raise NotUnitary("matrix is not unitary within tolerance")

    Uh = U.conj().T
    re = eigh_hermitian(U + Uh)
    V = np.array(re.vectors)
    norm2 = max(np.abs(re.values).max(), 1.0)
    K = 1j * (U - Uh)
    for idx in _clusters(re.values, cluster_tol * norm2):
        if len(idx) == 1:
            continue
        W = V[:, idx]
        sub = W.conj().T @ K @ W
        sub = 0.5 * (sub + sub.conj().T)
        inner = eigh_hermitian(sub)
        V[:, idx] = W @ inner.vectors

    lam = np.einsum("ij,ij->j", V.conj(), U @ V)
    phases = np.mod(np.angle(lam), 2 * np.pi)
    phases[phases >= 2 * np.pi - 1e-13] = 0.0
    res = np.linalg.norm(U @ V - V * np.exp(1j * phases)[None, :], axis=0)
    if res.max() > 1e-6:
        raise DegenerateClusterFailure(f"eigenvector residual {res.max():.3e} after cluster split")
    order = np.argsort(phases, kind="stable")
    return EigenDecomposition(phases[order], fix_phases(V[:, order]))


def residuals(M, decomposition: EigenDecomposition, unitary: bool = False) -> np.ndarray:
    """Per-pair residual norms ||M v - lambda v||_2."""
    M = as_complex_matrix(M)
    V = decomposition.vectors
    lam = np.exp(1j * decomposition.values) if unitary else decomposition.values
    return np.linalg.norm(M @ V - V * lam[None, :], axis=0)


def orthonormality_error(V) -> float:
    V = np.asarray(V)
    return float(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max())
