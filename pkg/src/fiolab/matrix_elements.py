"""
Matrix elements of operators against eigenbases, and the statistics built
from them: variance sums, density-one fractions, Weyl averages, Hecke
functionals, moment tables ("lifts") and coherent-state orbit profiles.

All inner products are <F u, v> = v^H F u (linear in the first slot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classical import TorusPoint, periodic_orbit
from .errors import DimensionMismatch, NotUnitary, OutOfRange, ZeroMass
from .numerics import EigenDecomposition, eig_unitary, orthonormality_error
from .sphere import HeckeSpec, SphereLevel, _level, joint_eigenbasis, multiplication_op, rotation_op
from .torus import _as_space, apply_translation, catmap_op, check_aliasing, coherent_state

UNIT_TOL = 1e-9
ORTHO_TOL = 1e-9
HECKE_EPS = 1e-6
WEYL_TOL = 1e-10
MIN_MASS = 1e-300


@dataclass(frozen=True)
class EigenBasis:
    """Orthonormal eigenvectors (columns) with their eigenvalues or eigenphases.

    `model` is a tag such as ("torus", N) or ("sphere", ell).
    """

    vectors: np.ndarray
    values: np.ndarray
    model: tuple = ("generic", 0)

    def __post_init__(self):
        V = np.asarray(self.vectors)
        w = np.asarray(self.values)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or len(w) != V.shape[1]:
            raise DimensionMismatch(f"basis of shape {V.shape} with {len(w)} values is not complete")
        err = orthonormality_error(V)
        if err > ORTHO_TOL:
            raise ValueError(f"basis vectors are not orthonormal (error {err:.2e})")

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def __len__(self):
        return self.dim

    def vector(self, j: int) -> np.ndarray:
        return self.vectors[:, j]

    @classmethod
    def from_decomposition(cls, dec: EigenDecomposition, model=("generic", 0)):
        return cls(dec.vectors, dec.values, tuple(model))

    @classmethod
    def catmap(cls, N: int, A) -> "EigenBasis":
        """Eigenbasis of U_N(A), eigenphases ascending in [0, 2 pi)."""
        U = catmap_op(N, A)
        return cls.from_decomposition(eig_unitary(U), ("torus", int(N)))

    @classmethod
    def hecke(cls, level, spec: HeckeSpec) -> "EigenBasis":
        lv = _level(level)
        return cls.from_decomposition(joint_eigenbasis(lv, spec), ("sphere", lv.ell))


@dataclass(frozen=True)
class ElementSeries:
    """Matrix elements indexed by j (diagonal) or by pairs (i, j)."""

    indices: tuple
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise DimensionMismatch("indices and values differ in length")
        bound = self.metadata.get("norm_bound")
        if bound is not None and len(self.values) and np.abs(self.values).max() > bound + UNIT_TOL:
            raise ValueError("a matrix element exceeds the recorded operator-norm bound")

    def __len__(self):
        return len(self.values)

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Moment table index -> complex moment of a single state."""

    moments: dict
    kind: str
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.moments[tuple(key)]

    def __contains__(self, key):
        return tuple(key) in self.moments

    def __len__(self):
        return len(self.moments)


def _check_vector(phi, n: Optional[int] = None, unit: bool = True) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.complex128)
    if phi.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {phi.shape}")
    if n is not None and len(phi) != n:
        raise DimensionMismatch(f"vector of length {len(phi)} against a {n}x{n} operator")
    if unit and abs(np.linalg.norm(phi) - 1.0) > UNIT_TOL:
        raise ValueError(f"vector is not normalized (norm {np.linalg.norm(phi):.12f})")
    return phi


def _check_square(F, n: Optional[int] = None) -> np.ndarray:
    F = np.asarray(F, dtype=np.complex128)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {F.shape}")
    if n is not None and F.shape[0] != n:
        raise DimensionMismatch(f"operator of size {F.shape[0]} against dimension {n}")
    return F


def spectral_norm(F) -> float:
    return float(np.linalg.norm(np.asarray(F), 2))


def diag_element(F, phi) -> complex:
    """<F phi, phi>."""
    F = _check_square(F)
    phi = _check_vector(phi, F.shape[0])
    return complex(np.vdot(phi, F @ phi))


def offdiag_element(F, phi_i, phi_j) -> complex:
    """<F phi_i, phi_j>."""
    F = _check_square(F)
    phi_i = _check_vector(phi_i, F.shape[0])
    phi_j = _check_vector(phi_j, F.shape[0])
    return complex(np.vdot(phi_j, F @ phi_i))


def all_elements(F, basis: EigenBasis) -> np.ndarray:
    """Matrix R with R[i, j] = <F phi_j, phi_i> (so the diagonal holds rho_j(F))."""
    F = _check_square(F, basis.dim)
    V = basis.vectors
    return V.conj().T @ F @ V


def diagonal_series(F, basis: EigenBasis, description: str = "") -> ElementSeries:
    F = _check_square(F, basis.dim)
    V = basis.vectors
    vals = np.einsum("ij,ij->j", V.conj(), F @ V)
    meta = {"operator": description, "norm_bound": spectral_norm(F), "model": basis.model}
    return ElementSeries(tuple(range(basis.dim)), vals, meta)


def hecke_functional(A, B, T, u, eps: float = HECKE_EPS) -> Optional[complex]:
    """<A T B u, u> / <T u, u>, or None when |<T u, u>| < eps."""
    T = _check_square(T)
    A = _check_square(A, T.shape[0])
    B = _check_square(B, T.shape[0])
    u = _check_vector(u, T.shape[0])
    den = np.vdot(u, T @ u)
    if abs(den) < eps:
        return None
    return complex(np.vdot(u, A @ (T @ (B @ u))) / den)


def hecke_functionals(A, B, T, basis: EigenBasis, eps: float = HECKE_EPS):
    """Hecke functionals over a whole basis.

    Returns (series, skipped) where `series` holds the defined values and
    `skipped` lists the indices whose denominator fell below eps.
    """
    idx, vals, skipped = [], [], []
    for j in range(basis.dim):
        v = hecke_functional(A, B, T, basis.vector(j), eps)
        if v is None:
            skipped.append(j)
        else:
            idx.append(j)
            vals.append(v)
    meta = {"operator": "A T B / T", "eps": eps, "skipped": tuple(skipped)}
    return ElementSeries(tuple(idx), np.array(vals, dtype=np.complex128), meta), skipped


def left_right_functionals(F, A, phi):
    """(beta_L, beta_R) = (<A F phi, phi>, <F A phi, phi>)."""
    F = _check_square(F)
    A = _check_square(A, F.shape[0])
    phi = _check_vector(phi, F.shape[0])
    return complex(np.vdot(phi, A @ (F @ phi))), complex(np.vdot(phi, F @ (A @ phi)))


def time_average_discrete(F, U, M: int, t0: int = 1) -> np.ndarray:
    """<F>_M = (1/(2M+1)) sum_{m=-M}^{M} U^{-m t0} F U^{m t0}.

    Dividing by the number of terms makes <F>_M = F whenever F commutes with U.
    """
    U = _check_square(U)
    F = _check_square(F, U.shape[0])
    n = U.shape[0]
    if np.abs(U.conj().T @ U - np.eye(n)).max() > 1e-8:
        raise NotUnitary("time average needs a unitary propagator")
    if M < 0 or t0 < 1:
        raise ValueError("need M >= 0 and t0 >= 1")
    step = np.linalg.matrix_power(U, t0)
    stepH = step.conj().T
    total = F.copy()
    fwd = F.copy()  # U^{-m} F U^{m}
    bwd = F.copy()  # U^{m} F U^{-m}
    for _ in range(M):
        fwd = stepH @ fwd @ step
        bwd = step @ bwd @ stepH
        total += fwd + bwd
    return total / (2 * M + 1)


def variance_sum(F, basis: EigenBasis) -> float:
    """(1/dim) sum_j |<F phi_j, phi_j>|^2."""
    return float(np.mean(np.abs(diagonal_series(F, basis).values) ** 2))


def weyl_average_check(F, basis: EigenBasis):
    """(average of diagonal elements, |average - trace/dim|)."""
    F = _check_square(F, basis.dim)
    avg = complex(np.mean(diagonal_series(F, basis).values))
    tr = complex(np.trace(F)) / basis.dim
    return avg, abs(avg - tr)


def weyl_average(F, basis: EigenBasis) -> complex:
    """(1/dim) sum_j <F phi_j, phi_j>, cross-checked against trace(F)/dim."""
    avg, res = weyl_average_check(F, basis)
    scale = max(1.0, spectral_norm(F))
    if res > WEYL_TOL * scale:
        raise ArithmeticError(f"Weyl average differs from trace/dim by {res:.2e}")
    return avg


def density_one_fraction(series: ElementSeries, eps: float) -> float:
    """Fraction of entries with |value| < eps (1.0 for an empty series)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if len(series) == 0:
        return 1.0
    return float(np.mean(series.abs < eps))


def chebyshev_bound(variance: float, eps: float) -> float:
    """Lower bound 1 - S/eps^2 on the density-one fraction at threshold eps."""
    return 1.0 - variance / eps**2


def wigner_lift(phi, H, nmax: int) -> EmpiricalMeasure:
    """Moments W(n) = <T_N(n) phi, phi> for |n1|, |n2| <= nmax.

    With this convention T(n)^H = T(-n), so W(-n) = conj(W(n)) with phase 1.
    """
    N = _as_space(H).N
    phi = _check_vector(phi, N)
    check_aliasing(N, (nmax, nmax))
    moments = {}
    for n1 in range(-nmax, nmax + 1):
        for n2 in range(-nmax, nmax + 1):
            moments[(n1, n2)] = complex(np.vdot(phi, apply_translation(N, (n1, n2), phi)))
    return EmpiricalMeasure(moments, "torus", {"N": N, "nmax": nmax, "reflection_phase": 1.0})


def sphere_lift(u, level, Lmax: int) -> EmpiricalMeasure:
    """Moments m(L, M) = <Pi (Y_L^M .) Pi u, u> for L <= Lmax."""
    lv = _level(level)
    u = _check_vector(u, lv.dim)
    if not 0 <= Lmax <= 2 * lv.ell:
        raise OutOfRange(f"Lmax={Lmax} outside 0..{2 * lv.ell}")
    moments = {}
    for L in range(Lmax + 1):
        for M in range(-L, L + 1):
            moments[(L, M)] = complex(np.vdot(u, multiplication_op(lv, L, M) @ u))
    return EmpiricalMeasure(moments, "sphere", {"ell": lv.ell, "Lmax": Lmax})


def orbit_weights(A, H, z: TorusPoint, basis: EigenBasis) -> np.ndarray:
    """W[t, j] = |<psi_{z_t}, phi_j>|^2 along the periodic orbit of z."""
    N = _as_space(H).N
    if basis.dim != N:
        raise DimensionMismatch(f"basis of dimension {basis.dim} on the N={N} torus")
    _, orbit = periodic_orbit(A, z)
    Psi = np.array([coherent_state(N, w.as_floats()).vector for w in orbit])
    return np.abs(Psi.conj() @ basis.vectors) ** 2


def orbit_mass_profile(A, H, z: TorusPoint, basis: EigenBasis, j: int) -> np.ndarray:
    """Probability vector p_t = |<psi_{z_t}, phi_j>|^2 / sum_s |<psi_{z_s}, phi_j>|^2."""
    w = orbit_weights(A, H, z, basis)[:, j]
    total = w.sum()
    if total < MIN_MASS:
        raise ZeroMass(f"eigenvector {j} has no mass on the orbit of {z}")
    return w / total


def phase_gap(theta_i, theta_j, tau) -> np.ndarray:
    """Distance on the circle between theta_i - theta_j and tau."""
    d = np.mod(np.asarray(theta_i) - np.asarray(theta_j) - tau + np.pi, 2 * np.pi) - np.pi
    return np.abs(d)


@dataclass(frozen=True)
class GapBucket:
    tau: float
    delta: float
    count: int
    mean_abs: float
    mean_sq: float


def offdiag_bucket(F, basis: EigenBasis, tau: float, delta: float = 0.1) -> GapBucket:
    """Statistics of <F phi_i, phi_j>, i != j, over pairs with phase gap within delta of tau."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    R = all_elements(F, basis)
    th = np.asarray(basis.values, dtype=float)
    mask = phase_gap(th[:, None], th[None, :], tau) < delta
    np.fill_diagonal(mask, False)
    # R[j, i] = <F phi_i, phi_j> is paired with gap theta_i - theta_j
    vals = np.abs(R.T[mask])
    if vals.size == 0:
        return GapBucket(float(tau), float(delta), 0, math.nan, math.nan)
    return GapBucket(float(tau), float(delta), int(vals.size), float(vals.mean()), float(np.mean(vals**2)))


# --- Hecke identities on a joint eigenpair -----------------------------------


def _rotations(level: SphereLevel, spec: HeckeSpec):
    return [rotation_op(level, g) for g in spec.rotations]


def munuj_residual(a, u, lam: float, rotations: Sequence[np.ndarray]) -> float:
    """|lam <a u, u> - (1/2d) sum_k (<a D_k u, u> + <a D_k^H u, u>)|."""
    d = len(rotations)
    rhs = sum(np.vdot(u, a @ (D @ u)) + np.vdot(u, a @ (D.conj().T @ u)) for D in rotations) / (2 * d)
    return float(abs(lam * np.vdot(u, a @ u) - rhs))


def munuj_normalized_residual(a, u, lam: float, rotations, eps: float = HECKE_EPS) -> Optional[float]:
    """Same identity after dividing by <T u, u> = lam; None when |lam| < eps."""
    if abs(lam) < eps:
        return None
    return munuj_residual(a, u, lam, rotations) / abs(lam)


def cauchy_schwarz_slack(a, u, rotations) -> float:
    """Smallest slack over k of the right and left inequalities.

    right: <a^H a u, u> - |<D a u, u>|^2, left (a Hermitian):
    <(D a D^H)^2 u, u> - |<D a u, u>|^2.  Both are >= 0 exactly.
    """
    slack = math.inf
    aa = np.vdot(u, a.conj().T @ (a @ u)).real
    hermitian = np.abs(a - a.conj().T).max() <= 1e-12 * max(1.0, np.abs(a).max())
    for D in rotations:
        lhs = abs(np.vdot(u, D @ (a @ u))) ** 2
        slack = min(slack, aa - lhs)
        if hermitian:
            B = D @ a @ D.conj().T
            slack = min(slack, np.vdot(u, B @ (B @ u)).real - lhs)
    return float(slack)


def hecke_row_checks(level, spec: HeckeSpec, basis: EigenBasis, symbols, eps: float = HECKE_EPS):
    """Per eigenvector: (eigenvalue, skipped, munuj, munuj normalized, SA gap, CS slack).

    `symbols` are Hermitian test matrices (compressed real harmonics).
    """
    lv = _level(level)
    if not spec.symmetrized:
        raise ValueError("the Hecke identities are stated for the symmetrized operator")
    rots = _rotations(lv, spec)
    T = sum(D + D.conj().T for D in rots) / (2 * len(rots))
    rows = []
    for j in range(basis.dim):
        u = basis.vector(j)
        lam = float(basis.values[j])
        skipped = abs(np.vdot(u, T @ u)) < eps
        mu = max(munuj_residual(a, u, lam, rots) for a in symbols)
        norm = None if skipped else max(munuj_normalized_residual(a, u, lam, rots, eps) for a in symbols)
        gap = 0.0
        for a in symbols:
            bl, br = left_right_functionals(T, a, u)
            gap = max(gap, abs((bl - br).real))
        cs = min(cauchy_schwarz_slack(a, u, rots) for a in symbols)
        rows.append((lam, bool(skipped), mu, norm, gap, cs))
    return rows
