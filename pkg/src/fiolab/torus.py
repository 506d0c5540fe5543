"""
Quantum mechanics on the 2-torus with Planck constant 1/(2 pi N).

Position basis e_j, j = 0..N-1, sits at q = j/N.  With the clock M and
shift S (M e_j = e^{2 pi i j/N} e_j, S e_j = e_{j+1}) the Heisenberg
translations are

    T(n) = exp(i pi n1 n2 / N) S^{n2} M^{n1},

which obey T(m) T(n) = exp(i pi (m1 n2 - m2 n1) / N) T(m + n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .classical import IntegerSymplecticMap
from .errors import AliasedCoefficient, NotThetaGroup, QuantizationFailure

UNITARITY_TOL = 1e-10
EGOROV_TOL = 1e-8


@dataclass(frozen=True)
class TorusHilbert:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"torus dimension must be an integer >= 2, got {self.N}")


def _as_space(H) -> TorusHilbert:
    return H if isinstance(H, TorusHilbert) else TorusHilbert(int(H))


def _phase(n1: int, n2: int, N: int) -> complex:
    # exp(i pi n1 n2 / N) with the exponent reduced exactly mod 2N
    k = (int(n1) * int(n2)) % (2 * N)
    return complex(np.exp(1j * np.pi * k / N))


def apply_translation(N: int, n, v: np.ndarray) -> np.ndarray:
    """T_N(n) v without forming the matrix (works on stacked columns too)."""
    n1, n2 = int(n[0]), int(n[1])
    j = np.arange(N)
    clock = np.exp(2j * np.pi * ((n1 * j) % N) / N)
    w = clock.reshape((N,) + (1,) * (v.ndim - 1)) * v
    return _phase(n1, n2, N) * np.roll(w, n2 % N, axis=0)


def translation_op(H, n) -> np.ndarray:
    """Matrix of the Heisenberg translation T_N(n)."""
    N = _as_space(H).N
    return apply_translation(N, n, np.eye(N, dtype=np.complex128))


@dataclass(frozen=True)
class TorusObservable:
    """Trigonometric polynomial f(z) = sum_n c_n T-symbol, given by its Fourier table."""

    coefficients: Mapping[tuple, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {(int(k[0]), int(k[1])): complex(v) for k, v in dict(self.coefficients).items()}
        object.__setattr__(self, "coefficients", clean)

    @property
    def is_real(self) -> bool:
        c = self.coefficients
        for (n1, n2), v in c.items():
            w = c.get((-n1, -n2), 0.0)
            if abs(w - np.conj(v)) > 1e-14 * max(1.0, abs(v)):
                return False
        return True

    @classmethod
    def fourier_mode(cls, n1: int, n2: int, amplitude: complex = 1.0):
        return cls({(n1, n2): amplitude})

    @classmethod
    def cosine(cls, n1: int, n2: int):
        """cos(2 pi (n1 q - n2 p)) in the convention of T_N."""
        return cls({(n1, n2): 0.5, (-n1, -n2): 0.5})


def check_aliasing(N: int, n) -> None:
    if abs(int(n[0])) >= N or abs(int(n[1])) >= N:
        raise AliasedCoefficient(f"lattice index {tuple(n)} aliases for N={N}")


def weyl_quantize(H, f: TorusObservable) -> np.ndarray:
    """Op_N(f) = sum_n f_n T_N(n)."""
    N = _as_space(H).N
    out = np.zeros((N, N), dtype=np.complex128)
    for n, amp in f.coefficients.items():
        check_aliasing(N, n)
        if amp != 0:
            out += amp * translation_op(N, n)
    return out


def catmap_op(H, A) -> np.ndarray:
    """Unitary quantization U_N(A) of a theta-group cat map.

    U is built as the intertwiner with U T(n) U^H = T(A n) for all n, which
    is the same as U^H T(n) U = T(A^{-1} n).  Column j is T(j A e2) f0, where
    f0 is the fixed unit vector of T(A e1) (obtained from its spectral
    projector).  The global phase is fixed by the eigenvector convention of
    the numerics module, not by any Maslov-type rule.
    """
    N = _as_space(H).N
    A = IntegerSymplecticMap.coerce(A)
    if not A.theta:
        raise NotThetaGroup(f"{A} is not congruent to the identity mod 2")
    a, b, c, d = A.a, A.b, A.c, A.d

    eye = np.eye(N, dtype=np.complex128)
    P = np.zeros((N, N), dtype=np.complex128)
    for k in range(N):
        P += apply_translation(N, (k * a, k * c), eye)
    P /= N
    col = int(np.argmax(np.linalg.norm(P, axis=0)))
    f0 = P[:, col]
    f0 = f0 / np.linalg.norm(f0)
    lead = f0[np.argmax(np.abs(f0))]
    f0 = f0 * (abs(lead) / lead)

    U = np.empty((N, N), dtype=np.complex128)
    for j in range(N):
        U[:, j] = apply_translation(N, (j * b, j * d), f0)

    G = U.conj().T @ U
    if np.abs(G - np.eye(N)).max() > 1e-8:
        raise QuantizationFailure(f"Gram matrix of U_N({A}) is not the identity (N={N})")
    return U


def unitarity_residual(U) -> float:
    U = np.asarray(U)
    return float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max())


def egorov_residual(U, A, n) -> float:
    """min over unimodular c of max|U^H T(n) U - c T(A^{-1} n)|."""
    U = np.asarray(U)
    N = U.shape[0]
    A = IntegerSymplecticMap.coerce(A)
    lhs = U.conj().T @ apply_translation(N, n, U)
    rhs = translation_op(N, A.inverse().act(n))
    overlap = np.vdot(rhs, lhs)
    c = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.abs(lhs - c * rhs).max())


def max_egorov_residual(U, A, radius: int = 3) -> float:
    return max(
        egorov_residual(U, A, (n1, n2))
        for n1 in range(-radius, radius + 1)
        for n2 in range(-radius, radius + 1)
    )


@dataclass(frozen=True)
class CoherentState:
    center: tuple
    N: int
    vector: np.ndarray


def coherent_state(H, center) -> CoherentState:
    """Periodized minimal-uncertainty Gaussian centered at (q, p) in [0,1)^2.

    psi_j ~ sum_k exp(-pi N (x_j - q + k)^2 + 2 pi i N p (x_j - q + k)), x_j = j/N.
    """
    N = _as_space(H).N
    q, p = float(center[0]), float(center[1])
    if not (0.0 <= q < 1.0 and 0.0 <= p < 1.0):
        raise ValueError(f"coherent-state center must lie in [0,1)^2, got {center}")
    sigma = 1.0 / math.sqrt(2.0 * math.pi * N)
    # images further than 9 sigma contribute below exp(-40)
    kmax = int(math.ceil(9.0 * sigma)) + 1
    x = np.arange(N) / N - q
    psi = np.zeros(N, dtype=np.complex128)
    for k in range(-kmax, kmax + 1):
        y = x + k
        psi += np.exp(-math.pi * N * y * y + 2j * math.pi * N * p * y)
    psi /= np.linalg.norm(psi)
    psi.setflags(write=False)
    return CoherentState((q, p), N, psi)
