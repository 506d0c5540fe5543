"""
Rotations, Hecke operators and compressed multiplication operators on
degree-ell spherical harmonics of S^2.

Basis: complex harmonics Y_ell^m (Condon-Shortley phase), ordered m = -ell..ell.
Rotations use ZYZ Euler angles with D_{m'm}(a, b, g) = e^{-i m' a} d_{m'm}(b) e^{-i m g},
d(b) = exp(-i b J_y).  With this convention Y(g^{-1} x) = sum_{m'} Y_{m'}(x) D_{m'm}(g),
so the pull-back f -> f(g x) acts on H_ell by D(g)^H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import OutOfRange
from .numerics import EigenDecomposition, eigh_hermitian, fix_phases

MAX_ELL = 200
RACAH_MAX_J = 30


@dataclass(frozen=True)
class SphereLevel:
    ell: int

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 0:
            raise ValueError(f"ell must be a nonnegative integer, got {self.ell}")
        if self.ell > MAX_ELL:
            raise OutOfRange(f"ell={self.ell} exceeds the supported maximum {MAX_ELL}")
        object.__setattr__(self, "ell", int(self.ell))

    @property
    def dim(self) -> int:
        return 2 * self.ell + 1

    @property
    def ms(self) -> np.ndarray:
        return np.arange(-self.ell, self.ell + 1)


def _level(level) -> SphereLevel:
    return level if isinstance(level, SphereLevel) else SphereLevel(int(level))


@dataclass(frozen=True)
class RotationSpec:
    """ZYZ Euler angles (radians), stored reduced mod 2 pi."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"Euler angle {name} is not finite")
            object.__setattr__(self, name, v % (2 * math.pi))

    def matrix(self) -> np.ndarray:
        return _rz(self.alpha) @ _ry(self.beta) @ _rz(self.gamma)

    @classmethod
    def from_matrix(cls, R) -> "RotationSpec":
        """Euler angles of a 3x3 rotation (gimbal lock resolved with gamma = 0)."""
        R = np.asarray(R, dtype=float)
        cb = min(1.0, max(-1.0, R[2, 2]))
        sb = math.hypot(R[2, 0], R[2, 1])
        beta = math.atan2(sb, cb)
        if sb > 1e-12:
            alpha = math.atan2(R[1, 2], R[0, 2])
            gamma = math.atan2(R[2, 1], -R[2, 0])
        else:
            gamma = 0.0
            if cb > 0:
                alpha = math.atan2(R[1, 0], R[0, 0])
            else:
                alpha = math.atan2(-R[1, 0], -R[0, 0])
        return cls(alpha, beta, gamma)

    def compose(self, other: "RotationSpec") -> "RotationSpec":
        return RotationSpec.from_matrix(self.matrix() @ other.matrix())

    def inverse(self) -> "RotationSpec":
        return RotationSpec(-self.gamma, -self.beta, -self.alpha)


def _rz(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def random_rotation(rng: np.random.Generator) -> RotationSpec:
    """Haar-random rotation."""
    alpha, gamma = rng.uniform(0, 2 * math.pi, size=2)
    beta = math.acos(rng.uniform(-1.0, 1.0))
    return RotationSpec(alpha, beta, gamma)


@dataclass(frozen=True)
class HeckeSpec:
    rotations: tuple
    symmetrized: bool = True

    def __post_init__(self):
        rots = tuple(r if isinstance(r, RotationSpec) else RotationSpec(*r) for r in self.rotations)
        if not rots:
            raise ValueError("a Hecke operator needs at least one rotation")
        object.__setattr__(self, "rotations", rots)

    @property
    def d(self) -> int:
        return len(self.rotations)


# --- three-term recursions -------------------------------------------------


def _run(a, b, c, x0, x1, forward: bool, stop=None):
    """Iterate a_i x_{i+1} + b_i x_i + c_i x_{i-1} = 0 in one direction.

    Values are kept as mantissa * exp(log-scale) so neither overflow nor
    underflow destroys the magnitude information.  Returns log|x| and the
    signed mantissas (x = mant * exp(logscale)).
    """
    n = len(b)
    mant = np.zeros(n)
    scale = np.zeros(n)
    order = range(1, n - 1 if stop is None else min(stop, n - 1)) if forward else range(n - 2, 0, -1)
    step = 1 if forward else -1
    i0 = 0 if forward else n - 1
    mant[i0], mant[i0 + step] = x0, x1
    u, v, S = x0, x1, 0.0  # u = x_{i-step}, v = x_i, both relative to exp(S)
    for i in order:
        if forward:
            w = -(b[i] * v + c[i] * u) / a[i]
        else:
            w = -(b[i] * v + a[i] * u) / c[i]
        big = max(abs(v), abs(w))
        if big > 0:
            u, v, S = v / big, w / big, S + math.log(big)
        else:
            u, v = v, w
        mant[i + step] = v
        scale[i + step] = S
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(mant)) + scale
    return logmag, mant, scale


def _match_index(logmag) -> int:
    """Index k such that k, k+1 lie where the backward solution is still growing.

    Scanning down from the top, the backward run is stable until its envelope
    (max of two neighbours, to ride over parity zeros) stops growing; the
    forward run is stable up to there because it only crosses the growing or
    oscillatory part of the sequence.
    """
    n = len(logmag)
    env = np.maximum(logmag[:-1], logmag[1:])
    i = n - 2
    while i > 0 and env[i - 1] >= env[i]:
        i -= 1
    return min(max(i, 0), n - 2)


def _relative(mant, scale, ref_log):
    with np.errstate(under="ignore"):
        return mant * np.exp(scale - ref_log)


def _two_sided(a, b, c, forward_seed=None):
    """Nontrivial solution of a tridiagonal null problem, up to a positive scale
    fixed so the last component carries the sign of the backward seed (+1)."""
    n = len(b)
    if n == 1:
        return np.ones(1)
    if forward_seed is None:
        forward_seed = (1.0, -b[0] / a[0])
    lb, mb, sb = _run(a, b, c, 1.0, -b[n - 1] / c[n - 1], False)
    k = _match_index(lb)
    lf, mf, sf = _run(a, b, c, forward_seed[0], forward_seed[1], True, stop=k + 1)
    xb = _relative(mb[k:], sb[k:], lb[k:].max())
    xf = _relative(mf[: k + 2], sf[: k + 2], lf[: k + 2].max())
    num = xf[k] * xb[0] + xf[k + 1] * xb[1]
    den = xf[k] ** 2 + xf[k + 1] ** 2
    return np.concatenate([xf[: k + 1] * (num / den), xb[1:]])


# --- Wigner small-d ----------------------------------------------------------


def _d_column(ell: int, m: int, beta: float) -> np.ndarray:
    """Column m of d^ell(beta): eigenvector of cos(b) J_z + sin(b) J_x with eigenvalue m."""
    mp = np.arange(-ell, ell + 1, dtype=float)
    L = ell * (ell + 1)
    cp = 0.5 * np.sqrt(np.maximum(L - mp * (mp + 1), 0.0))
    cm = 0.5 * np.sqrt(np.maximum(L - mp * (mp - 1), 0.0))
    sb = math.sin(beta)
    a = sb * cp
    b = (mp - m) - 2.0 * math.sin(beta / 2) ** 2 * mp  # cos(b) m' - m without cancellation
    c = sb * cm
    v = _two_sided(a, b, c)
    v /= np.linalg.norm(v)
    # top entry d_{ell,m} = (-1)^{ell-m} sqrt(C(2l, l+m)) cos^{l+m}(b/2) sin^{l-m}(b/2)
    ch, sh = math.cos(beta / 2), math.sin(beta / 2)
    sign = (-1) ** (ell - m)
    if ch < 0 and (ell + m) % 2:
        sign = -sign
    if sh < 0 and (ell - m) % 2:
        sign = -sign
    return sign * v


def _wigner_d_direct(ell: int, beta: float) -> np.ndarray:
    n = 2 * ell + 1
    out = np.empty((n, n))
    for i, m in enumerate(range(-ell, ell + 1)):
        out[:, i] = _d_column(ell, m, beta)
    return out


def _d_pi(ell: int) -> np.ndarray:
    # d_{m'm}(pi) = (-1)^{ell+m} delta_{m',-m}
    n = 2 * ell + 1
    out = np.zeros((n, n))
    for i, m in enumerate(range(-ell, ell + 1)):
        out[n - 1 - i, i] = (-1) ** (ell + m)
    return out


def wigner_d(level, beta: float) -> np.ndarray:
    """Real orthogonal matrix d^ell(beta) = exp(-i beta J_y), rows/cols m = -ell..ell.

    beta is folded into [0, pi/2] with d(-b) = d(b)^T and d(pi + b) = d(pi) d(b),
    then each column is obtained by the two-sided recursion.
    """
    ell = _level(level).ell
    beta = float(beta) % (2 * math.pi)
    transpose = False
    if beta > math.pi:
        beta, transpose = 2 * math.pi - beta, True
    flip = beta > math.pi / 2
    if flip:
        # d(b) = d(pi) d(b - pi) = d(pi) d(pi - b)^T
        beta = math.pi - beta
    if beta < 1e-300:
        d = np.eye(2 * ell + 1)
    else:
        d = _wigner_d_direct(ell, beta)
    if flip:
        d = _d_pi(ell) @ d.T
    return d.T if transpose else d


def rotation_op(level, g) -> np.ndarray:
    """Wigner D^ell(g) for ZYZ Euler angles g."""
    lv = _level(level)
    g = g if isinstance(g, RotationSpec) else RotationSpec(*g)
    ms = lv.ms
    left = np.exp(-1j * ms * g.alpha)
    right = np.exp(-1j * ms * g.gamma)
    return left[:, None] * wigner_d(lv, g.beta) * right[None, :]


def hecke_op(level, spec: HeckeSpec) -> np.ndarray:
    """T restricted to H_ell: (1/2d) sum_j (D(g_j) + D(g_j)^H).

    With spec.symmetrized False the inverses are dropped: (1/d) sum_j D(g_j).
    """
    lv = _level(level)
    total = np.zeros((lv.dim, lv.dim), dtype=np.complex128)
    for g in spec.rotations:
        D = rotation_op(lv, g)
        total += D + D.conj().T if spec.symmetrized else D
    return total / (2 * spec.d if spec.symmetrized else spec.d)


# --- 3j symbols and Gaunt coefficients --------------------------------------


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def _triangle(j1, j2, j3) -> bool:
    return abs(j1 - j2) <= j3 <= j1 + j2


def wigner_3j_racah(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    """Exact Racah sum for integer arguments (rational arithmetic, then one sqrt)."""
    if m1 + m2 + m3 != 0 or not _triangle(j1, j2, j3):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    f = _fact
    tri = Fraction(f(j1 + j2 - j3) * f(j1 - j2 + j3) * f(-j1 + j2 + j3), f(j1 + j2 + j3 + 1))
    pref = tri * f(j1 + m1) * f(j1 - m1) * f(j2 + m2) * f(j2 - m2) * f(j3 + m3) * f(j3 - m3)
    kmin = max(0, j2 - j3 - m1, j1 - j3 + m2)
    kmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = f(k) * f(j3 - j2 + k + m1) * f(j3 - j1 + k - m2) * f(j1 + j2 - j3 - k) * f(j1 - k - m1) * f(j2 - k + m2)
        s += Fraction((-1) ** k, den)
    if s == 0:
        return 0.0
    sign = (-1) ** ((j1 - j2 - m3) % 2) * (1 if s > 0 else -1)
    return sign * math.sqrt(float(s * s * pref))


def wigner_3j_series(j2: int, j3: int, m2: int, m3: int):
    """All (j1 j2 j3; -m2-m3 m2 m3) for admissible j1, by three-term recursion in j1.

    Returns (j1min, values).
    """
    m1 = -m2 - m3
    jmin = max(abs(j2 - j3), abs(m1))
    jmax = j2 + j3
    if jmin > jmax or abs(m2) > j2 or abs(m3) > j3:
        return jmin, np.zeros(0)
    js = np.arange(jmin, jmax + 1, dtype=float)

    def A(j):
        return np.sqrt(np.maximum((j * j - (j2 - j3) ** 2) * ((j2 + j3 + 1) ** 2 - j * j) * (j * j - m1 * m1), 0.0))

    B = -(2 * js + 1) * (j2 * (j2 + 1) * m1 - j3 * (j3 + 1) * m1 - js * (js + 1) * (m3 - m2))
    a = js * A(js + 1)
    c = (js + 1) * A(js)
    seed = None
    if jmin == 0 and jmax > 0:
        # j1 = 0 row is 0 = 0; take the first ratio from the closed form
        r0 = wigner_3j_racah(0, j2, j3, m1, m2, m3)
        r1 = wigner_3j_racah(1, j2, j3, m1, m2, m3)
        seed = (1.0, r1 / r0)
    v = _two_sided(a, B, c, seed)
    v /= math.sqrt(np.sum((2 * js + 1) * v * v))
    sign = (-1) ** ((j2 - j3 - m1) % 2)
    if v[-1] * sign < 0:
        v = -v
    return jmin, v


def gaunt(l1: int, m1: int, l2: int, m2: int, l3: int, m3: int, method: str = "auto") -> float:
    """Integral over S^2 of conj(Y_l1^m1) Y_l2^m2 Y_l3^m3."""
    if m1 != m2 + m3:
        return 0.0
    if method == "auto":
        method = "racah" if max(l1, l2, l3) <= RACAH_MAX_J else "recursion"
    if method == "racah":
        a = wigner_3j_racah(l1, l2, l3, 0, 0, 0)
        b = wigner_3j_racah(l1, l2, l3, -m1, m2, m3)
    else:
        a = _series_value(l1, l2, l3, 0, 0, 0)
        b = _series_value(l1, l2, l3, -m1, m2, m3)
    pref = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1) / (4 * math.pi))
    return (-1) ** (m1 % 2) * pref * a * b


def _series_value(j1, j2, j3, m1, m2, m3) -> float:
    if m1 + m2 + m3 != 0 or not _triangle(j1, j2, j3):
        return 0.0
    jmin, vals = wigner_3j_series(j2, j3, m2, m3)
    k = j1 - jmin
    return float(vals[k]) if 0 <= k < len(vals) else 0.0


def multiplication_op(level, L: int, M: int, method: str = "auto") -> np.ndarray:
    """Compression Pi_ell (Y_L^M .) Pi_ell; entry (m', m) = <Y^{m'}, Y_L^M Y^m>."""
    lv = _level(level)
    ell = lv.ell
    if not (0 <= L <= 2 * ell) or abs(M) > L:
        raise OutOfRange(f"(L, M) = ({L}, {M}) outside 0 <= L <= {2 * ell}, |M| <= L")
    n = lv.dim
    out = np.zeros((n, n), dtype=np.complex128)
    if L % 2:
        return out
    if method == "auto":
        method = "racah" if ell <= RACAH_MAX_J else "recursion"
    pref = math.sqrt((2 * ell + 1) ** 2 * (2 * L + 1) / (4 * math.pi))
    if method == "racah":
        parity = wigner_3j_racah(ell, L, ell, 0, 0, 0)
    else:
        parity = _series_value(L, ell, ell, 0, 0, 0)  # cyclic permutation of (ell L ell)
    for m in range(-ell, ell + 1):
        mp = m + M
        if abs(mp) > ell:
            continue
        if method == "racah":
            w = wigner_3j_racah(ell, L, ell, -mp, M, m)
        else:
            w = _series_value(L, ell, ell, M, m, -mp)
        out[mp + ell, m + ell] = (-1) ** (mp % 2) * pref * parity * w
    return out


def real_basis_transform(level) -> np.ndarray:
    """Unitary C with columns expressing real harmonics S_ell^k in the complex basis.

    S^0 = Y^0; for k > 0, S^k = ((-1)^k Y^k + Y^{-k}) / sqrt 2 and
    S^{-k} = i (Y^{-k} - (-1)^k Y^k) / sqrt 2.
    """
    ell = _level(level).ell
    n = 2 * ell + 1
    C = np.zeros((n, n), dtype=np.complex128)
    r = 1 / math.sqrt(2)
    for k in range(-ell, ell + 1):
        col = k + ell
        if k == 0:
            C[ell, col] = 1.0
        elif k > 0:
            C[k + ell, col] = (-1) ** k * r
            C[-k + ell, col] = r
        else:
            q = -k
            C[-q + ell, col] = 1j * r
            C[q + ell, col] = -1j * (-1) ** q * r
    return C


def real_multiplication_op(level, L: int, M: int, method: str = "auto") -> np.ndarray:
    """Compressed multiplication by the real harmonic S_L^M (a Hermitian matrix)."""
    C = real_basis_transform(L)
    out = np.zeros((_level(level).dim,) * 2, dtype=np.complex128)
    for Mp in range(-L, L + 1):
        coef = C[Mp + L, M + L]
        if coef != 0:
            out += coef * multiplication_op(level, L, Mp, method)
    return out


# --- joint eigenbasis ---------------------------------------------------------


def joint_eigenbasis(level, spec: HeckeSpec, cluster_tol: float = 1e-10) -> EigenDecomposition:
    """Eigenpairs of T on H_ell (all of them Laplace eigenfunctions with eigenvalue ell(ell+1)).

    Inside a degenerate T-eigenspace the basis is pinned down by diagonalizing
    the compressed multiplication by Y_2^0 restricted to that eigenspace.
    """
    lv = _level(level)
    T = hecke_op(lv, spec)
    dec = eigh_hermitian(T)
    if lv.ell == 0:
        return dec
    V = np.array(dec.vectors)
    w = dec.values
    pin = multiplication_op(lv, 2, 0)
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > cluster_tol:
            if k - start > 1:
                W = V[:, start:k]
                sub = W.conj().T @ pin @ W
                inner = eigh_hermitian(0.5 * (sub + sub.conj().T))
                V[:, start:k] = W @ inner.vectors
            start = k
    return EigenDecomposition(w.copy(), fix_phases(V))
