"""
Linear symplectic dynamics on the torus R^2 / Z^2.

Everything that can be decided with integers is: commuting loci come from
the integer commutator, and rational orbits are iterated over a common
denominator so hyperbolic maps never lose precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .errors import DegenerateFixedSet, OrbitTooLong


@dataclass(frozen=True)
class IntegerSymplecticMap:
    """2x2 integer matrix [[a, b], [c, d]] with ad - bc = 1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"entry {name}={v!r} is not an integer")
            object.__setattr__(self, name, int(v))
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self.rows} is not 1")

    @classmethod
    def coerce(cls, A) -> "IntegerSymplecticMap":
        if isinstance(A, cls):
            return A
        rows = np.asarray(A)
        if rows.shape == (2, 2):
            return cls(*(int(x) for x in rows.ravel()))
        if rows.shape == (4,):
            return cls(*(int(x) for x in rows))
        raise ValueError(f"cannot interpret {A!r} as a 2x2 integer matrix")

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @property
    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    @property
    def theta(self) -> bool:
        """True when the matrix is congruent to the identity mod 2."""
        return self.b % 2 == 0 and self.c % 2 == 0 and self.a % 2 == 1 and self.d % 2 == 1

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def hyperbolic(self) -> bool:
        return abs(self.trace) > 2

    def __matmul__(self, other):
        o = IntegerSymplecticMap.coerce(other)
        return IntegerSymplecticMap(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def __pow__(self, m: int):
        if m < 0:
            return self.inverse() ** (-m)
        out, base = IntegerSymplecticMap.identity(), self
        while m:
            if m & 1:
                out = out @ base
            base = base @ base
            m >>= 1
        return out

    def inverse(self):
        return IntegerSymplecticMap(self.d, -self.b, -self.c, self.a)

    def act(self, n):
        """Integer action on a lattice vector."""
        n1, n2 = int(n[0]), int(n[1])
        return (self.a * n1 + self.b * n2, self.c * n1 + self.d * n2)

    def __str__(self):
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


def commutator(A1, A2):
    """Integer matrix A1 A2 - A2 A1 as nested tuples."""
    A1, A2 = IntegerSymplecticMap.coerce(A1), IntegerSymplecticMap.coerce(A2)
    P, Q = A1 @ A2, A2 @ A1
    return ((P.a - Q.a, P.b - Q.b), (P.c - Q.c, P.d - Q.d))


@dataclass(frozen=True)
class TorusPoint:
    """Point of the torus; coordinates may be floats or Fractions, kept in [0, 1)."""

    q: object
    p: object

    def __post_init__(self):
        object.__setattr__(self, "q", self.q % 1)
        object.__setattr__(self, "p", self.p % 1)

    @classmethod
    def rational(cls, n1: int, n2: int, Q: int):
        return cls(Fraction(n1, Q), Fraction(n2, Q))

    def as_floats(self):
        return (float(self.q), float(self.p))


def apply_map(A, z: TorusPoint) -> TorusPoint:
    A = IntegerSymplecticMap.coerce(A)
    return TorusPoint(A.a * z.q + A.b * z.p, A.c * z.q + A.d * z.p)


def circle_distance(x, y) -> float:
    t = float((x - y) % 1)
    return min(t, 1.0 - t)


def torus_distance(z: TorusPoint, w: TorusPoint) -> float:
    return max(circle_distance(z.q, w.q), circle_distance(z.p, w.p))


def commuting_locus_measure(A1, A2) -> float:
    """Lebesgue measure of {z : A1 A2 z = A2 A1 z mod Z^2}; exactly 0 or 1."""
    D = commutator(A1, A2)
    return 1.0 if all(x == 0 for row in D for x in row) else 0.0


def sampled_commuting_fraction(A1, A2, grid: int, tol: float) -> float:
    """Fraction of the grid x grid lattice points where the two maps commute to within tol.

    Grid points have denominator `grid`, so the images are computed with
    integers and the distance is exact.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    (d11, d12), (d21, d22) = commutator(A1, A2)
    i = np.arange(grid, dtype=np.int64)[:, None]
    k = np.arange(grid, dtype=np.int64)[None, :]
    # D z mod 1 has numerators (D (i, k)) mod grid
    r1 = (d11 % grid * i + d12 % grid * k) % grid
    r2 = (d21 % grid * i + d22 % grid * k) % grid
    dist1 = np.minimum(r1, grid - r1) / grid
    dist2 = np.minimum(r2, grid - r2) / grid
    hits = np.maximum(dist1, dist2) < tol
    return float(hits.sum()) / grid**2


def iterated_commuting_profile(A1, A2, M: int) -> list:
    """Entry m-1 is the commuting-locus measure of (A1^m, A2), m = 1..M."""
    if M < 1:
        raise ValueError("M must be >= 1")
    A1 = IntegerSymplecticMap.coerce(A1)
    return [commuting_locus_measure(A1**m, A2) for m in range(1, M + 1)]


def fixed_points_count(A) -> int:
    A = IntegerSymplecticMap.coerce(A)
    det = (A.a - 1) * (A.d - 1) - A.b * A.c
    if det == 0:
        raise DegenerateFixedSet(f"{A} has eigenvalue 1; its fixed set is not finite")
    return abs(det)


def fixed_points(A) -> list:
    """Brute-force list of fixed points; they all have denominator |det(A - I)|."""
    A = IntegerSymplecticMap.coerce(A)
    Q = fixed_points_count(A)
    out = []
    for i in range(Q):
        for k in range(Q):
            if ((A.a - 1) * i + A.b * k) % Q == 0 and (A.c * i + (A.d - 1) * k) % Q == 0:
                out.append(TorusPoint.rational(i, k, Q))
    return out


def periodic_orbit(A, z: TorusPoint):
    """(period, orbit) of a rational point, orbit listed in time order from z."""
    A = IntegerSymplecticMap.coerce(A)
    q, p = Fraction(z.q), Fraction(z.p)
    Q = lcm(q.denominator, p.denominator)
    if Q > 10**6:
        raise ValueError(f"common denominator {Q} exceeds 10^6")
    start = ((q * Q).numerator % Q, (p * Q).numerator % Q)
    orbit = [start]
    cur = start
    while True:
        cur = ((A.a * cur[0] + A.b * cur[1]) % Q, (A.c * cur[0] + A.d * cur[1]) % Q)
        if cur == start:
            break
        orbit.append(cur)
        if len(orbit) > Q * Q:
            raise OrbitTooLong(f"orbit of {z} under {A} exceeds {Q * Q} points")
    return len(orbit), [TorusPoint.rational(x, y, Q) for x, y in orbit]
