import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fiolab.classical import IntegerSymplecticMap, TorusPoint, periodic_orbit
from fiolab.errors import AliasedCoefficient, DimensionMismatch, OutOfRange, ZeroMass
from fiolab.matrix_elements import (
    EigenBasis,
    ElementSeries,
    cauchy_schwarz_slack,
    chebyshev_bound,
    density_one_fraction,
    diag_element,
    diagonal_series,
    hecke_functional,
    hecke_functionals,
    hecke_row_checks,
    left_right_functionals,
    munuj_normalized_residual,
    munuj_residual,
    offdiag_bucket,
    offdiag_element,
    orbit_mass_profile,
    phase_gap,
    sphere_lift,
    time_average_discrete,
    variance_sum,
    weyl_average,
    weyl_average_check,
    wigner_lift,
)
from fiolab.sphere import (
    HeckeSpec,
    RotationSpec,
    hecke_op,
    multiplication_op,
    random_rotation,
    real_multiplication_op,
    rotation_op,
)
from fiolab.torus import catmap_op, translation_op

A1 = ((1, 2), (2, 5))
A2 = ((5, 2), (2, 1))


@pytest.fixture(scope="module")
def torus16():
    return EigenBasis.catmap(16, A1), catmap_op(16, A1)


def unit(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def test_eigenbasis_validation():
    with pytest.raises(ValueError):
        EigenBasis(np.ones((2, 2)), np.zeros(2))
    with pytest.raises(DimensionMismatch):
        EigenBasis(np.eye(3)[:, :2], np.zeros(2))
    b = EigenBasis(np.eye(3), np.zeros(3), ("torus", 3))
    assert b.dim == 3 and len(b) == 3


def test_diag_element_examples(torus16):
    basis, U = torus16
    phi = basis.vector(3)
    assert diag_element(np.eye(16), phi) == pytest.approx(1.0)
    val = diag_element(U, phi)
    assert abs(val) == pytest.approx(1.0, abs=1e-12)
    assert val == pytest.approx(np.exp(1j * basis.values[3]), abs=1e-10)
    e0 = np.zeros(4)
    e0[0] = 1
    # T(1,0) is diagonal and T(0,1) shifts: the shift has zero diagonal
    assert diag_element(translation_op(4, (0, 1)), e0) == 0
    with pytest.raises(DimensionMismatch):
        diag_element(np.eye(3), e0)
    with pytest.raises(ValueError):
        diag_element(np.eye(4), 2 * e0)


def test_offdiag_conjugation_law():
    N = 8
    basis = EigenBasis.catmap(N, A1)
    U = catmap_op(N, A1)
    F = translation_op(N, (1, 0))
    th = basis.values
    for t in (1, 2, 5):
        Ut = np.linalg.matrix_power(U, t)
        G = Ut.conj().T @ F @ Ut
        for i in range(N):
            for j in range(N):
                lhs = offdiag_element(G, basis.vector(i), basis.vector(j))
                rhs = np.exp(1j * t * (th[i] - th[j])) * offdiag_element(F, basis.vector(i), basis.vector(j))
                assert abs(lhs - rhs) <= 1e-8
    assert offdiag_element(np.eye(N), basis.vector(0), basis.vector(1)) == pytest.approx(0, abs=1e-12)
    assert offdiag_element(np.eye(N), basis.vector(2), basis.vector(2)) == pytest.approx(1)


def test_left_right(torus16):
    basis, U = torus16
    A = translation_op(16, (1, 2))
    phi = basis.vector(5)
    bl, br = left_right_functionals(U, A, phi)
    assert abs(bl - br) <= 1e-10
    # F A = (F A F^-1) F, so beta_R(A) = beta_L(F A F^H) for unitary F
    psi = unit(16, 0)
    _, br = left_right_functionals(U, A, psi)
    bl2, _ = left_right_functionals(U, U @ A @ U.conj().T, psi)
    assert abs(br - bl2) <= 1e-10
    D = np.diag(np.arange(16.0))
    bl, br = left_right_functionals(D, np.diag(np.ones(16) * 2), psi)
    assert bl == pytest.approx(br)


def test_time_average(torus16):
    basis, U = torus16
    assert np.allclose(time_average_discrete(np.eye(16), U, 4), np.eye(16))
    assert np.allclose(time_average_discrete(U, U, 4), U, atol=1e-12)
    F = translation_op(16, (1, 0))
    Fa = time_average_discrete(F, U, 8)
    before = diagonal_series(F, basis).values
    after = diagonal_series(Fa, basis).values
    assert np.abs(before - after).max() <= 1e-9
    # averaging can only shrink the Hilbert-Schmidt norm, which bounds the variance sum
    assert variance_sum(F, basis) <= np.linalg.norm(Fa) ** 2 / 16 + 1e-12


def test_invariance_of_diagonal(torus16):
    basis, U = torus16
    F = translation_op(16, (2, 1))
    G = U.conj().T @ F @ U
    assert np.abs(diagonal_series(G, basis).values - diagonal_series(F, basis).values).max() <= 1e-9


def test_variance_sum_examples(torus16):
    basis, U = torus16
    assert variance_sum(np.eye(16), basis) == pytest.approx(1.0)
    assert variance_sum(U, basis) == pytest.approx(1.0, abs=1e-12)
    s16 = variance_sum(catmap_op(16, A2), basis)
    s64 = variance_sum(catmap_op(64, A2), EigenBasis.catmap(64, A1))
    assert s64 < s16
    assert 0 <= s16 <= 1 + 1e-12


def test_crossed_variance_golden():
    # oracle: the same sum in a Schur eigenbasis of U_N(A1) (scipy) equals 8/N for N = 32, 64
    for N in (32, 64):
        assert variance_sum(catmap_op(N, A2), EigenBasis.catmap(N, A1)) == pytest.approx(8 / N, abs=1e-12)


def test_weyl_average(torus16):
    basis, U = torus16
    assert weyl_average(np.eye(16), basis) == pytest.approx(1.0)
    assert abs(weyl_average(translation_op(16, (3, 1)), basis)) <= 1e-12
    avg, res = weyl_average_check(U, basis)
    assert res <= 1e-10
    assert avg == pytest.approx(np.trace(U) / 16)


def test_weyl_trace_bound_small_N():
    # |tr U_N(A)| is at most sqrt(#fixed points mod N); the average therefore decays like 1/sqrt(N)
    for N in (16, 32, 64, 128):
        avg = weyl_average(catmap_op(N, A1), EigenBasis.catmap(N, A1))
        assert abs(avg) <= 2 / math.sqrt(N) + 1e-12


def test_density_one_fraction():
    zeros = ElementSeries(tuple(range(4)), np.zeros(4))
    assert density_one_fraction(zeros, 0.1) == 1.0
    ones = ElementSeries(tuple(range(4)), np.ones(4))
    assert density_one_fraction(ones, 0.5) == 0.0
    assert density_one_fraction(ElementSeries((), np.zeros(0)), 0.5) == 1.0
    with pytest.raises(ValueError):
        density_one_fraction(ones, 0)


def test_density_crossed_n128():
    basis = EigenBasis.catmap(128, A1)
    s = diagonal_series(catmap_op(128, A2), basis)
    S = float(np.mean(s.abs**2))
    frac = density_one_fraction(s, 0.1)
    assert frac >= 0.9
    assert frac >= chebyshev_bound(S, 0.1)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1), st.floats(0.05, 2.0))
def test_chebyshev_link(n, seed, eps):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, _ = np.linalg.qr(X)
    basis = EigenBasis(Q, np.arange(n, dtype=float))
    F = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    s = diagonal_series(F, basis)
    S = variance_sum(F, basis)
    assert density_one_fraction(s, eps) >= chebyshev_bound(S, eps) - 1e-12
    assert np.all(s.abs <= np.linalg.norm(F, 2) + 1e-9)
    assert abs(np.mean(s.values) - np.trace(F) / n) <= 1e-10 * max(1, np.abs(F).max())


def test_wigner_lift():
    e0 = np.zeros(8, dtype=complex)
    e0[0] = 1
    W = wigner_lift(e0, 8, 2)
    assert W[(0, 0)] == pytest.approx(1.0)
    assert W[(0, 1)] == 0
    assert abs(W[(1, 0)]) == pytest.approx(1.0)
    psi = unit(8, 4)
    W = wigner_lift(psi, 8, 3)
    for (n1, n2), v in W.moments.items():
        assert W[(-n1, -n2)] == pytest.approx(np.conj(v), abs=1e-13)
    assert len(W) == 49 and (3, 3) in W
    with pytest.raises(AliasedCoefficient):
        wigner_lift(psi, 8, 8)


def test_sphere_lift():
    rng = np.random.default_rng(2)
    spec = HeckeSpec((random_rotation(rng), random_rotation(rng)))
    basis = EigenBasis.hecke(5, spec)
    u = basis.vector(4)
    m = sphere_lift(u, 5, 4)
    assert m[(0, 0)] == pytest.approx(1 / math.sqrt(4 * math.pi))
    for M in range(-3, 4):
        assert m[(3, M)] == 0
    with pytest.raises(OutOfRange):
        sphere_lift(u, 5, 11)


def test_hecke_functional():
    rng = np.random.default_rng(5)
    spec = HeckeSpec((random_rotation(rng), random_rotation(rng)))
    T = hecke_op(5, spec)
    basis = EigenBasis.hecke(5, spec)
    I = np.eye(11)
    A = multiplication_op(5, 2, 0)
    for j in range(11):
        u = basis.vector(j)
        v = hecke_functional(I, I, T, u)
        if abs(basis.values[j]) >= 1e-6:
            assert v == pytest.approx(1.0)
            # eigenvalue identity: <A T u, u> / <T u, u> = <A u, u>
            assert hecke_functional(A, I, T, u) == pytest.approx(np.vdot(u, A @ u), abs=1e-12)
    # z-rotation by pi/2: m = +-1 modes have <T u, u> = cos(pi/2) = 0 and are skipped
    Tz = hecke_op(2, HeckeSpec((RotationSpec(math.pi / 2, 0, 0),)))
    basis_z = EigenBasis(np.eye(5, dtype=complex), np.diag(Tz).real)
    series, skipped = hecke_functionals(np.eye(5), np.eye(5), Tz, basis_z)
    assert skipped == [1, 3]
    assert series.indices == (0, 2, 4)
    assert np.allclose(series.values, 1)
    C = multiplication_op(2, 0, 0)
    assert hecke_functional(C, np.eye(5), Tz, np.eye(5)[:, 2]) == pytest.approx(1 / math.sqrt(4 * math.pi))


def test_hecke_identities_random_specs():
    rng = np.random.default_rng(9)
    for ell in (0, 1, 3, 6):
        spec = HeckeSpec(tuple(random_rotation(rng) for _ in range(3)))
        basis = EigenBasis.hecke(ell, spec)
        symbols = [real_multiplication_op(ell, L, M) for L in range(0, min(4, 2 * ell) + 1, 2) for M in range(-L, L + 1)]
        symbols.append(np.diag(np.arange(2 * ell + 1.0)))  # a non-multiplication Hermitian test matrix
        for lam, skipped, mu, mu_norm, gap, cs in hecke_row_checks(ell, spec, basis, symbols):
            assert mu <= 1e-10
            assert gap <= 1e-10
            assert cs >= -1e-12
            assert skipped or mu_norm <= 1e-9


def test_munuj_pieces():
    spec = HeckeSpec((RotationSpec(1.0, 0, 0),))
    rots = [rotation_op(2, g) for g in spec.rotations]
    u = np.eye(5)[:, 0]
    a = multiplication_op(2, 2, 0)
    assert munuj_residual(a, u, math.cos(-2.0), rots) <= 1e-15
    assert munuj_normalized_residual(a, u, 1e-9, rots) is None
    assert cauchy_schwarz_slack(a, u, rots) >= 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5))
def test_cauchy_schwarz_random(seed, ell):
    rng = np.random.default_rng(seed)
    rots = [rotation_op(ell, random_rotation(rng)) for _ in range(2)]
    n = 2 * ell + 1
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    u = rng.normal(size=n) + 1j * rng.normal(size=n)
    u /= np.linalg.norm(u)
    assert cauchy_schwarz_slack(a, u, rots) >= -1e-12
    h = a + a.conj().T
    assert cauchy_schwarz_slack(h, u, rots) >= -1e-12


def test_orbit_mass_profile():
    A = IntegerSymplecticMap.coerce(A1)
    basis = EigenBasis.catmap(32, A)
    # fixed point: single-point orbit
    p = orbit_mass_profile(A, 32, TorusPoint(0, 0), basis, 0)
    assert np.array_equal(p, [1.0])
    z = TorusPoint.rational(1, 0, 3)
    L, _ = periodic_orbit(A, z)
    for j in range(0, 32, 7):
        p = orbit_mass_profile(A, 32, z, basis, j)
        assert len(p) == L
        assert p.sum() == pytest.approx(1.0)
    # at N = 2048 the coherent state at the origin underflows to exactly 0 at q = 1/2
    N = 2048
    position = EigenBasis(np.eye(N, dtype=complex), np.zeros(N))
    with pytest.raises(ZeroMass):
        orbit_mass_profile(A, N, TorusPoint(0, 0), position, N // 2)


def test_phase_gap_and_buckets(torus16):
    basis, _ = torus16
    assert phase_gap(0.1, 2 * np.pi - 0.1, 0.2) == pytest.approx(0.0, abs=1e-12)
    F = translation_op(16, (1, 0))
    b = offdiag_bucket(F, basis, 1.0, 0.1)
    th = basis.values
    R = basis.vectors.conj().T @ F @ basis.vectors
    vals = [abs(R[j, i]) for i in range(16) for j in range(16) if i != j and phase_gap(th[i], th[j], 1.0) < 0.1]
    assert b.count == len(vals)
    if vals:
        assert b.mean_abs == pytest.approx(np.mean(vals))
        assert b.mean_sq == pytest.approx(np.mean(np.square(vals)))
    empty = offdiag_bucket(np.eye(16), EigenBasis(np.eye(16, dtype=complex), np.zeros(16)), 1.0, 0.1)
    assert empty.count == 0 and math.isnan(empty.mean_abs)
