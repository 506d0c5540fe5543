import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fiolab.errors import AliasedCoefficient, NotThetaGroup
from fiolab.torus import (
    TorusHilbert,
    TorusObservable,
    catmap_op,
    coherent_state,
    egorov_residual,
    max_egorov_residual,
    translation_op,
    unitarity_residual,
    weyl_quantize,
)


def clock_shift(N):
    j = np.arange(N)
    M = np.diag(np.exp(2j * np.pi * j / N))
    S = np.roll(np.eye(N), 1, axis=0)
    return M, S


def oracle_translation(N, n1, n2):
    # independent construction: explicit matrix powers
    M, S = clock_shift(N)
    return (
        np.exp(1j * np.pi * n1 * n2 / N)
        * np.linalg.matrix_power(S, n2 % N)
        @ np.linalg.matrix_power(M, n1 % N)
    )


def test_hilbert_validation():
    assert TorusHilbert(4).N == 4
    with pytest.raises(ValueError):
        TorusHilbert(1)


@pytest.mark.parametrize("N", [2, 5, 8])
@pytest.mark.parametrize("n", [(0, 0), (1, 0), (0, 1), (2, 3), (-1, 2)])
def test_translation_matches_oracle(N, n):
    assert np.allclose(translation_op(N, n), oracle_translation(N, *n), atol=1e-13)


def test_translation_examples():
    assert np.array_equal(translation_op(4, (0, 0)), np.eye(4))
    e0 = np.zeros(4)
    e0[0] = 1
    # T(1, 0) is the clock: it fixes e_0
    assert np.allclose(translation_op(4, (1, 0)) @ e0, e0)
    assert np.allclose(translation_op(4, (0, 1)) @ e0, np.eye(4)[:, 1])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 24), st.tuples(st.integers(-30, 30), st.integers(-30, 30)),
       st.tuples(st.integers(-30, 30), st.integers(-30, 30)))
def test_heisenberg_relation(N, m, n):
    lhs = translation_op(N, m) @ translation_op(N, n)
    phase = np.exp(1j * np.pi * (m[0] * n[1] - m[1] * n[0]) / N)
    rhs = phase * translation_op(N, (m[0] + n[0], m[1] + n[1]))
    assert np.abs(lhs - rhs).max() <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 20), st.integers(-40, 40), st.integers(-40, 40))
def test_translation_unitary_and_trace(N, n1, n2):
    T = translation_op(N, (n1, n2))
    assert unitarity_residual(T) <= 1e-12
    assert np.allclose(T.conj().T, translation_op(N, (-n1, -n2)), atol=1e-12)
    tr = np.trace(T)
    if n1 % N == 0 and n2 % N == 0:
        assert abs(abs(tr) - N) <= 1e-10
    else:
        assert abs(tr) <= 1e-10


def test_weyl_quantize_and_aliasing():
    f = TorusObservable.cosine(1, 0)
    assert f.is_real
    Op = weyl_quantize(8, f)
    x = np.arange(8) / 8
    assert np.allclose(Op, np.diag(np.cos(2 * np.pi * x)), atol=1e-13)
    assert not TorusObservable.fourier_mode(1, 2).is_real
    with pytest.raises(AliasedCoefficient):
        weyl_quantize(4, TorusObservable.fourier_mode(4, 0))


def test_weyl_quantize_momentum_symbol():
    # e(-p) is the shift: (S psi)_j = psi_{j-1}
    N = 6
    Op = weyl_quantize(N, TorusObservable.fourier_mode(0, 1))
    assert np.allclose(Op, np.roll(np.eye(N), 1, axis=0))


CATS = [((1, 2), (2, 5)), ((5, 2), (2, 1)), ((1, 2), (0, 1)), ((3, 2), (4, 3)), ((1, 0), (2, 1))]


@pytest.mark.parametrize("A", CATS)
@pytest.mark.parametrize("N", [2, 3, 7, 8, 12, 31])
def test_catmap_unitary_and_egorov(A, N):
    U = catmap_op(N, A)
    assert unitarity_residual(U) <= 1e-10
    assert max_egorov_residual(U, A, 3) <= 1e-8


def test_catmap_identity_and_shear():
    assert np.allclose(np.abs(catmap_op(5, ((1, 0), (0, 1)))), np.eye(5))
    # A fixes (1, 0), so U commutes with the clock T(1, 0) and is diagonal in position
    U = catmap_op(6, ((1, 2), (0, 1)))
    assert np.abs(U - np.diag(np.diag(U))).max() <= 1e-12


def test_catmap_projective_composition():
    N = 10
    A, B = ((1, 2), (2, 5)), ((5, 2), (2, 1))
    AB = tuple(map(tuple, np.array(A) @ np.array(B)))
    P = catmap_op(N, A) @ catmap_op(N, B)
    Q = catmap_op(N, AB)
    c = np.vdot(Q, P) / N
    assert abs(abs(c) - 1) <= 1e-10
    assert np.abs(P - c * Q).max() <= 1e-10


def test_catmap_rejects_non_theta():
    with pytest.raises(NotThetaGroup):
        catmap_op(8, ((2, 1), (1, 1)))
    with pytest.raises(ValueError):
        catmap_op(8, ((1, 1), (1, 1)))


def test_egorov_detects_wrong_map():
    U = catmap_op(9, ((1, 2), (2, 5)))
    assert egorov_residual(U, ((5, 2), (2, 1)), (1, 0)) > 0.5


def test_coherent_state():
    N = 64
    cs = coherent_state(N, (0.25, 0.5))
    psi = cs.vector
    assert abs(np.linalg.norm(psi) - 1) <= 1e-12
    x = np.arange(N) / N
    # position density centered at q, momentum read off from the translation moment
    assert abs(np.sum(x * np.abs(psi) ** 2) - 0.25) <= 1e-6
    w = np.vdot(psi, translation_op(N, (1, 0)) @ psi)
    assert abs(np.angle(w) / (2 * np.pi) - 0.25) <= 1e-6
    w = np.vdot(psi, translation_op(N, (0, 1)) @ psi)
    assert abs(abs(w) - np.exp(-np.pi / (2 * N))) <= 1e-6
    with pytest.raises(ValueError):
        coherent_state(N, (1.0, 0.0))


def test_coherent_states_far_apart_nearly_orthogonal():
    a = coherent_state(128, (0.1, 0.1)).vector
    b = coherent_state(128, (0.6, 0.6)).vector
    assert abs(np.vdot(a, b)) <= 1e-10
