import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mspt import algebra
from mspt.choi import (
    ChoiVector,
    amplitude_matrix,
    apply_bra,
    apply_J,
    apply_ket,
    choi_of_operator,
    hs_inner,
    operator_of_choi,
    relative_state,
    verify_symmetry,
)
from mspt.fixtures import cluster_mpdo, dephased_cluster_dense
from mspt.positivity import mps_state_dense

from conftest import I2, X, Z, random_matrix
from oracles import cluster_projector


def test_relative_state_one_qubit():
    v = relative_state([2]).amplitudes
    assert np.allclose(v, np.array([1, 0, 0, 1]) / np.sqrt(2))


def test_relative_state_two_qubits():
    v = relative_state([2, 2])
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(v.amplitudes, np.kron(bell, bell))
    assert np.isclose(np.linalg.norm(v.amplitudes), 1)


def test_relative_state_basis_independence(rng):
    V = algebra.random_unitary(3, rng)
    v = relative_state([3]).amplitudes
    assert np.allclose(np.kron(V, V.conj()) @ v, v)


def test_choi_examples():
    assert np.allclose(choi_of_operator(I2, [2]).amplitudes, relative_state([2]).amplitudes)
    assert np.allclose(choi_of_operator(X, [2]).amplitudes, np.array([0, 1, 1, 0]) / np.sqrt(2))


def test_transpose_transport(rng):
    O = random_matrix(rng, 4)
    omega = relative_state([2, 2])
    a = choi_of_operator(O, [2, 2]).amplitudes
    b = apply_bra(O.T, omega).amplitudes
    assert np.allclose(a, b)


def test_round_trip(rng):
    O = random_matrix(rng, 4)
    back = operator_of_choi(choi_of_operator(O, [2, 2]))
    assert np.abs(back - O).max() <= 1e-14


def test_operator_of_relative_state():
    for dims in ([2], [2, 3]):
        N = int(np.prod(dims))
        # bending the legs gives I/√N; the inverse map undoes the normalization
        assert np.allclose(amplitude_matrix(relative_state(dims)), np.eye(N) / np.sqrt(N))
        assert np.allclose(operator_of_choi(relative_state(dims)), np.eye(N))


def test_choi_dimension_mismatch():
    with pytest.raises(algebra.DimensionMismatch):
        choi_of_operator(np.eye(3), [2])
    with pytest.raises(algebra.DimensionMismatch):
        ChoiVector((2,), np.zeros(3, complex))


def test_cluster_choi_mps_fold_L8():
    # the MPDO tensor read as an MPS with physical index (p, q) per site
    A = cluster_mpdo().A
    B = A.reshape(4, A.shape[2], A.shape[3])
    v = ChoiVector((2,) * 8, mps_state_dense(B, 8))
    rho = operator_of_choi(v)
    P = cluster_projector(8)
    c = np.trace(rho) / np.trace(P)
    assert abs(c) > 1e-8
    assert np.abs(rho - c * P).max() < 1e-12


def test_hs_inner_examples():
    assert hs_inner(I2, I2) == 2
    assert hs_inner(X, Z) == 0
    rho = np.diag([0.7, 0.3])
    assert np.isclose(hs_inner(rho, rho), 0.58)
    with pytest.raises(algebra.DimensionMismatch):
        hs_inner(I2, np.eye(3))


@given(st.integers(0, 10_000))
def test_hs_inner_is_doubled_overlap(seed):
    rng = np.random.default_rng(seed)
    a, b = random_matrix(rng, 4), random_matrix(rng, 4)
    va, vb = choi_of_operator(a, [2, 2]), choi_of_operator(b, [2, 2])
    # normalized relative state: overlap carries a 1/N
    assert abs(va.overlap(vb) * 4 - hs_inner(a, b)) < 1e-12


def test_verify_symmetry_examples():
    plus = np.full((2, 2), 0.5)
    r = verify_symmetry(plus, "exact", X)
    assert r.holds and abs(r.phase) < 1e-12
    mixed = np.eye(2) / 2
    assert not verify_symmetry(mixed, "exact", X).holds
    assert verify_symmetry(mixed, "average", X).holds
    rho = dephased_cluster_dense(4)
    U = algebra.kron(X, I2, X, I2)
    r = verify_symmetry(rho, "exact", U)
    assert r.holds and abs(r.phase) < 1e-12


def test_exact_symmetry_phase_recovered():
    minus = np.array([[1, -1], [-1, 1]]) / 2
    r = verify_symmetry(minus, "exact", X)
    assert r.holds and np.isclose(abs(r.phase), np.pi)


@given(st.integers(0, 10_000))
def test_J_iff_hermitian(seed):
    rng = np.random.default_rng(seed)
    M = random_matrix(rng, 4)
    H = M + M.conj().T
    assert verify_symmetry(H, "J", None).holds
    assert verify_symmetry(H + 0.1j * np.eye(4), "J", None).holds is False


def test_T_symmetry():
    # complex conjugation (W = I) leaves a real state fixed but not a Y-polarized one
    assert verify_symmetry(np.full((2, 2), 0.5), "T", I2).holds
    y_plus = (I2 + np.array([[0, -1j], [1j, 0]])) / 2
    assert not verify_symmetry(y_plus, "T", I2).holds


@given(st.integers(0, 10_000))
def test_J_exact_wreath_relation(seed):
    rng = np.random.default_rng(seed)
    v = ChoiVector((2, 2), random_matrix(rng, 16, 1).ravel())
    U = algebra.random_unitary(4, rng)
    lhs = apply_ket(U, apply_J(v)).amplitudes
    rhs = apply_J(apply_bra(U.conj(), v)).amplitudes
    assert np.allclose(lhs, rhs, atol=1e-12)
