import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mspt import fixtures as fx
from mspt.algebra import DimensionMismatch, NumericalFailure
from mspt.mpdo import (
    MPDOTensor,
    MpdoKind,
    block_sites,
    classify_mpdo,
    dense_operator,
    injectivity_check,
    is_normal,
    mixed_transfer,
    mpdo_from_pure_mps,
    norm2_L,
    normalize_trace,
    product_tensor,
    random_tensor,
    random_valid_tensor,
    shift_cell,
    spectrum_E1,
    spectrum_E2,
    trace_L,
    transfer_E1,
    transfer_E2,
)

from conftest import I2, X, Z
from oracles import cluster_projector, four_string_state, naive_dense, naive_mps


def test_cluster_mpdo_from_mps():
    A = fx.cluster_mpdo()
    B = fx.CLUSTER_B
    assert A.D == 4
    assert np.allclose(A.A[0, 0], np.kron(B[0], B[0].conj()))
    assert np.allclose(A.A[1, 0], np.kron(B[1], B[0].conj()))


def test_product_state_from_scalar_mps():
    B = np.array([[[1.0]], [[1.0]]]) / np.sqrt(2)
    A = mpdo_from_pure_mps(B)
    assert A.D == 1
    plus = np.full((2, 2), 0.5)
    assert np.allclose(dense_operator(A, 3), np.kron(np.kron(plus, plus), plus))


def test_mps_shape_error():
    with pytest.raises(DimensionMismatch):
        mpdo_from_pure_mps(np.zeros((2, 2, 3)))
    with pytest.raises(DimensionMismatch):
        MPDOTensor(np.zeros((2, 3, 2, 2)))


def test_choi_norm_is_purity_L4():
    A = fx.cluster_mpdo()
    rho = naive_dense(A.A, 4)
    assert np.isclose(norm2_L(A, 4), np.trace(rho @ rho.conj().T))


def test_cluster_transfer_spectra():
    E1 = spectrum_E1(fx.cluster_mpdo())
    assert np.allclose(np.abs(E1.eigenvalues), [1, 0, 0, 0], atol=1e-12)
    E2 = spectrum_E2(fx.cluster_mpdo())
    assert E2.unique_top and np.isclose(E2.top, 1)


def test_ghz_mix_spectra():
    A = normalize_trace(fx.ghz_mix("Z2"))
    assert spectrum_E1(A).unique_top and np.isclose(spectrum_E1(A).top, 1)
    assert spectrum_E2(A).degeneracy_of_top == 2


def test_mixed_transfer_examples():
    A = fx.cluster_mpdo()
    assert np.allclose(mixed_transfer(A, I2, I2), transfer_E2(A))
    assert np.abs(spectrum_E2(A).top) == pytest.approx(1)
    from mspt import algebra

    # ΠX = X_even X_odd is a symmetry of the cluster, so only a non-symmetric insertion drops below 1
    assert np.isclose(abs(algebra.eig(mixed_transfer(A, X, None)).top), 1)
    assert abs(algebra.eig(mixed_transfer(A, Z, None)).top) < 1 - 1e-6
    # ρ ∝ I + ΠX is symmetric under X ⊗ X* on a single site
    B = fx.ghz_mix("Z2")
    top2 = abs(spectrum_E2(B).top)
    assert np.isclose(abs(algebra.eig(mixed_transfer(B, X, X.conj())).top), top2)
    with pytest.raises(DimensionMismatch):
        mixed_transfer(A, np.eye(3), None)


def test_normalize_trace():
    A = fx.cluster_mpdo()
    assert np.allclose(normalize_trace(A).A, A.A)
    B = normalize_trace(A.scaled(3.0))
    assert abs(abs(spectrum_E1(B).top) - 1) < 1e-12
    C = normalize_trace(block_sites(fx.dephased_cluster(0.5), 2))
    assert np.isclose(np.trace(dense_operator(C, 2)), 1)
    with pytest.raises(NumericalFailure):
        normalize_trace(MPDOTensor(np.zeros((2, 2, 1, 1))))


def test_dense_examples():
    r = np.array([[0.6, 0.2j], [-0.2j, 0.4]])
    assert np.allclose(dense_operator(product_tensor(r), 2), np.kron(r, r))
    blocked = fx.dephased_blocked_tensor()
    assert np.abs(dense_operator(blocked, 2) - four_string_state(4)).max() < 1e-12
    rho = dense_operator(fx.cluster_mpdo(), 4)
    P = cluster_projector(4)
    assert np.linalg.matrix_rank(P) == 1
    assert np.abs(rho / np.trace(rho) - P).max() < 1e-12


@given(st.integers(0, 10_000), st.integers(1, 4), st.sampled_from([1, 2, 3]))
def test_dense_matches_naive(seed, L, D):
    A = random_tensor(2, D, np.random.default_rng(seed))
    assert np.abs(dense_operator(A, L) - naive_dense(A.A, L)).max() < 1e-12


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_trace_and_norm_identities(seed, L):
    A = random_tensor(2, 2, np.random.default_rng(seed))
    rho = dense_operator(A, L)
    assert abs(np.trace(rho) - trace_L(A, L)) < 1e-10 * max(1, abs(np.trace(rho)))
    n2 = np.vdot(rho, rho)
    assert abs(n2 - norm2_L(A, L)) < 1e-10 * max(1, abs(n2))


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_block_sites_dense(seed, Lp):
    A = random_tensor(2, 2, np.random.default_rng(seed))
    assert np.allclose(dense_operator(block_sites(A, 2), Lp), dense_operator(A, 2 * Lp), atol=1e-12)


@given(st.integers(0, 10_000))
def test_perron_frobenius_top_real_positive(seed):
    A = random_valid_tensor(2, 2, 2, np.random.default_rng(seed))
    top = spectrum_E2(A).top
    assert top.real > 0 and abs(top.imag) < 1e-10 * abs(top)


def test_shift_cell_preserves_operator(rng):
    A = block_sites(random_tensor(2, 2, rng), 2)
    S = shift_cell(A, 2)
    rho = dense_operator(A, 2)
    # shifting by one site is a cyclic translation of the ring
    t = rho.reshape((2,) * 8)
    perm = [1, 2, 3, 0]
    rolled = t.transpose(perm + [4 + x for x in perm]).reshape(16, 16)
    assert np.allclose(dense_operator(S, 2), rolled, atol=1e-12)


def test_normality_examples():
    assert is_normal(fx.cluster_mpdo())
    assert not is_normal(fx.dephased_cluster(0.5))
    assert spectrum_E2(fx.dephased_cluster(0.5)).degeneracy_of_top >= 2


def test_injectivity_examples():
    blocked = fx.dephased_blocked_tensor()
    assert not injectivity_check(blocked).injective
    cls = classify_mpdo(blocked)
    assert len(cls.blocks) == 4
    assert all(injectivity_check(b).injective for b in cls.blocks)
    assert injectivity_check(fx.cluster_mpdo()).injective


def test_classify_examples():
    c = classify_mpdo(fx.cluster_mpdo(), fx.cluster_spec())
    assert c.kind is MpdoKind.SYMMETRIC_INJECTIVE and c.label == 1 and c.sites_blocked == 2
    c = classify_mpdo(fx.dephased_cluster(0.5), fx.even_z2_spec())
    assert c.kind is MpdoKind.PERMUTED_BLOCKS and len(c.blocks) == 4
    assert len(c.orbits(1)) == 2
    c = classify_mpdo(fx.ghz_mix("Z2"), fx.ghz_mix_spec("Z2"))
    assert c.label == 3 and c.block_permutation[1] == [1, 0]


def test_classify_direct_sum():
    # two copies of a product state on a block-diagonal bond: class 2
    r = np.diag([0.7, 0.3]).astype(complex)
    A = np.zeros((2, 2, 2, 2), complex)
    A[:, :, 0, 0] = r
    A[:, :, 1, 1] = np.diag([0.2, 0.8])
    c = classify_mpdo(MPDOTensor(A))
    assert c.kind is MpdoKind.DIRECT_SUM and len(c.blocks) == 2
