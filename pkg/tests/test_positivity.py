import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mspt import channels as C
from mspt import fixtures as F
from mspt import positivity as P
from mspt.mpdo import dense_operator, random_valid_tensor
from mspt.symmetry import group_from_cyclic_factors, rep_from_generators

from conftest import X, random_matrix
from oracles import naive_mps

REP_X = rep_from_generators(group_from_cyclic_factors([2]), [X])


def random_density(rng, n, rank=None):
    G = random_matrix(rng, n, rank or n)
    rho = G @ G.conj().T
    return rho / np.trace(rho)


# ---------------------------------------------------------------- validity


def test_dephased_cluster_valid():
    assert P.validity(F.dephased_cluster(0.3), 4).verdict is P.Verdict.VALID


def test_pure_cluster_valid_rank_one():
    rep = P.validity(F.cluster_mpdo(), 4)
    assert rep.valid
    assert np.sum(rep.spectrum > 1e-10) == 1


@pytest.mark.parametrize("L", [4, 6])
def test_folded_cluster_invalid(L):
    rep = P.validity(F.folded_cluster_tensor(), L)
    assert not rep.valid
    assert rep.hermiticity_residual > 1e-8 or rep.min_eigenvalue < -1e-8


def test_verdicts_follow_flags():
    assert P.validity_dense(np.array([[1, 1j], [0, 1]])).verdict is P.Verdict.NOT_HERMITIAN
    assert P.validity_dense(np.diag([1.0, -0.5])).verdict is P.Verdict.NEGATIVE
    assert P.validity_dense(np.diag([1.0, -1e-12])).verdict is P.Verdict.VALID
    zero = P.validity_dense(np.zeros((2, 2)))
    assert zero.valid and zero.to_json()["verdict"] == "ValidDensityMatrix"


# ---------------------------------------------------------------- folding


@pytest.mark.parametrize("L", [4, 6])
def test_fold_matches_folded_tensor(L):
    ket, bra = P.alternating_sites(L)
    psi = naive_mps(F.cluster_mps(), 2 * L)
    rho = P.fold_doubled_state(psi, ket, bra)
    assert np.abs(rho - dense_operator(F.folded_cluster_tensor(), L)).max() < 1e-12
    assert not P.validity_dense(rho).valid


def test_mps_state_dense_matches_oracle():
    B = F.cluster_mps()
    assert np.allclose(P.mps_state_dense(B, 6), naive_mps(B, 6))


def test_fold_of_bell_pairs_is_identity():
    L = 3
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    psi = bell
    for _ in range(L - 1):
        psi = np.kron(psi, bell)
    ket, bra = P.alternating_sites(L)
    rho = P.fold_doubled_state(psi, ket, bra)
    assert np.allclose(rho, np.eye(2**L) / 2 ** (L / 2))
    assert P.validity_dense(rho).valid


def test_fold_of_conjugated_pair_still_valid():
    bell = np.array([1, 0, 0, 1], complex) / np.sqrt(2)
    psi = np.kron(bell, bell.conj())
    rho = P.fold_doubled_state(psi, [0, 2], [1, 3])
    assert P.validity_dense(rho).valid
    assert np.allclose(rho, np.eye(4) / 2)


def test_fold_rejects_bad_assignment():
    with pytest.raises(ValueError):
        P.fold_doubled_state(np.zeros(16), [0, 1], [1, 2])
    with pytest.raises(ValueError):
        P.fold_doubled_state(np.zeros(8), [0, 2], [1, 3])


# ---------------------------------------------------------------- witness


def test_witness_fires_on_folded_cluster():
    for L in (4, 6):
        rep = P.witness_string_vs_positivity(F.folded_cluster_tensor(), REP_X, 1, L=L)
        assert rep.fired and rep.alpha_nontrivial
        assert not rep.validity.valid
        assert rep.consistent


@pytest.mark.parametrize("make", [lambda: F.dephased_cluster(0.3), F.plus_product, F.cluster_mpdo])
def test_witness_quiet_on_valid_states(make):
    rep = P.witness_string_vs_positivity(make(), REP_X, 1, L=4)
    assert not rep.fired
    assert rep.validity.valid and rep.consistent
    assert rep.to_json()["fired"] is False


def test_witness_quiet_after_random_channels():
    for s in range(10):
        rng = np.random.default_rng(600 + s)
        A = F.dephased_cluster(rng.uniform(0, 0.5))
        for _ in range(int(rng.integers(1, 3))):
            A = C.apply_gate_to_mpdo(A, C.random_symmetric_gate([X], 2, 1, rng))
        rep = P.witness_string_vs_positivity(A, REP_X, 1, L=4)
        assert rep.validity.valid and not rep.fired


# ---------------------------------------------------------------- channel closure and Cauchy–Schwarz


@settings(max_examples=10)
@given(seed=st.integers(0, 2**31 - 1))
def test_channels_preserve_validity(seed):
    rng = np.random.default_rng(seed)
    L = 4
    rho = random_density(rng, 2**L, rank=int(rng.integers(1, 5)))
    layers = []
    for depth in range(2):
        g = C.random_symmetric_gate([], 4, 2, rng, n_kraus=int(rng.integers(1, 4)))
        layers.append(C.tile_layer(g, L, depth % 2))
    out = C.apply_circuit_dense(rho, C.ChannelCircuit(layers, L))
    rep = P.validity_dense(out)
    assert rep.valid
    assert abs(rep.trace - 1) < 1e-10
    assert rep.hermiticity_residual < 1e-10


def test_random_valid_tensor_passes():
    rng = np.random.default_rng(9)
    for _ in range(5):
        assert P.validity(random_valid_tensor(2, 2, 2, rng), 4).valid


@settings(max_examples=20)
@given(seed=st.integers(0, 2**31 - 1))
def test_cauchy_schwarz_inequality(seed):
    rng = np.random.default_rng(seed)
    n = 6
    rho = random_density(rng, n, rank=int(rng.integers(1, n + 1)))
    S1, S2 = random_matrix(rng, n), random_matrix(rng, n)
    lhs, rhs = P.cauchy_schwarz_check(rho, S1, S2)
    assert lhs <= rhs * (1 + 1e-10) + 1e-14


# ---------------------------------------------------------------- Levin–Gu


def test_levin_gu_hexagon():
    patch = P.TriangularPatch.hexagon()
    assert P.domain_wall_count(patch, [0] * 7) == 0
    assert P.domain_wall_count(patch, [1] + [0] * 6) == 1
    diag = P.levin_gu_diagonal(patch)
    assert diag[0] == 1
    assert diag[int("1000000", 2)] == -1


def test_levin_gu_not_psd():
    rho = P.levin_gu_matrix(P.TriangularPatch.rhombus(2, 3))
    rep = P.validity_dense(rho)
    assert rep.min_eigenvalue == pytest.approx(-1)
    assert rep.verdict is P.Verdict.NEGATIVE


def test_levin_gu_global_flip_invariant():
    patch = P.TriangularPatch.rhombus(3, 3)
    diag = P.levin_gu_diagonal(patch)
    assert np.array_equal(diag, diag[::-1])


def test_two_separate_flips_make_two_walls():
    patch = P.TriangularPatch.rhombus(3, 5)
    cfg = np.zeros(15, int)
    cfg[[6, 8]] = 1  # interior sites (1,1) and (1,3), not adjacent
    assert P.domain_wall_count(patch, cfg) == 2


def test_malformed_patch():
    with pytest.raises(P.MalformedLattice):
        P.TriangularPatch(3, ((0, 1, 1),))
    with pytest.raises(P.MalformedLattice):
        P.TriangularPatch(4, ((0, 1, 2),))
    with pytest.raises(P.MalformedLattice):
        P.TriangularPatch(5, ((0, 1, 2), (0, 1, 3), (0, 1, 4)))
    with pytest.raises(P.MalformedLattice):
        P.domain_wall_count(P.TriangularPatch.hexagon(), [0] * 3)
