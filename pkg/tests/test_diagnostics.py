import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mspt import channels as C
from mspt import diagnostics as Dg
from mspt import fixtures as F
from mspt.mpdo import block_sites, random_tensor
from mspt.symmetry import group_from_cyclic_factors, rep_from_generators

from conftest import I2, X, Z
from oracles import correlators_dense, disorder_operator, disorders_dense, doubled, embed, naive_dense

Z2 = group_from_cyclic_factors([2])
REP_X = rep_from_generators(Z2, [X])
REP_XX = rep_from_generators(Z2, [np.kron(X, X)])


def decay_rate(seps, vals, floor=1e-13):
    """Log-linear fit of |vals| against separation; None if too few resolvable points."""
    seps, vals = np.asarray(seps, float), np.abs(np.asarray(vals))
    keep = vals > floor
    if keep.sum() < 3:
        return None
    slope, _ = np.polyfit(seps[keep], np.log(vals[keep]), 1)
    return math.exp(slope)


# ---------------------------------------------------------------- correlators


@pytest.mark.parametrize("sep", [2, 4, 6])
def test_dephased_cluster_correlators_even_sep(sep):
    A = F.dephased_cluster(0.5)
    L = 40
    assert abs(Dg.correlator(A, "C1", Z, 0, sep, L)) < 1e-10
    assert Dg.correlator(A, "C2", Z, 0, sep, L) == pytest.approx(1, abs=1e-10)
    assert abs(Dg.correlator(A, "C3", Z, 0, sep, L)) < 1e-10


def test_plus_product_c2_zero():
    A = F.plus_product()
    for sep in (1, 3, 5):
        assert abs(Dg.correlator(A, "C2", Z, 0, sep)) < 1e-12


def test_ghz_mix_c2_one_c1_zero():
    A = F.ghz_mix("Z2")
    for sep in (1, 2, 7):
        assert Dg.correlator(A, "C2", Z, 0, sep) == pytest.approx(1, abs=1e-10)
        assert abs(Dg.correlator(A, "C1", Z, 0, sep)) < 1e-10


def test_ghz_pure_c1_c2_one():
    A = F.ghz_pure()
    assert Dg.correlator(A, "C1", Z, 0, 5) == pytest.approx(1, abs=1e-10)
    assert Dg.correlator(A, "C2", Z, 0, 5) == pytest.approx(1, abs=1e-10)


def test_correlator_rejects_bad_input():
    A = F.plus_product()
    with pytest.raises(ValueError):
        Dg.correlator(A, "C1", Z, 3, 3)
    with pytest.raises(ValueError):
        Dg.correlator(A, "C4", Z, 0, 1)


def test_zero_tensor_is_invalid():
    A = np.zeros((2, 2, 1, 1), complex)
    with pytest.raises(Dg.InvalidTensor):
        Dg.correlator(A, "C1", Z, 0, 1, L=4)


@settings(max_examples=15)
@given(seed=st.integers(0, 2**31 - 1), x=st.integers(0, 5), y=st.integers(0, 5), D=st.sampled_from([1, 2, 3]))
def test_correlators_match_dense(seed, x, y, D):
    if x == y:
        return
    rng = np.random.default_rng(seed)
    A = random_tensor(2, D, rng)
    O = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    L = 6
    rho = naive_dense(A.A, L)
    want = correlators_dense(rho, O, x, y, L)
    for kind, w in zip(("C1", "C2", "C3"), want):
        got = Dg.correlator(A, kind, O, x, y, L)
        assert abs(got - w) <= 1e-10 * max(1, abs(w))


def test_correlator_dense_helper_matches_oracle(rng):
    A = random_tensor(2, 2, rng)
    rho = naive_dense(A.A, 5)
    O = rng.normal(size=(2, 2)) + 0j
    c1, c2, c3 = correlators_dense(rho, O, 1, 3, 5)
    assert Dg.correlator_dense(rho, "C1", O, 1, 3) == pytest.approx(c1, abs=1e-12)
    assert Dg.correlator_dense(rho, "C2", O, 1, 3) == pytest.approx(c2, abs=1e-12)
    # the helper leaves C3 unnormalized
    assert Dg.correlator_dense(rho, "C3", O, 1, 3) == pytest.approx(c3 * np.trace(rho), abs=1e-12)


# ---------------------------------------------------------------- disorder


def test_plus_product_disorder_trivial_endpoints():
    A = F.plus_product()
    I4 = np.eye(4)
    for kind in ("D1", "D2", "D3"):
        for n in (3, 6):
            assert Dg.disorder(A, kind, n, I4, I4, REP_X, 1) == pytest.approx(1, abs=1e-10)


def test_dephased_cluster_disorder_scan():
    A = F.dephased_cluster(0.5)
    for n in (4, 6):
        assert Dg.disorder_scan(A, "D1", n, REP_X, 1).magnitude < 1e-8
        assert Dg.disorder_scan(A, "D3", n, REP_X, 1).magnitude < 1e-8
    I4 = np.eye(4)
    assert Dg.disorder(A, "D2", 6, I4, I4, REP_X, 1) == pytest.approx(1, abs=1e-10)


def test_pure_cluster_disorder_lro():
    # X string on a region equals Z Z ... Z Z of the stabilizer product
    A = F.cluster_mpdo()
    ZZ = np.kron(Z, Z)
    for kind in ("D1", "D2", "D3"):
        v = Dg.disorder(A, kind, 7, ZZ, ZZ, REP_X, 1)
        assert abs(v) == pytest.approx(1, abs=1e-10)


def test_region_must_exceed_one_cell():
    with pytest.raises(ValueError):
        Dg.disorder_scan(F.plus_product(), "D1", 1, REP_X, 1)


@settings(max_examples=10)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 4))
def test_disorder_matches_dense(seed, n):
    rng = np.random.default_rng(seed)
    A = random_tensor(2, 2, rng)
    L = 6
    rho = naive_dense(A.A, L)
    OL = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    OR = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    U = disorder_operator(L, X, 1, n, OL, OR)
    want = disorders_dense(rho, U)
    for kind, w in zip(("D1", "D2", "D3"), want):
        got = Dg.disorder(A, kind, n, OL, OR, REP_X, 1, L=L)
        assert abs(got - w) <= 1e-10 * max(1, abs(w))


def test_disorder_scan_is_max_over_pairs(rng):
    A = random_tensor(2, 2, rng)
    scan = Dg.disorder_scan(A, "D2", 3, REP_X, 1, L=8)
    assert scan.magnitude == pytest.approx(np.abs(scan.values).max())


def test_d3_survives_strongly_symmetric_circuits():
    """D3 = 0 on every window endpoint persists under 50 random strongly symmetric circuits."""
    base = C.to_cell(F.dephased_cluster(0.5), 2, cell=2)
    assert Dg.disorder_scan(base.tensor, "D3", 5, REP_XX, 1, d_site=2).magnitude == 0
    worst = 0.0
    for s in range(50):
        rng = np.random.default_rng(5000 + s)
        depth = int(rng.integers(1, 3))
        layers = [(C.random_symmetric_gate([np.kron(X, X)], 4, 2, rng), i) for i in range(depth)]
        T = C.apply_ti_circuit(base, layers).tensor
        worst = max(worst, Dg.disorder_scan(T, "D3", 5, REP_XX, 1, d_site=2).magnitude)
    assert worst <= 1e-8


# ---------------------------------------------------------------- C3 decay


def _symmetric_states(count, seed0):
    out = []
    for s in range(count):
        rng = np.random.default_rng(seed0 + s)
        st0 = C.to_cell(F.plus_product(), 2, cell=2)
        g = C.random_symmetric_gate([np.kron(X, X)], 4, 2, rng)
        out.append((rng, C.apply_ti_circuit(st0, [(g, 0), (g, 1)])))
    return out


def test_c3_decays_and_keeps_decaying_after_circuits():
    seps = list(range(2, 11))
    O = np.kron(Z, I2)
    for rng, state in _symmetric_states(6, 7000):
        T = state.tensor
        assert Dg.correlation_length(T) < math.inf
        vals = [Dg.correlator(T, "C3", O, 0, s, L=60) for s in seps]
        r = decay_rate(seps, vals)
        assert r is None or r < 1
        depth = int(rng.integers(1, 4))
        layers = [(C.random_symmetric_gate([np.kron(X, X)], 4, 2, rng), i % 2) for i in range(min(depth, 2))]
        if depth == 3:
            layers.append((C.random_symmetric_gate([X], 2, 1, rng), 0))
        T2 = C.apply_ti_circuit(state, layers).tensor
        vals2 = [Dg.correlator(T2, "C3", O, 0, s, L=60) for s in seps]
        r2 = decay_rate(seps, vals2)
        assert r2 is None or r2 < 1
        assert max(abs(v) for v in vals2) < 1


# ---------------------------------------------------------------- string order


def test_string_scan_folded_cluster_charged():
    sectors = Dg.string_selection_scan(F.folded_cluster_tensor(), REP_X, 1)
    assert sectors
    assert all(not s.alpha.trivial for s in sectors)


def test_string_scan_product_trivial():
    sectors = Dg.string_selection_scan(F.plus_product(), REP_X, 1)
    assert sectors
    assert all(s.alpha.trivial and s.alpha_p.trivial for s in sectors)


def test_string_scan_valid_state_trivial_ket_charge():
    for A in (F.cluster_mpdo(), F.dephased_cluster(0.5), F.ghz_mix("Z2")):
        sectors = Dg.string_selection_scan(A, REP_X, 1)
        assert all(s.alpha.trivial for s in sectors)


def test_string_order_matches_dense():
    """The reported best endpoints reproduce the value in a dense evaluation."""
    from mspt.symmetry import irreps_abelian

    A = F.dephased_cluster(0.3)
    triv, odd = sorted(irreps_abelian(Z2), key=lambda i: i.charges)
    basis = Dg.graded_basis(Dg.window_rep(REP_X, 2), 2)
    L, a, n = 8, 1, 4
    b = a + n - 1
    rho = naive_dense(A.A, L)
    u = X.conj()
    for alpha, alpha_p in ((triv, triv), (odd, triv), (triv, odd)):
        sec = Dg.string_order_sector(A, REP_X, 1, alpha, alpha_p, n, L=L, basis=basis)
        lab_kl, lab_kr, lab_bl, lab_br = sec.endpoints

        def pick(label, charges):
            ops, labs = basis.ops(charges)
            return ops[labs.index(label)]

        kl, kr = pick(lab_kl, alpha.charges), pick(lab_kr, alpha.conj().charges)
        bl, br = pick(lab_bl, alpha_p.charges), pick(lab_br, alpha_p.conj().charges)
        ket = embed({a - 1: kl, b: kr}, L)
        bops = {a - 1: bl.T @ np.kron(I2, u), b: np.kron(u, I2) @ br.T}
        bops.update({i: u for i in range(a + 1, b)})
        bra = embed(bops, L)
        want = doubled(rho, ket, bra) / doubled(rho, np.eye(2**L), np.eye(2**L))
        assert sec.value == pytest.approx(abs(want), abs=1e-10)


# ---------------------------------------------------------------- fits and classification


def test_fit_lro_verdicts():
    seps = np.arange(2, 13)
    assert Dg.fit_lro(seps, 0.5 + 0.3 * 0.5**seps).verdict == "LRO"
    assert Dg.fit_lro(seps, 0.4**seps).verdict == "zero"
    assert Dg.fit_lro(seps, 0.8**seps * 1e-3).verdict == "zero"
    assert Dg.fit_lro(seps, 1e-3 + 0.5**seps).verdict == "indeterminate"
    assert Dg.fit_lro(seps, 1e-3 + 0 * seps).verdict == "indeterminate"


def test_table_rows():
    assert Dg.SSB_TABLE[("zero", "zero", "LRO", "LRO")] == "Unbroken"
    assert Dg.SSB_TABLE[("zero", "LRO", "zero", "LRO")] == "ExactToAverage"
    assert Dg.SSB_TABLE[("LRO", "LRO", "zero", "zero")] == "FullyBroken"


def test_ssb_classify_dephased_cluster():
    rep = Dg.ssb_classify(F.dephased_cluster(0.5), F.z2_spec())
    assert rep.ssb_pattern == {"exact0:g0": "ExactToAverage"}
    assert rep.to_json()["ssb_pattern"]["exact0:g0"] == "ExactToAverage"


def test_ssb_classify_ghz_and_product():
    assert Dg.ssb_classify(F.ghz_pure(), F.z2_spec()).ssb_pattern["exact0:g0"] == "FullyBroken"
    assert Dg.ssb_classify(F.plus_product(), F.z2_spec()).ssb_pattern["exact0:g0"] == "Unbroken"


def test_ssb_classify_pure_cluster_unbroken():
    rep = Dg.ssb_classify(F.cluster_mpdo(), F.cluster_spec(), d_site=2)
    assert set(rep.ssb_pattern.values()) == {"Unbroken"}


# ---------------------------------------------------------------- boundary probe


def test_boundary_probe_cluster_charged():
    res = Dg.boundary_probe(F.cluster_mpdo(), F.cluster_spec(), L=8, m=1, n=6, d_site=2)
    assert res.value > 0.5
    assert res.fractionalized


def test_boundary_probe_product_trivial():
    res = Dg.boundary_probe(F.plus_product(), F.z2_spec(), L=8, m=1, n=6)
    assert res.value == pytest.approx(1, abs=1e-10)
    assert not res.fractionalized
    assert res.left == res.right


def test_boundary_probe_odd_dephased_carries_average_charge():
    res = Dg.boundary_probe(F.odd_dephased_cluster(), F.odd_dephased_spec(), L=8, m=1, n=6, d_site=2)
    left, right = res.charges["average0"]
    assert res.value > 0.1
    assert any(c != 0 for c in left + right)


def test_boundary_probe_window_check():
    with pytest.raises(ValueError):
        Dg.boundary_probe(F.plus_product(), F.z2_spec(), L=8, m=3, n=4)


# ---------------------------------------------------------------- helpers


def test_weyl_ops_orthonormal():
    ops, labels = Dg.weyl_ops(3)
    G = np.einsum("aij,bij->ab", ops.conj(), ops)
    assert np.allclose(G, np.eye(9) * 3)
    assert len(set(labels)) == 9


def test_graded_basis_charges_are_eigen():
    basis = Dg.graded_basis(REP_X)
    ops, labels = basis.charged(1)
    assert len(ops)
    for o in ops:
        assert np.allclose(X @ o @ X, -o)


def test_correlation_length_product_zero():
    assert Dg.correlation_length(F.plus_product()) == 0.0
    assert 0 < Dg.correlation_length(F.dephased_cluster(0.3)) < math.inf
