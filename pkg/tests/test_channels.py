import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mspt import algebra
from mspt import fixtures as fx
from mspt.channels import (
    ChannelCircuit,
    KrausGate,
    TPViolation,
    adjoint_gate,
    apply_circuit_dense,
    apply_gate_to_mpdo,
    apply_ti_circuit,
    channel_superoperator,
    dephasing,
    identity_gate,
    is_nondegenerate,
    is_strongly_symmetric,
    is_weakly_symmetric,
    parse_channel,
    random_near_identity_gate,
    random_symmetric_gate,
    ti_to_dense_circuit,
    tile_layer,
    to_cell,
    truncate_circuit,
    unitary_gate,
    validate_gate,
    zz_dephasing,
)
from mspt.choi import verify_symmetry
from mspt.mpdo import dense_operator, spectrum_E2
from mspt.symmetry import parse_group, rep_from_generators

from conftest import I2, X, Z, random_matrix
from oracles import embed, four_string_state, naive_dense

Z2X = rep_from_generators(parse_group("Z2"), [X])


def dense_kraus_oracle(rho, layers, L):
    """Σ over all Kraus tuples of the full-chain operators, layer by layer."""
    for layer in layers:
        full = []
        for pos, g in layer:
            ks = []
            for K in g.kraus:
                if g.span == 1:
                    ks.append(embed({pos: K}, L))
                else:
                    # two-site gate on (pos, pos+1), no wrap in these tests
                    ks.append(np.kron(np.kron(np.eye(2**pos), K), np.eye(2 ** (L - pos - 2))))
            full.append(ks)
        out = np.zeros_like(rho)
        for combo in itertools.product(*full):
            K = np.eye(rho.shape[0], dtype=complex)
            for k in combo:
                K = k @ K
            out += K @ rho @ K.conj().T
        rho = out
    return rho


def test_unitary_superoperator():
    U = algebra.random_unitary(2, np.random.default_rng(0))
    S = channel_superoperator(unitary_gate(U))
    assert np.allclose(S, np.kron(U, U.conj()))
    assert algebra.is_unitary(S)


def test_dephasing_superoperator():
    p = 0.3
    S = channel_superoperator(dephasing(p))
    assert np.allclose(S, (1 - p) * np.eye(4) + p * np.kron(X, X.conj()))


def test_tp_violation():
    g = KrausGate((I2 / np.sqrt(2), X / np.sqrt(2), Z / np.sqrt(2)))
    assert not validate_gate(g)
    with pytest.raises(TPViolation):
        channel_superoperator(g)


def test_symmetry_examples():
    assert is_strongly_symmetric(dephasing(0.3), Z2X, 1)
    gam = 0.4
    amp = KrausGate((np.diag([1, np.sqrt(1 - gam)]), np.sqrt(gam) * np.array([[0, 1], [0, 0]])))
    assert not is_strongly_symmetric(amp, Z2X, 1)
    assert not is_weakly_symmetric(amp, Z2X, 1)
    zdeph = dephasing(0.3, Z)
    assert not is_strongly_symmetric(zdeph, Z2X, 1)
    assert is_weakly_symmetric(zdeph, Z2X, 1)


def test_nondegeneracy_examples():
    S = channel_superoperator(dephasing(0.3))
    assert np.allclose(sorted(set(np.round(np.linalg.eigvals(S).real, 12))), [0.4, 1.0])
    assert is_nondegenerate(dephasing(0.3))
    assert not is_nondegenerate(dephasing(0.5))
    rng = np.random.default_rng(5)
    for _ in range(5):
        assert is_nondegenerate(unitary_gate(algebra.random_unitary(4, rng), span=2))


def test_identity_gate_leaves_tensor():
    A = fx.cluster_mpdo()
    assert np.allclose(apply_gate_to_mpdo(A, identity_gate(2)).A, A.A)


def test_dephased_cluster_is_four_string_sum():
    A = apply_gate_to_mpdo(fx.cluster_mpdo(), dephasing(0.5))
    assert np.abs(dense_operator(A, 4) - four_string_state(4)).max() < 1e-12


def test_random_symmetric_unitary_circuit_matches_dense():
    rng = np.random.default_rng(11)
    syms = [np.kron(X, I2), np.kron(I2, X)]
    gs = [random_symmetric_gate(syms, 4, 2, rng, unitary=True) for _ in range(2)]
    layers = [(gs[0], 0), (gs[1], 1)]
    st8 = apply_ti_circuit(to_cell(fx.cluster_mpdo(), 2, cell=2), layers)
    L = 4
    rho0 = dense_operator(fx.cluster_mpdo(), L)
    want = apply_circuit_dense(rho0, ti_to_dense_circuit(layers, L))
    assert np.abs(st8.dense(L // st8.cell) - want).max() < 1e-10


def test_dense_application_matches_kraus_oracle():
    rng = np.random.default_rng(3)
    L = 4
    g1 = random_symmetric_gate([X], 2, 1, rng)
    g2 = random_symmetric_gate([np.kron(X, X)], 4, 2, rng)
    layers = [[(i, g1) for i in range(L)], [(0, g2), (2, g2)]]
    rho = naive_dense(fx.cluster_mpdo().A, L)
    got = apply_circuit_dense(rho, ChannelCircuit(layers, L))
    assert np.abs(got - dense_kraus_oracle(rho, layers, L)).max() < 1e-12


def test_truncate_depth_one():
    L = 8
    c = ChannelCircuit([tile_layer(dephasing(0.2), L)], L)
    t = truncate_circuit(c, (2, 5), L)
    assert sorted(pos for pos, _ in t.layers[0]) == [2, 3, 4, 5]


def test_truncate_light_cone_grows():
    L = 8
    g = zz_dephasing(0.3)
    c = ChannelCircuit([tile_layer(g, L, 0), tile_layer(g, L, 1)], L)
    t = truncate_circuit(c, (3, 3), L)
    assert sorted(p for p, _ in t.layers[1]) == [3]
    assert sorted(p for p, _ in t.layers[0]) == [2, 4]


def test_adjoint_dephasing():
    p = 0.3
    g = adjoint_gate(dephasing(p))
    apply = lambda O: sum(k @ O @ k.conj().T for k in g.kraus)  # noqa: E731
    assert np.allclose(apply(X), X)
    assert np.allclose(apply(Z), (1 - 2 * p) * Z)
    assert np.allclose(apply(I2), I2)


@pytest.mark.parametrize("p", np.round(np.arange(0, 0.55, 0.05), 2))
def test_dense_vs_mpdo_dephasing_sweep(p):
    L = 4
    A = apply_gate_to_mpdo(fx.cluster_mpdo(), dephasing(p))
    rho = dense_operator(fx.cluster_mpdo(), L)
    want = apply_circuit_dense(rho, ChannelCircuit([tile_layer(dephasing(p), L)], L))
    assert np.abs(dense_operator(A, L) - want).max() < 1e-10


def random_state(rng, n):
    M = random_matrix(rng, n)
    rho = M @ M.conj().T
    return rho / np.trace(rho)


@given(st.integers(0, 10_000))
def test_trace_preserved_and_positive(seed):
    rng = np.random.default_rng(seed)
    L = 3
    rho = random_state(rng, 2**L)
    g = random_symmetric_gate([np.kron(X, X)], 4, 2, rng, n_kraus=3)
    h = random_symmetric_gate([X], 2, 1, rng)
    c = ChannelCircuit([[(0, g)], [(i, h) for i in range(L)]], L)
    out = apply_circuit_dense(rho, c)
    assert abs(np.trace(out) - 1) < 1e-10
    assert np.linalg.eigvalsh((out + out.conj().T) / 2).min() >= -1e-10


@given(st.integers(0, 10_000))
def test_symmetric_circuits_preserve_symmetry(seed):
    rng = np.random.default_rng(seed)
    L = 4
    U = embed({i: X for i in range(L)}, L)
    # exact: rho supported on the +1 eigenspace of ΠX
    P = (np.eye(2**L) + U) / 2
    rho = P @ random_state(rng, 2**L) @ P
    rho /= np.trace(rho)
    # average: twirl a random state
    sig = random_state(rng, 2**L)
    sig = (sig + U @ sig @ U) / 2
    g = random_symmetric_gate([np.kron(X, X)], 4, 2, rng)
    c = ChannelCircuit([tile_layer(g, L, 0), tile_layer(g, L, 1)], L)
    assert verify_symmetry(apply_circuit_dense(rho, c), "exact", U, tol=1e-9).holds
    assert verify_symmetry(apply_circuit_dense(sig, c), "average", U, tol=1e-9).holds


def test_nondegenerate_symmetric_gates_keep_unique_top():
    # 100 non-degenerate symmetric single-site channels on a normal tensor
    A = fx.cluster_mpdo()
    rng = np.random.default_rng(42)
    for _ in range(100):
        g = random_near_identity_gate([X], 2, 1, rng)
        assert is_nondegenerate(g) and is_strongly_symmetric(g, Z2X, 1)
        sp = spectrum_E2(apply_gate_to_mpdo(A, g))
        assert sp.unique_top and sp.gap > 1e-8


def test_parse_channel():
    assert np.allclose(channel_superoperator(parse_channel("dephasing:p=0.2")), channel_superoperator(dephasing(0.2)))
    assert parse_channel("zz:p=0.5").span == 2
    with pytest.raises(ValueError):
        parse_channel("nonsense")
    with pytest.raises(ValueError):
        dephasing(1.5)
