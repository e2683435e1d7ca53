"""Named tensors used across tests, scripts and the CLI."""

from __future__ import annotations

import numpy as np

from .mpdo import MPDOTensor, block_sites, mpdo_from_pure_mps, product_tensor
from .symmetry import OnsiteRep, SymmetrySpec, group_from_cyclic_factors, parse_group, regular_rep, rep_from_generators

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)

CLUSTER_B = np.array(
    [[[1, 1], [0, 0]], [[0, 0], [1, -1]]],
    dtype=complex,
) / np.sqrt(2)


def cluster_mps() -> np.ndarray:
    """Cluster-state MPS tensor B[p] (d=2, D=2): B0 = |0)(+|, B1 = |1)(-|."""
    return CLUSTER_B.copy()


def cluster_mpdo() -> MPDOTensor:
    return mpdo_from_pure_mps(CLUSTER_B)


def dephase_tensor(A, p: float, op=X) -> MPDOTensor:
    """Single-site dephasing ρ -> (1-p)ρ + p OρO† contracted into the tensor."""
    A = A.A if isinstance(A, MPDOTensor) else np.asarray(A, complex)
    op = np.asarray(op, complex)
    return MPDOTensor((1 - p) * A + p * np.einsum("xp,pqij,yq->xyij", op, A, op.conj()))


def dephased_cluster(p: float) -> MPDOTensor:
    return dephase_tensor(cluster_mpdo(), p)


def odd_dephased_cluster(p: float = 0.5) -> MPDOTensor:
    """Two-site cell of the cluster with Z-dephasing on the odd site.

    X_even stays exact; X_odd is reduced to an average symmetry.
    """
    return dephase_tensor(block_sites(cluster_mpdo(), 2), p, np.kron(I2, Z))


def odd_dephased_spec() -> SymmetrySpec:
    G = group_from_cyclic_factors([2])
    return SymmetrySpec(
        exact=[rep_from_generators(G, [np.kron(X, I2)])],
        average=[rep_from_generators(G, [np.kron(I2, X)])],
    )


def dephased_site_tensor() -> MPDOTensor:
    """B^{00}=B^{11}, B^{01}=B^{10} as printed for the maximally dephased cluster."""
    a = np.array([[1, 1, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0], [1, -1, -1, 1]]) / 4
    b = np.array([[0, 0, 0, 0], [1, -1, 1, -1], [1, 1, -1, -1], [0, 0, 0, 0]]) / 4
    A = np.zeros((2, 2, 4, 4), complex)
    A[0, 0] = A[1, 1] = a
    A[0, 1] = A[1, 0] = b
    return MPDOTensor(A)


def diagonal_basis_change() -> np.ndarray:
    """T with T⁻¹ (B^{ij}B^{kl}) T diagonal: swap of basis vectors 3,4 then Hadamard⊗I."""
    P = np.eye(4)[[0, 1, 3, 2]]
    S = np.kron(np.array([[1, 1], [1, -1]]), np.eye(2))
    return (P @ S).astype(complex)


def dephased_blocked_tensor() -> MPDOTensor:
    """Two-site tensor in the diagonal basis: ¼ diag(e_b) ⊗ diag(e_a), a = p1⊕q1, b = p2⊕q2."""
    A = np.zeros((4, 4, 4, 4), complex)
    for p1 in range(2):
        for q1 in range(2):
            for p2 in range(2):
                for q2 in range(2):
                    a, b = p1 ^ q1, p2 ^ q2
                    v = np.zeros(2)
                    v[a] = 1
                    w = np.zeros(2)
                    w[b] = 1
                    A[2 * p1 + p2, 2 * q1 + q2] = np.diag(np.kron(w, v)) / 4
    return MPDOTensor(A)


def dephased_cluster_dense(L: int) -> np.ndarray:
    """2^{-L}(I + X_even + X_odd + X_even X_odd) on an even ring."""
    if L % 2:
        raise ValueError("L must be even")
    N = 2**L
    xe = np.ones((1, 1), complex)
    xo = np.ones((1, 1), complex)
    for i in range(L):
        xe = np.kron(xe, X if i % 2 == 0 else I2)
        xo = np.kron(xo, X if i % 2 == 1 else I2)
    return (np.eye(N) + xe + xo + xe @ xo) / N


def plus_product() -> MPDOTensor:
    plus = np.full((2, 2), 0.5, complex)
    return product_tensor(plus)


def maximally_mixed() -> MPDOTensor:
    return product_tensor(I2 / 2)


def ghz_mix(K: str = "Z2") -> MPDOTensor:
    """ρ ∝ Σ_k U_k with the regular rep: A^{(k,k')} = e_k e_kᵀ on the bond, d = |K|.

    Physical basis labeled by group elements; A[p, q] with q = k'·... is the
    diagonal projector onto bond state k when p = k·q. Normalized so tr ρ = 1
    on every ring.
    """
    G = parse_group(K)
    n = G.order
    A = np.zeros((n, n, n, n), complex)
    for k in range(n):
        for q in range(n):
            p = int(G.mul[k, q])
            A[p, q, k, k] = 1.0 / n
    return MPDOTensor(A)


def ghz_mix_spec(K: str = "Z2") -> SymmetrySpec:
    G = parse_group(K)
    return SymmetrySpec(exact=[regular_rep(G)], average=[])


def ghz_pure() -> MPDOTensor:
    """|GHZ><GHZ| with the D=2 diagonal MPS."""
    B = np.zeros((2, 2, 2), complex)
    B[0, 0, 0] = 1
    B[1, 1, 1] = 1
    return mpdo_from_pure_mps(B)


def folded_cluster_tensor() -> MPDOTensor:
    """2L-site cluster chain read as an operator: pairs (ket, bra) = (B^p B^q)."""
    B = CLUSTER_B
    A = np.einsum("pij,qjk->pqik", B, B)
    return MPDOTensor(A)


def z2_spec() -> SymmetrySpec:
    G = group_from_cyclic_factors([2])
    return SymmetrySpec(exact=[rep_from_generators(G, [X])], average=[])


def cluster_spec() -> SymmetrySpec:
    """Z2×Z2 on a two-site cell: X on even sites, X on odd sites."""
    G = group_from_cyclic_factors([2, 2])
    rep = rep_from_generators(G, [np.kron(X, I2), np.kron(I2, X)])
    return SymmetrySpec(exact=[rep], average=[])


def even_z2_spec() -> SymmetrySpec:
    G = group_from_cyclic_factors([2])
    return SymmetrySpec(exact=[rep_from_generators(G, [np.kron(X, I2)])], average=[])


FIXTURES = {
    "cluster": cluster_mpdo,
    "dephased-cluster": lambda p=0.5: dephased_cluster(p),
    "dephased-site": dephased_site_tensor,
    "dephased-blocked": dephased_blocked_tensor,
    "ghz-mix": ghz_mix,
    "plus": plus_product,
    "maximally-mixed": maximally_mixed,
    "ghz": ghz_pure,
    "folded-cluster": folded_cluster_tensor,
    "odd-dephased-cluster": lambda p=0.5: odd_dephased_cluster(p),
}


def get_fixture(name: str) -> MPDOTensor:
    """Parse names like ``cluster``, ``dephased-cluster:p=0.25``, ``ghz-mix:Z2``."""
    base, _, arg = name.partition(":")
    if base not in FIXTURES:
        raise KeyError(f"unknown fixture {base!r}; known: {', '.join(sorted(FIXTURES))}")
    if base == "dephased-cluster":
        p = float(arg.split("=")[-1]) if arg else 0.5
        return dephased_cluster(p)
    if base == "odd-dephased-cluster":
        return odd_dephased_cluster(float(arg.split("=")[-1]) if arg else 0.5)
    if base == "ghz-mix":
        return ghz_mix(arg or "Z2")
    return FIXTURES[base]()
