"""MPDO tensors, transfer matrices, dense reconstruction and block structure.

A tensor ``A`` has shape ``(d, d, D, D)`` with index order ``A[p, q, a, b]``
(p ket, q bra); a ket-only MPS tensor is stored as ``(d, 1, D, D)``. On a periodic ring of L sites it defines

    rho[p1..pL ; q1..qL] = tr(A[p1,q1] @ ... @ A[pL,qL]).

Its Choi vector is the MPS with doubled physical index (p, q). Transfer
matrices use the row-major layout ``E2[(a a'), (b b')]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .algebra import DimensionMismatch, NumericalFailure, check_dense
from .symmetry import OnsiteRep, SymmetrySpec


@dataclass(frozen=True, eq=False)
class MPDOTensor:
    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        if A.ndim != 4 or A.shape[1] not in (A.shape[0], 1) or A.shape[2] != A.shape[3]:
            raise DimensionMismatch(f"MPDO tensor must have shape (d,d,D,D) or (d,1,D,D), got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise NumericalFailure("tensor has non-finite entries")
        object.__setattr__(self, "A", A)

    @property
    def d(self) -> int:
        return int(self.A.shape[0])

    @property
    def D(self) -> int:
        return int(self.A.shape[2])

    def __getitem__(self, idx):
        return self.A[idx]

    def scaled(self, c: complex) -> "MPDOTensor":
        return MPDOTensor(self.A * c)

    def gauge(self, X: np.ndarray) -> "MPDOTensor":
        """Bond basis change A -> X^{-1} A X (same operator)."""
        Xi = np.linalg.inv(X)
        return MPDOTensor(np.einsum("ij,pqjk,kl->pqil", Xi, self.A, X))


def as_tensor(A) -> MPDOTensor:
    if isinstance(A, MPDOTensor):
        return A
    arr = np.asarray(A, dtype=complex)
    if arr.ndim == 3:  # pure MPS tensor viewed as a ket-only operator tensor
        return MPDOTensor(arr[:, None, :, :])
    return MPDOTensor(arr)


def mpdo_from_pure_mps(B) -> MPDOTensor:
    """A[p][q] = B[p] ⊗ conj(B[q]), the MPDO of |psi><psi|."""
    B = np.asarray(B, dtype=complex)
    if B.ndim != 3 or B.shape[1] != B.shape[2]:
        raise DimensionMismatch("MPS tensor must have shape (d, D, D)")
    d, D, _ = B.shape
    A = np.einsum("pij,qkl->pqikjl", B, B.conj()).reshape(d, d, D * D, D * D)
    return MPDOTensor(A)


def product_tensor(rho_site) -> MPDOTensor:
    r = np.asarray(rho_site, dtype=complex)
    return MPDOTensor(r[:, :, None, None])


# ---------------------------------------------------------------- transfer matrices


def transfer_E1(A) -> np.ndarray:
    A = as_tensor(A).A
    return np.einsum("ppij->ij", A)


def linear_transfer(A, op=None) -> np.ndarray:
    """Σ_pq op[q,p] A[p,q]: one site of tr(rho O)."""
    A = as_tensor(A).A
    if op is None:
        return np.einsum("ppij->ij", A)
    op = np.asarray(op, complex)
    if op.shape != A.shape[:2]:
        raise DimensionMismatch("operator does not match physical dim")
    return np.einsum("qp,pqij->ij", op, A)


def transfer_E2(A) -> np.ndarray:
    A = as_tensor(A).A
    D = A.shape[2]
    return np.einsum("pqij,pqkl->ikjl", A, A.conj()).reshape(D * D, D * D)


def mixed_transfer(A, op_ket=None, op_bra=None, B=None) -> np.ndarray:
    """Σ ket[p',p] bra[q',q] A[p,q] ⊗ conj(B[p',q']), B defaults to A.

    This is one site of <<B| ket⊗bra |A>> where ``bra`` is the operator acting
    on the bra leg of the doubled space.
    """
    A = as_tensor(A).A
    Bt = A if B is None else as_tensor(B).A
    d = A.shape[0]
    if Bt.shape[:2] != A.shape[:2]:
        raise DimensionMismatch("mixed transfer needs equal physical dims")
    ket = np.eye(d) if op_ket is None else np.asarray(op_ket, complex)
    bra = np.eye(A.shape[1]) if op_bra is None else np.asarray(op_bra, complex)
    if ket.shape != (d, d) or bra.shape != (A.shape[1], A.shape[1]):
        raise DimensionMismatch("operator insertions must be d×d")
    Ap = np.einsum("xp,yq,pqij->xyij", ket, bra, A)
    D1, D2 = A.shape[2], Bt.shape[2]
    return np.einsum("pqij,pqkl->ikjl", Ap, Bt.conj()).reshape(D1 * D2, D1 * D2)


def batched_mixed_transfer(A, kets, bras) -> np.ndarray:
    """Stack of mixed transfers for paired lists of (ket, bra) insertions."""
    A = as_tensor(A).A
    d, D = A.shape[0], A.shape[2]
    kets = np.asarray(kets, complex)
    bras = np.asarray(bras, complex)
    # T[p', q', p, q] pieces: A[p,q] ⊗ conj(A[p',q'])
    Ap = np.einsum("nxp,nyq,pqij->nxyij", kets, bras, A, optimize=True)
    return np.einsum("nxyij,xykl->nikjl", Ap, A.conj(), optimize=True).reshape(len(kets), D * D, D * D)


def paired_mixed_transfer(A, kets, bras) -> np.ndarray:
    """T[i, j] = mixed_transfer(A, kets[i], bras[j]) for all pairs, shape (nk, nb, D², D²)."""
    A = as_tensor(A).A
    D = A.shape[2]
    kets = np.asarray(kets, complex)
    bras = np.asarray(bras, complex)
    M = np.einsum("nxp,pqij,xykl->nqyikjl", kets, A, A.conj(), optimize=True)
    out = np.einsum("myq,nqyikjl->nmikjl", bras, M, optimize=True)
    return out.reshape(len(kets), len(bras), D * D, D * D)


def batched_linear_transfer(A, ops) -> np.ndarray:
    A = as_tensor(A).A
    return np.einsum("nqp,pqij->nij", np.asarray(ops, complex), A)


def spectrum_E1(A) -> algebra.SpectralData:
    return algebra.eig(transfer_E1(A))


def spectrum_E2(A) -> algebra.SpectralData:
    return algebra.eig(transfer_E2(A))


def normalize_trace(A) -> MPDOTensor:
    A = as_tensor(A)
    lam = spectrum_E1(A).top
    if abs(lam) < 1e-300:
        raise NumericalFailure("E1 is nilpotent; cannot normalize the trace")
    return A.scaled(1.0 / lam)


# ---------------------------------------------------------------- rings and dense reconstruction


def ring_trace(mats, scale: float = 1.0) -> complex:
    """tr(M1 M2 ... Mn) with each factor divided by ``scale``."""
    out = None
    for m in mats:
        m = m / scale
        out = m if out is None else out @ m
    return complex(np.trace(out))


def chain_product(mats) -> np.ndarray:
    out = None
    for m in mats:
        out = m if out is None else out @ m
    return out


def trace_L(A, L: int) -> complex:
    E = transfer_E1(A)
    return complex(np.trace(np.linalg.matrix_power(E, L)))


def norm2_L(A, L: int) -> complex:
    E = transfer_E2(A)
    return complex(np.trace(np.linalg.matrix_power(E, L)))


def block_sites(A, n: int) -> MPDOTensor:
    """Fuse n consecutive sites into one with physical dim d**n."""
    A = as_tensor(A)
    if n < 1:
        raise ValueError("n must be >= 1")
    out = A.A
    for _ in range(n - 1):
        k1, b1 = out.shape[:2]
        k2, b2 = A.A.shape[:2]
        D = A.D
        out = np.einsum("pqij,rsjk->prqsik", out, A.A).reshape(k1 * k2, b1 * b2, D, D)
    return MPDOTensor(out)


def _site_products(A: np.ndarray, L: int) -> np.ndarray:
    """M[P, Q, a, b] = (A[p1,q1] ... A[pL,qL])_{ab} with P=(p1..pL), Q likewise."""
    d, D = A.shape[0], A.shape[2]
    M = A
    for _ in range(L - 1):
        P = M.shape[0]
        M = np.einsum("PQij,pqjk->PpQqik", M, A).reshape(P * d, P * d, D, D)
    return M


def _close(M1: np.ndarray, M2: np.ndarray, left=None, right=None) -> np.ndarray:
    """Join two site-product blocks into a dense operator.

    Periodic trace when ``left``/``right`` are None, else boundary vectors.
    """
    P1, P2, D = M1.shape[0], M2.shape[0], M1.shape[2]
    if left is None:
        a = M1.reshape(P1 * P1, D * D)
        b = M2.transpose(0, 1, 3, 2).reshape(P2 * P2, D * D)
    else:
        a = np.einsum("i,PQij->PQj", left, M1).reshape(P1 * P1, D)
        b = np.einsum("PQjk,k->PQj", M2, right).reshape(P2 * P2, D)
    X = (a @ b.T).reshape(P1, P1, P2, P2)
    return X.transpose(0, 2, 1, 3).reshape(P1 * P2, P1 * P2)


def dense_operator(A, L: int) -> np.ndarray:
    A = as_tensor(A)
    if L < 1:
        raise ValueError("L must be >= 1")
    check_dense(A.d ** (2 * L), "dense MPDO reconstruction")
    if L == 1:
        return np.einsum("pqii->pq", A.A)
    L1 = L // 2
    return _close(_site_products(A.A, L1), _site_products(A.A, L - L1))


def fixed_points_E1(A) -> tuple[complex, np.ndarray, np.ndarray]:
    """Top eigenvalue of E1 with left/right eigenvectors normalized to l·r = 1."""
    E = transfer_E1(A)
    lam, r = algebra.top_eigvec(E)
    lam_l, l = algebra.top_eigvec(E, left=True)
    ov = l @ r
    if abs(ov) < 1e-14:
        raise NumericalFailure("E1 top eigenvalue is defective; no boundary vectors")
    return lam, l / ov, r


def open_chain_operator(A, L: int) -> np.ndarray:
    """Segment of the infinite chain: boundary vectors from the E1 fixed points."""
    A = as_tensor(A)
    check_dense(A.d ** (2 * L), "open-chain reconstruction")
    lam, l, r = fixed_points_E1(A)
    if L == 1:
        return np.einsum("i,pqij,j->pq", l, A.A, r) / lam
    L1 = L // 2
    rho = _close(_site_products(A.A, L1), _site_products(A.A, L - L1), l, r)
    return rho / lam**L


# ---------------------------------------------------------------- normality / injectivity


def is_normal(A) -> bool:
    return spectrum_E2(A).unique_top


def unfolding_rank(A) -> int:
    A = as_tensor(A)
    return algebra.rank(A.A.reshape(-1, A.D * A.D))


@dataclass(frozen=True)
class InjectivityReport:
    injective: bool
    blocks: int
    rank: int
    D: int

    def __bool__(self) -> bool:
        return self.injective


def injectivity_check(A, max_block: int = 3) -> InjectivityReport:
    """Injective if the d²×D² unfolding has rank D², blocking up to ``max_block`` sites."""
    A = as_tensor(A)
    r = 0
    for n in range(1, max_block + 1):
        if (A.A.shape[0] * A.A.shape[1]) ** n < A.D**2 and n < max_block:
            continue
        r = unfolding_rank(block_sites(A, n))
        if r == A.D**2:
            return InjectivityReport(True, n, r, A.D)
    return InjectivityReport(False, max_block, r, A.D)


def split_cell(A, d_left: int, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Exact SVD split of a cell into (left site, rest).

    Returns raw arrays left (d,d,D,k) and right (d2,d2,k,D). Singular values
    below ``tol`` times the largest are dropped: rank revelation, no truncation.
    """
    A = as_tensor(A)
    d2 = A.d // d_left
    if d_left * d2 != A.d:
        raise DimensionMismatch("cell dim is not divisible by d_left")
    D = A.D
    T = A.A.reshape(d_left, d2, d_left, d2, D, D)
    T = T.transpose(0, 2, 4, 1, 3, 5).reshape(d_left * d_left * D, d2 * d2 * D)
    U, s, Vh = algebra.svd(T)
    k = int(np.sum(s > tol * (s[0] if s.size else 1.0)))
    k = max(k, 1)
    sq = np.sqrt(s[:k])
    left = (U[:, :k] * sq).reshape(d_left, d_left, D, k)
    right = (sq[:, None] * Vh[:k]).reshape(k, d2, d2, D).transpose(1, 2, 0, 3)
    return left, right


def recombine(left: np.ndarray, right: np.ndarray) -> MPDOTensor:
    """Cell tensor from a left part (d1,d1,a,x) and right part (d2,d2,x,b)."""
    d1, d2 = left.shape[0], right.shape[0]
    T = np.einsum("pqax,rsxb->prqsab", left, right)
    return MPDOTensor(T.reshape(d1 * d2, d1 * d2, left.shape[2], right.shape[3]))


def shift_cell(A, d_site: int, tol: float = 1e-12) -> MPDOTensor:
    """Move the unit cell one site to the right: cell (s1..sc) -> (s2..sc, s1')."""
    left, right = split_cell(A, d_site, tol)
    return recombine(right, left)


# ---------------------------------------------------------------- three-class taxonomy


class MpdoKind(str, enum.Enum):
    SYMMETRIC_INJECTIVE = "SymmetricInjective"
    DIRECT_SUM = "DirectSumSymmetricInjective"
    PERMUTED_BLOCKS = "SymmetryPermutedBlocks"


@dataclass(frozen=True)
class MpdoClass:
    kind: MpdoKind
    blocks: list = field(default_factory=list)
    block_permutation: dict = field(default_factory=dict)
    sites_blocked: int = 1
    period: int = 1

    @property
    def label(self) -> int:
        return {MpdoKind.SYMMETRIC_INJECTIVE: 1, MpdoKind.DIRECT_SUM: 2, MpdoKind.PERMUTED_BLOCKS: 3}[self.kind]

    def orbits(self, element) -> list[list[int]]:
        perm = self.block_permutation.get(element, list(range(len(self.blocks))))
        seen, out = set(), []
        for j in range(len(perm)):
            if j in seen:
                continue
            orb, x = [], j
            while x not in seen:
                seen.add(x)
                orb.append(x)
                x = perm[x]
            out.append(orb)
        return out


def peripheral_period(A, max_period: int = 6) -> int:
    """Smallest n with all top-magnitude E² eigenvalues positive after n-site blocking."""
    sp = spectrum_E2(A)
    lam = sp.eigenvalues[: sp.degeneracy_of_top]
    top = abs(lam[0])
    if top == 0:
        return 1
    ph = lam / top
    for n in range(1, max_period + 1):
        if np.all(np.abs(ph**n - 1) < 1e-6):
            return n
    return 1


def commutant(mats, tol: float = 1e-9) -> np.ndarray:
    """Basis (k, D, D) of matrices commuting with every mat and its adjoint."""
    mats = [np.asarray(m, complex) for m in mats]
    D = mats[0].shape[0]
    I = np.eye(D)
    rows = []
    for m in mats:
        for x in (m, m.conj().T):
            # row-major vec: vec(X x) = (I ⊗ x^T) vec X ; vec(x X) = (x ⊗ I) vec X
            rows.append(np.kron(I, x.T) - np.kron(x, I))
    ns = algebra.null_space(np.vstack(rows), rtol=tol)
    return ns.T.reshape(-1, D, D)


def bond_blocks(A, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Orthonormal bases (D×D_j isometries) of the irreducible bond blocks."""
    A = as_tensor(A)
    mats = [A.A[p, q] for p in range(A.d) for q in range(A.d) if np.abs(A.A[p, q]).max() > 0]
    if not mats:
        return [np.eye(A.D)]
    C = commutant(mats)
    if len(C) <= 1:
        return [np.eye(A.D, dtype=complex)]
    rng = rng or np.random.default_rng(7)
    H = np.zeros((A.D, A.D), complex)
    for X in C:
        c = rng.normal()
        H += c * (X + X.conj().T)
    w, v = np.linalg.eigh(H)
    groups, cur = [], [0]
    for i in range(1, len(w)):
        if abs(w[i] - w[cur[-1]]) < 1e-7 * max(1.0, abs(w).max()):
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    return [v[:, g] for g in groups]


def _restrict(A: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.einsum("ia,pqij,jb->pqab", P.conj(), A, P)


def _equivalence(B1: np.ndarray, B2: np.ndarray) -> float:
    """Spectral radius of the B1/B2 mixed transfer relative to the geometric mean."""
    m = algebra.eig(mixed_transfer(B1, B=B2)).eigenvalues
    r1 = abs(algebra.eig(transfer_E2(B1)).top)
    r2 = abs(algebra.eig(transfer_E2(B2)).top)
    if r1 == 0 or r2 == 0:
        return 0.0
    return float(abs(m[0]) / np.sqrt(r1 * r2))


def act_ket(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.einsum("xp,pqij->xqij", u, A)


def act_bra(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Doubled-space operator ``v`` on the bra leg."""
    return np.einsum("yq,pqij->pyij", v, A)


def match_cell(A, dim: int) -> MPDOTensor:
    """Block A so its physical dim equals ``dim`` (a power of A.d)."""
    A = as_tensor(A)
    if dim == A.d:
        return A
    n, x = 0, 1
    while x < dim:
        x *= A.d
        n += 1
    if x != dim:
        raise DimensionMismatch(f"rep dim {dim} is not a power of the site dim {A.d}")
    return block_sites(A, n)


def classify_mpdo(A, spec: SymmetrySpec | None = None) -> MpdoClass:
    """Three-class taxonomy from the irreducible bond blocks.

    The tensor is blocked to the symmetry unit cell and to the peripheral
    period of E². Blocks are found from the commutant of {A[p,q], A[p,q]†};
    each exact-symmetry generator (ket action) maps block j to a block
    gauge-equivalent to u·B_j, which defines the permutation.
    """
    A = as_tensor(A)
    sites = 1
    if spec is not None and spec.dim is not None and spec.dim != A.d:
        A2 = match_cell(A, spec.dim)
        sites = int(round(np.log(A2.d) / np.log(A.d)))
        A = A2
    period = peripheral_period(A)
    if period > 1:
        A = block_sites(A, period)
        sites *= period
    A = normalize_trace(A) if abs(spectrum_E1(A).top) > 1e-300 else A
    Ps = bond_blocks(A)
    blocks = [_restrict(A.A, P) for P in Ps]
    perms: dict = {}
    if spec is not None:
        for rep in spec.exact:
            for k in rep.group.generators():
                u = rep.mats[k]
                perm = []
                for Bj in blocks:
                    moved = act_ket(Bj, u)
                    scores = [_equivalence(moved, Bi) if Bi.shape[2] == Bj.shape[2] else 0.0 for Bi in blocks]
                    i = int(np.argmax(scores))
                    if scores[i] < 1 - 1e-6:
                        raise NumericalFailure("symmetry image of a block matches no block")
                    perm.append(i)
                perms[(id(rep), k)] = perm
    if len(blocks) == 1:
        kind = MpdoKind.SYMMETRIC_INJECTIVE
    elif all(p == list(range(len(blocks))) for p in perms.values()):
        kind = MpdoKind.DIRECT_SUM
    else:
        kind = MpdoKind.PERMUTED_BLOCKS
    keyed = {}
    if spec is not None:
        for rep in spec.exact:
            for k in rep.group.generators():
                keyed[k if len(spec.exact) == 1 else (spec.exact.index(rep), k)] = perms[(id(rep), k)]
    return MpdoClass(kind, [MPDOTensor(b) for b in blocks], keyed, sites, period)


def random_tensor(d: int, D: int, rng: np.random.Generator) -> MPDOTensor:
    A = rng.normal(size=(d, d, D, D)) + 1j * rng.normal(size=(d, d, D, D))
    return MPDOTensor(A / np.sqrt(d * D))


def random_valid_tensor(d: int, D_pure: int, kappa: int, rng: np.random.Generator) -> MPDOTensor:
    """Locally purified MPDO: A[p,q] = Σ_k B[p,k] ⊗ conj(B[q,k]); PSD for every L."""
    B = rng.normal(size=(d, kappa, D_pure, D_pure)) + 1j * rng.normal(size=(d, kappa, D_pure, D_pure))
    A = np.einsum("pkij,qkmn->pqimjn", B, B.conj()).reshape(d, d, D_pure**2, D_pure**2)
    return normalize_trace(MPDOTensor(A))


@dataclass
class UniquenessScan:
    """Random valid MPDOs: does a unique E² top eigenvalue come with a unique E¹ top?"""

    tested: int = 0
    unique_e2: int = 0
    counterexamples: list = field(default_factory=list)  # dicts with seed, shape and both gaps

    def to_json(self) -> dict:
        return {"tested": self.tested, "unique_e2": self.unique_e2, "counterexamples": self.counterexamples}


def uniqueness_scan(n: int, seed: int = 0, dims=(2, 3), bonds=(1, 2, 3), kappas=(1, 2, 3)) -> UniquenessScan:
    """Draw ``n`` locally purified tensors (sample i uses seed ``seed + i``)."""
    out = UniquenessScan()
    for i in range(n):
        rng = np.random.default_rng(seed + i)
        d, D, k = (int(rng.choice(x)) for x in (dims, bonds, kappas))
        A = random_valid_tensor(d, D, k, rng)
        s2, s1 = spectrum_E2(A), spectrum_E1(A)
        out.tested += 1
        if not s2.unique_top:
            continue
        out.unique_e2 += 1
        if not s1.unique_top:
            out.counterexamples.append(
                {"seed": seed + i, "d": d, "D_pure": D, "kappa": k, "gap_E2": s2.gap, "gap_E1": s1.gap}
            )
    return out
