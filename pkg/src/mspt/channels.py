"""Kraus gates, symmetric finite-depth circuits, and their action on MPDOs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .algebra import DimensionMismatch, check_dense
from .mpdo import MPDOTensor, as_tensor, block_sites, dense_operator, shift_cell
from .symmetry import OnsiteRep

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


class TPViolation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KrausGate:
    kraus: tuple
    span: int = 1
    name: str = ""

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a gate needs at least one Kraus operator")
        n = ks[0].shape[0]
        if any(k.shape != (n, n) for k in ks):
            raise DimensionMismatch("Kraus operators must be square and equal-sized")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim(self) -> int:
        return int(self.kraus[0].shape[0])

    @property
    def site_dim(self) -> int:
        return int(round(self.dim ** (1.0 / self.span)))


@dataclass
class ChannelCircuit:
    """Layers of (first site, gate) on a periodic chain of ``L`` sites."""

    layers: list = field(default_factory=list)
    L: int | None = None

    @property
    def depth(self) -> int:
        return len(self.layers)

    def check_disjoint(self, L: int) -> None:
        for layer in self.layers:
            used = set()
            for pos, g in layer:
                sites = {(pos + j) % L for j in range(g.span)}
                if used & sites:
                    raise ValueError("gates within a layer overlap")
                used |= sites


def tp_residual(g: KrausGate) -> float:
    s = sum(k.conj().T @ k for k in g.kraus)
    return float(np.abs(s - np.eye(g.dim)).max())


def validate_gate(g: KrausGate, tol: float = 1e-10) -> bool:
    return tp_residual(g) <= tol


def channel_superoperator(g: KrausGate, check: bool = True) -> np.ndarray:
    """Σ K ⊗ K* acting on row-major vectorized operators."""
    if check and not validate_gate(g):
        raise TPViolation(f"Σ K†K deviates from identity by {tp_residual(g):.2e}")
    return sum(np.kron(k, k.conj()) for k in g.kraus)


def _span_op(rep_or_op, element, g: KrausGate) -> np.ndarray:
    if isinstance(rep_or_op, OnsiteRep):
        u = rep_or_op.mats[element]
        if u.shape[0] == g.dim:
            return u
        if u.shape[0] ** g.span == g.dim:
            return algebra.kron(*([u] * g.span))
        raise DimensionMismatch("rep does not match gate span")
    u = np.asarray(rep_or_op, complex)
    if u.shape[0] != g.dim:
        raise DimensionMismatch("symmetry operator does not match gate")
    return u


def is_strongly_symmetric(g: KrausGate, rep, element=None, tol: float = 1e-10) -> bool:
    u = _span_op(rep, element, g)
    return all(np.abs(k @ u - u @ k).max() <= tol for k in g.kraus)


def is_weakly_symmetric(g: KrausGate, rep, element=None, tol: float = 1e-10) -> bool:
    u = _span_op(rep, element, g)
    S = channel_superoperator(g, check=False)
    U = np.kron(u, u.conj())
    return np.abs(S @ U - U @ S).max() <= tol


def smallest_singular_value(g: KrausGate) -> float:
    return float(algebra.svd(channel_superoperator(g, check=False))[1][-1])


def is_nondegenerate(g: KrausGate, tol: float = 1e-10) -> bool:
    return smallest_singular_value(g) > tol


def adjoint_gate(g: KrausGate) -> KrausGate:
    """Heisenberg-picture gate O -> Σ K† O K (unital)."""
    return KrausGate(tuple(k.conj().T for k in g.kraus), g.span, name=f"{g.name}†")


# ---------------------------------------------------------------- built-ins


def dephasing(p: float, op=X) -> KrausGate:
    """ρ -> (1-p) ρ + p OρO."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    op = np.asarray(op, complex)
    return KrausGate((np.sqrt(1 - p) * np.eye(op.shape[0]), np.sqrt(p) * op), 1, name=f"dephasing(p={p})")


def onsite_decoherence(p: float, op) -> KrausGate:
    g = dephasing(p, op)
    return KrausGate(g.kraus, 1, name=f"decoherence(p={p})")


def zz_dephasing(p: float = 0.5) -> KrausGate:
    zz = np.kron(Z, Z)
    return KrausGate((np.sqrt(1 - p) * np.eye(4), np.sqrt(p) * zz), 2, name=f"zz-dephasing(p={p})")


def unitary_gate(u, span: int = 1) -> KrausGate:
    return KrausGate((np.asarray(u, complex),), span, name="unitary")


def identity_gate(dim: int, span: int = 1) -> KrausGate:
    return KrausGate((np.eye(dim, dtype=complex),), span, name="identity")


def parse_channel(text: str) -> KrausGate:
    """Parse CLI forms like ``dephasing:p=0.5`` or ``zz:p=0.5``."""
    name, _, args = text.partition(":")
    kw = {}
    for part in filter(None, args.split(",")):
        k, _, v = part.partition("=")
        kw[k.strip()] = float(v)
    name = name.strip().lower()
    if name in ("dephasing", "x-dephasing"):
        return dephasing(kw.get("p", 0.5))
    if name in ("z-dephasing",):
        return dephasing(kw.get("p", 0.5), Z)
    if name in ("zz", "zz-dephasing"):
        return zz_dephasing(kw.get("p", 0.5))
    if name in ("identity", "id"):
        return identity_gate(2)
    raise ValueError(f"unknown channel {text!r}")


# ---------------------------------------------------------------- random symmetric gates


def symmetric_commutant_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis (k, n, n) of matrices commuting with the unitary u."""
    n = u.shape[0]
    I = np.eye(n)
    M = np.kron(u, I) - np.kron(I, u.T)
    ns = algebra.null_space(M)
    return ns.T.reshape(-1, n, n)


def random_symmetric_gate(
    syms, dim: int, span: int, rng: np.random.Generator, n_kraus: int = 2, unitary: bool = False
) -> KrausGate:
    """Random gate whose Kraus operators commute with every matrix in ``syms``.

    Kraus operators are drawn from the joint commutant and then made trace
    preserving by right-multiplying with S^{-1/2}, S = Σ K†K, which also
    commutes with the symmetry.
    """
    syms = [np.asarray(s, complex) for s in syms] or [np.eye(dim)]
    I = np.eye(dim)
    M = np.vstack([np.kron(s, I) - np.kron(I, s.T) for s in syms])
    basis = algebra.null_space(M).T.reshape(-1, dim, dim)
    def draw():
        c = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        return np.einsum("k,kij->ij", c, basis)
    if unitary:
        H = draw()
        H = H + H.conj().T
        w, v = np.linalg.eigh(H)
        return KrausGate(((v * np.exp(1j * w)) @ v.conj().T,), span, name="sym-unitary")
    ks = [draw() for _ in range(n_kraus)]
    S = sum(k.conj().T @ k for k in ks)
    w, v = np.linalg.eigh((S + S.conj().T) / 2)
    Sm = (v / np.sqrt(w)) @ v.conj().T
    return KrausGate(tuple(k @ Sm for k in ks), span, name="sym-kraus")


def random_near_identity_gate(syms, dim: int, span: int, rng: np.random.Generator, strength: float = 0.3) -> KrausGate:
    """Symmetric unitary mixed with a weak symmetric channel: well conditioned."""
    U = random_symmetric_gate(syms, dim, span, rng, unitary=True).kraus[0]
    K = random_symmetric_gate(syms, dim, span, rng, n_kraus=2).kraus
    q = strength * rng.uniform()
    ks = [np.sqrt(1 - q) * U] + [np.sqrt(q) * k for k in K]
    return KrausGate(tuple(ks), span, name="sym-mixed")


# ---------------------------------------------------------------- dense application


def _apply_kraus_dense(rho: np.ndarray, g: KrausGate, pos: int, d: int, L: int) -> np.ndarray:
    sites = [(pos + j) % L for j in range(g.span)]
    t = rho.reshape((d,) * (2 * L))
    out = np.zeros_like(t)
    n = g.span
    for K in g.kraus:
        Kt = K.reshape((d,) * (2 * n))
        # ket side
        s = np.tensordot(Kt, t, axes=(list(range(n, 2 * n)), sites))
        s = np.moveaxis(s, list(range(n)), sites)
        # bra side: contract conj(K) on bra axes
        bra_axes = [L + x for x in sites]
        s = np.tensordot(Kt.conj(), s, axes=(list(range(n, 2 * n)), bra_axes))
        s = np.moveaxis(s, list(range(n)), bra_axes)
        out += s
    return out.reshape(rho.shape)


def apply_circuit_dense(rho, c: ChannelCircuit, d: int = 2) -> np.ndarray:
    rho = np.asarray(rho, complex)
    N = rho.shape[0]
    L = int(round(np.log(N) / np.log(d)))
    if d**L != N:
        raise DimensionMismatch("state size is not a power of the site dim")
    check_dense(N * N, "dense channel application")
    c.check_disjoint(L)
    for layer in c.layers:
        for pos, g in layer:
            rho = _apply_kraus_dense(rho, g, pos, d, L)
    return rho


def tile_layer(g: KrausGate, L: int, offset: int = 0) -> list:
    """Translation-invariant layer: g on sites offset, offset+span, ... (periodic)."""
    if L % g.span:
        raise ValueError("chain length must be a multiple of the gate span")
    return [((offset + j * g.span) % L, g) for j in range(L // g.span)]


def truncate_circuit(c: ChannelCircuit, region, L: int | None = None) -> ChannelCircuit:
    """Keep gates in the backward light cone of ``region`` = (start, stop) inclusive."""
    lo, hi = region
    cone = set(range(lo, hi + 1))
    kept_rev = []
    for layer in reversed(c.layers):
        kept = []
        grow = set()
        for pos, g in layer:
            sites = {pos + j if L is None else (pos + j) % L for j in range(g.span)}
            if sites & cone:
                kept.append((pos, g))
                grow |= sites
        cone |= grow
        kept_rev.append(kept)
    return ChannelCircuit(list(reversed(kept_rev)), c.L)


# ---------------------------------------------------------------- MPDO application


def apply_superop_to_tensor(A, S: np.ndarray) -> MPDOTensor:
    """Contract a superoperator on the cell's doubled physical legs."""
    A = as_tensor(A)
    d = A.d
    if S.shape != (d * d, d * d):
        raise DimensionMismatch(f"superoperator {S.shape} does not fit cell dim {d}")
    St = S.reshape(d, d, d, d)
    return MPDOTensor(np.einsum("pqrs,rsij->pqij", St, A.A))


def _cell_superop(g: KrausGate, cell_sites: int, d_site: int) -> np.ndarray:
    """Superoperator of g tiled across a cell of ``cell_sites`` sites."""
    if cell_sites % g.span:
        raise ValueError("cell size must be a multiple of the gate span")
    reps = cell_sites // g.span
    ks = g.kraus
    # Superoperator on the cell in row-major (P, Q) ordering: Σ over Kraus tuples of K⊗K*
    Kc = [np.eye(1, dtype=complex)]
    for _ in range(reps):
        Kc = [np.kron(a, k) for a in Kc for k in ks]
    return sum(np.kron(k, k.conj()) for k in Kc)


@dataclass(frozen=True)
class CellState:
    """Translation-invariant MPDO with a unit cell of ``cell`` sites starting at ``origin``."""

    tensor: MPDOTensor
    d_site: int
    cell: int = 1
    origin: int = 0

    def dense(self, n_cells: int) -> np.ndarray:
        """Dense operator on cell·n_cells sites, indexed from absolute site 0."""
        rho = dense_operator(self.tensor, n_cells)
        L = self.cell * n_cells
        shift = self.origin % L
        if shift == 0:
            return rho
        d = self.d_site
        t = rho.reshape((d,) * (2 * L))
        # axis j of t holds absolute site origin + j; roll so axis k is site k
        perm = [(k - shift) % L for k in range(L)]
        t = t.transpose(perm + [L + x for x in perm])
        return t.reshape(rho.shape)


def to_cell(A, d_site: int | None = None, cell: int = 1) -> CellState:
    A = as_tensor(A)
    d_site = d_site or A.d
    if cell > 1 and A.d == d_site:
        A = block_sites(A, cell)
    return CellState(A, d_site, cell, 0)


def apply_layer(state: CellState, g: KrausGate, offset: int = 0, tol: float = 1e-12) -> CellState:
    """Apply g on every block of g.span sites starting at absolute site ``offset``."""
    if g.site_dim != state.d_site:
        raise DimensionMismatch("gate and state site dims differ")
    cell = state.cell
    T, origin = state.tensor, state.origin
    if cell % g.span:
        # grow the cell to a common multiple
        new = cell * g.span // np.gcd(cell, g.span)
        T = block_sites(T, new // cell)
        cell = new
    while (offset - origin) % g.span:
        T = shift_cell(T, state.d_site, tol)
        origin += 1
    S = _cell_superop(g, cell, state.d_site)
    return CellState(apply_superop_to_tensor(T, S), state.d_site, cell, origin % cell)


def apply_gate_to_mpdo(A, g: KrausGate) -> MPDOTensor:
    """Apply g on every site (1-site gate) or every aligned pair (2-site gate).

    For a 2-site gate on a single-site tensor the result is the 2-site cell
    tensor; ``mpdo.split_cell`` recovers the two site tensors exactly.
    """
    A = as_tensor(A)
    if g.dim == A.d:
        return apply_superop_to_tensor(A, channel_superoperator(g))
    if g.site_dim == A.d:
        return apply_superop_to_tensor(block_sites(A, g.span), channel_superoperator(g))
    return apply_layer(CellState(A, g.site_dim, int(round(np.log(A.d) / np.log(g.site_dim)))), g).tensor


def apply_ti_circuit(state: CellState, layers, tol: float = 1e-12) -> CellState:
    """Apply translation-invariant layers given as (gate, offset) pairs."""
    for g, off in layers:
        state = apply_layer(state, g, off, tol)
    return state


def ti_to_dense_circuit(layers, L: int) -> ChannelCircuit:
    return ChannelCircuit([tile_layer(g, L, off) for g, off in layers], L)
