"""Bond gauge matrices of symmetric injective tensors and the invariants they carry.

Convention: a symmetry acting on the physical legs maps the tensor to
``A' = e^{iθ} V⁻¹ A V``. In the left-canonical gauge (Σ A†A ∝ I) V is
unitary, so this reads ``A' = e^{iθ} V† A V``. For composite actions
``V_{ab} ∝ V_a V_b`` and the projective phase is ω(a,b) = V_a V_b V_{ab}⁻¹.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .algebra import NumericalFailure
from .cohomology import cohomology_group, normalize_u1_cocycle, slant_product
from .mpdo import (
    MPDOTensor,
    as_tensor,
    block_sites,
    injectivity_check,
    match_cell,
    mixed_transfer,
    spectrum_E2,
    transfer_E1,
)
from .symmetry import FiniteGroup, IrrepLabel, OnsiteRep

MIXED_TOL = 1e-6
ACCEPT_TOL = 1e-8


class SymmetryNotRealized(RuntimeError):
    """The mixed transfer matrix has no unit-modulus eigenvalue."""

    def __init__(self, ratio: float):
        super().__init__(f"mixed-transfer top magnitude ratio {ratio:.3e} < 1")
        self.ratio = ratio


class GaugeInconsistency(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GaugeMatrix:
    element: object
    V: np.ndarray
    fidelity: float
    theta: float = 0.0
    unitarity: float = 0.0
    sites_blocked: int = 1

    def to_json(self) -> dict:
        return {
            "element": self.element,
            "V": [[[float(z.real), float(z.imag)] for z in row] for row in self.V],
            "fidelity": self.fidelity,
            "theta": self.theta,
        }


# ---------------------------------------------------------------- preparation


def left_canonical(A) -> tuple[MPDOTensor, np.ndarray]:
    """Gauge A -> S A S⁻¹ with Σ A'†A' ∝ I; returns (A', S)."""
    A = as_tensor(A)
    mats = A.A.reshape(-1, A.D, A.D)
    T = sum(np.kron(m.conj().T, m.T) for m in mats)
    _, y = algebra.top_eigvec(T)
    Y = y.reshape(A.D, A.D)
    Y = Y / np.trace(Y)
    Y = (Y + Y.conj().T) / 2
    w = np.linalg.eigvalsh(Y)
    if w.min() <= 1e-12 * w.max():
        return A, np.eye(A.D, dtype=complex)
    S = algebra.psd_sqrt(Y)
    return A.gauge(np.linalg.inv(S)), S


def prepare(A, dim: int | None = None, max_block: int = 3) -> tuple[MPDOTensor, int]:
    """Block to the rep cell, then further (whole cells) until injective."""
    A = as_tensor(A)
    base = A if dim is None else match_cell(A, dim)
    sites = int(round(np.log(base.d) / np.log(A.d))) if A.d > 1 else 1
    for n in range(1, max_block + 1):
        B = block_sites(base, n) if n > 1 else base
        if injectivity_check(B, max_block=1).injective:
            return B, sites * n
    return base, sites


def _match_rep(rep: OnsiteRep, d: int) -> OnsiteRep:
    """Tensor power of ``rep`` acting on a blocked cell of dimension d."""
    n = int(round(np.log(d) / np.log(rep.dim))) if rep.dim > 1 else 1
    if rep.dim**n != d:
        raise ValueError(f"rep of dimension {rep.dim} does not tile a cell of dimension {d}")
    out = rep
    for _ in range(n - 1):
        out = out.tensor(rep)
    return out


# ---------------------------------------------------------------- core solver


def _transform(A: np.ndarray, ket=None, bra=None, conj: bool = False) -> np.ndarray:
    out = A
    if conj:
        if A.shape[1] == 1:
            out = A.conj()
        else:
            out = A.transpose(1, 0, 2, 3).conj()
    if ket is not None:
        out = np.einsum("xp,pqij->xqij", ket, out)
    if bra is not None:
        out = np.einsum("yq,pqij->pyij", bra, out)
    return out


def solve_gauge(A, Aprime, element=None, sites: int = 1) -> GaugeMatrix:
    """Find θ and V with A' = e^{iθ} V⁻¹ A V, via the mixed transfer matrix."""
    A = as_tensor(A)
    Ap = as_tensor(Aprime)
    lam2 = abs(spectrum_E2(A).top)
    m = algebra.eig(mixed_transfer(Ap, B=A)).eigenvalues[0]
    ratio = abs(m) / lam2 if lam2 > 0 else 0.0
    if abs(ratio - 1) > MIXED_TOL:
        raise SymmetryNotRealized(ratio)
    theta = float(np.angle(m))
    ph = np.exp(1j * theta)
    D = A.D
    I = np.eye(D)
    rows = []
    for s_ap, s_a in zip(Ap.A.reshape(-1, D, D), A.A.reshape(-1, D, D)):
        # row-major vec: vec(V A') = (I ⊗ A'ᵀ) v ; vec(A V) = (A ⊗ I) v
        rows.append(np.kron(I, s_ap.T) - ph * np.kron(s_a, I))
    ref = max(np.linalg.norm(A.A.reshape(-1, D * D), axis=1).max(), 1e-300)
    ns = algebra.null_space(np.vstack(rows), rtol=1e-8, ref=ref)
    if ns.shape[1] == 0:
        raise NumericalFailure("no gauge matrix solves the symmetry equation")
    V = ns[:, 0].reshape(D, D)
    det = np.linalg.det(V)
    if abs(det) < 1e-14:
        raise NumericalFailure("gauge matrix is singular")
    V = V / abs(det) ** (1.0 / D)
    V = algebra.fix_phase(V)
    Vi = np.linalg.inv(V)
    scale = max(np.abs(A.A).max(), 1e-300)
    resid = max(np.abs(a2 - ph * Vi @ a1 @ V).max() for a1, a2 in zip(A.A.reshape(-1, D, D), Ap.A.reshape(-1, D, D)))
    unit = float(np.abs(V.conj().T @ V - I * np.trace(V.conj().T @ V) / D).max())
    return GaugeMatrix(element, V, float(resid / scale), theta, unit, sites)


def _op_for(rep: OnsiteRep, element: int, action: str):
    u = rep.mats[element]
    if action == "ket":
        return u, None
    if action == "bra":
        return None, u.conj()
    if action == "diagonal":
        return u, u.conj()
    raise ValueError(f"unknown action {action!r}")


def extract_Vg(A, rep: OnsiteRep, element: int, action: str = "diagonal", canonical: bool = True) -> GaugeMatrix:
    """V_g for a ket, bra or diagonal (average) action of ``rep[element]``."""
    B, sites = prepare(A, rep.dim)
    if canonical:
        B, _ = left_canonical(B)
    ket, bra = _op_for(_match_rep(rep, B.d), element, action)
    if B.A.shape[1] == 1 and bra is not None:
        raise ValueError("bra actions need an operator tensor, not a ket-only MPS")
    return solve_gauge(B, _transform(B.A, ket, bra), element, sites)


def extract_gauges(A, rep: OnsiteRep, action: str = "diagonal", canonical: bool = True) -> list[GaugeMatrix]:
    B, sites = prepare(A, rep.dim)
    if canonical:
        B, _ = left_canonical(B)
    rep = _match_rep(rep, B.d)
    out = []
    for g in range(rep.group.order):
        ket, bra = _op_for(rep, g, action)
        out.append(solve_gauge(B, _transform(B.A, ket, bra), g, sites))
    return out


def extract_doubled_gauges(A, ket_rep: OnsiteRep, bra_rep: OnsiteRep, canonical: bool = True) -> list[GaugeMatrix]:
    """Gauges for K₊×K₋ acting by (u_a on kets) ⊗ (conj(v_b) on bras); element a·|K₋|+b."""
    B, sites = prepare(A, ket_rep.dim)
    if canonical:
        B, _ = left_canonical(B)
    ket_rep, bra_rep = _match_rep(ket_rep, B.d), _match_rep(bra_rep, B.A.shape[1])
    out = []
    m = bra_rep.group.order
    for a in range(ket_rep.group.order):
        for b in range(m):
            Ap = _transform(B.A, ket_rep.mats[a], bra_rep.mats[b].conj())
            out.append(solve_gauge(B, Ap, a * m + b, sites))
    return out


def extract_VJ(A, canonical: bool = True) -> GaugeMatrix:
    """V_J with conj(A^{qp}) = V_J⁻¹ A^{pq} V_J (θ must vanish for hermitian ρ)."""
    B, sites = prepare(A)
    if canonical:
        B, _ = left_canonical(B)
    return solve_gauge(B, _transform(B.A, conj=True), "J", sites)


def vj_sign(g: GaugeMatrix, tol: float = ACCEPT_TOL) -> int:
    """The scalar V_J V_J*, which must be ±1."""
    W = g.V @ g.V.conj()
    D = W.shape[0]
    c = np.trace(W) / D
    if abs(c) < 1e-14 or np.abs(W - c * np.eye(D)).max() > tol * max(1.0, abs(c)) * 10:
        raise GaugeInconsistency("V_J V_J* is not proportional to the identity")
    c = c / abs(c)
    if abs(c.imag) > 1e-6:
        raise GaugeInconsistency(f"V_J V_J* = {c} is not real")
    return 1 if c.real > 0 else -1


# ---------------------------------------------------------------- projective phases


@dataclass(frozen=True, eq=False)
class CocycleTable:
    group: FiniteGroup
    omega: np.ndarray  # R/Z values ω(a, b)
    max_nonscalar: float = 0.0

    def phase(self, a: int, b: int) -> complex:
        return complex(np.exp(2j * np.pi * self.omega[a, b]))

    def residual(self) -> float:
        from .cohomology import cocycle_residual

        return cocycle_residual(self.group, 2, self.omega)


def projective_phase(gauges: list[GaugeMatrix], group: FiniteGroup, tol: float = 1e-6) -> CocycleTable:
    """ω(a,b) from V_a V_b V_{ab}⁻¹ = e^{2πiω(a,b)}·I."""
    if len(gauges) != group.order:
        raise ValueError("need one gauge matrix per group element")
    D = gauges[0].V.shape[0]
    # det V = 1 leaves only D-th roots of unity free, so ω stays rational
    Vs = [g.V / np.linalg.det(g.V) ** (1.0 / D) for g in gauges]
    om = np.zeros((group.order, group.order))
    worst = 0.0
    for a in range(group.order):
        for b in range(group.order):
            W = Vs[a] @ Vs[b] @ np.linalg.inv(Vs[group.mul[a, b]])
            c = np.trace(W) / D
            dev = float(np.abs(W - c * np.eye(D)).max() / max(abs(c), 1e-300))
            worst = max(worst, dev)
            om[a, b] = np.mod(np.angle(c) / (2 * np.pi), 1.0)
    if worst > tol:
        raise GaugeInconsistency(f"V_a V_b V_ab^-1 is not scalar (deviation {worst:.2e})")
    return CocycleTable(group, om, worst)


@dataclass(frozen=True)
class CocycleClass:
    coordinates: tuple
    orders: tuple
    label: str

    @property
    def trivial(self) -> bool:
        return all(c == 0 for c in self.coordinates)


def cocycle_class(t: CocycleTable) -> CocycleClass:
    H = cohomology_group(t.group, 2)
    om = normalize_u1_cocycle(t.group, 2, _snap(t.omega))
    coords = H.class_of(om)
    lab = "trivial" if all(c == 0 for c in coords) else "class" + "".join(f"[{c}/{o}]" for c, o in zip(coords, H.torsion_orders))
    return CocycleClass(tuple(coords), tuple(H.torsion_orders), lab)


def _snap(om: np.ndarray, denom: int = 720) -> np.ndarray:
    """Round R/Z values to the nearest multiple of 1/denom (finite-group cocycles are rational)."""
    return np.mod(np.rint(np.asarray(om) * denom) / denom, 1.0)


def slant_from_gauges(t: CocycleTable, Kplus: FiniteGroup, Kminus: FiniteGroup, k: int) -> IrrepLabel:
    return slant_product(t.omega, Kplus, Kminus, k)


# ---------------------------------------------------------------- block structure


@dataclass(frozen=True)
class BlockReport:
    vj_offblock: float
    vg_offblock: dict
    vg_corner_phases: dict
    linear_rep_residual: float
    vg_vj_residual: dict
    passed: bool


def _W_from_E1(A: MPDOTensor) -> np.ndarray:
    E = transfer_E1(A)
    sp = algebra.eig(E)
    if not sp.unique_top:
        raise NumericalFailure("E1 top eigenvalue is degenerate (symmetry breaking); no block structure")
    _, r = algebra.top_eigvec(E)
    _, l = algebra.top_eigvec(E, left=True)
    comp = algebra.null_space(l[None, :])
    return np.column_stack([r, comp])


def _offblock(M: np.ndarray) -> float:
    return float(max(np.abs(M[0, 1:]).max(initial=0.0), np.abs(M[1:, 0]).max(initial=0.0)) / max(abs(M[0, 0]), 1e-300))


def check_block_structure(A, rep: OnsiteRep | None = None, tol: float = 1e-8) -> BlockReport:
    """Conjugate V_J and the diagonal-action V_g by W from the E¹ eigenvectors.

    The first row and column must vanish outside the (1,1) entry, and after
    fixing each [W⁻¹V_gW]₁₁ real positive the V_g multiply linearly.
    """
    dim = rep.dim if rep is not None else None
    B, sites = prepare(A, dim)
    B, _ = left_canonical(B)
    W = _W_from_E1(B)
    Wi = np.linalg.inv(W)
    gJ = solve_gauge(B, _transform(B.A, conj=True), "J", sites)
    VJt = Wi @ gJ.V @ W.conj()
    vj_off = _offblock(VJt)
    vg_off, corners, vgvj = {}, {}, {}
    lin = 0.0
    if rep is not None:
        rep = _match_rep(rep, B.d)
        Vs = []
        for g in range(rep.group.order):
            u = rep.mats[g]
            gg = solve_gauge(B, _transform(B.A, u, u.conj()), g, sites)
            Vt = Wi @ gg.V @ W
            vg_off[g] = _offblock(Vt)
            c = Vt[0, 0]
            corners[g] = float(np.angle(c))
            V = gg.V * (abs(c) / c) if abs(c) > 1e-12 else gg.V
            Vs.append(V)
            a = V @ gJ.V
            b = gJ.V @ V.conj()
            vgvj[g] = float(min(np.abs(a - b).max(), np.abs(a + b).max()) / np.abs(a).max())
        D = B.D
        for a in range(rep.group.order):
            for b in range(rep.group.order):
                Wab = Vs[a] @ Vs[b] @ np.linalg.inv(Vs[rep.group.mul[a, b]])
                lin = max(lin, float(np.abs(Wab - np.eye(D)).max()))
    passed = vj_off <= tol and all(v <= tol for v in vg_off.values()) and lin <= 1e-6
    return BlockReport(vj_off, vg_off, corners, lin, vgvj, bool(passed))
