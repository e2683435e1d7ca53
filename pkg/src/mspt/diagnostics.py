"""Order, disorder and string-order diagnostics on translation-invariant MPDOs.

All transfer-matrix contractions run on a periodic ring of cells. The cell is
the physical site of the tensor after blocking it to the symmetry rep's
dimension. Endpoint windows of ``w`` cells straddle each edge of the string
region: the left window covers cells ``[a-w+1, a]`` and the right one
``[b, b+w-1]``, and the endpoint operator multiplies the string restricted to
the window. Since the group is abelian, this does not change the endpoint's
charge.

Doubled-space conventions follow :mod:`mspt.mpdo`: ``(K ⊗ B)|ρ>>`` is
``K ρ Bᵀ``, so ``<<ρ|K ⊗ B|ρ>> = tr(ρ† K ρ Bᵀ)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import algebra
from .mpdo import (
    MPDOTensor,
    as_tensor,
    batched_linear_transfer,
    batched_mixed_transfer,
    block_sites,
    linear_transfer,
    match_cell,
    mixed_transfer,
    open_chain_operator,
    paired_mixed_transfer,
    transfer_E1,
    transfer_E2,
)
from .symmetry import IrrepLabel, OnsiteRep, SymmetrySpec, irreps_abelian, operator_charge

LRO_THRESHOLD = 0.1
ZERO_THRESHOLD = 1e-6

KINDS_C = ("C1", "C2", "C3")
KINDS_D = ("D1", "D2", "D3")


class InvalidTensor(ValueError):
    pass


# ---------------------------------------------------------------- operator bases


def weyl_ops(n: int) -> tuple[np.ndarray, list[str]]:
    """Clock-shift basis X^a Z^b on C^n, all unitary and HS-orthogonal."""
    w = np.exp(2j * np.pi / n)
    Xs = np.roll(np.eye(n), 1, axis=0).astype(complex)
    Zc = np.diag(w ** np.arange(n))
    ops, labels = [], []
    for a in range(n):
        for b in range(n):
            ops.append(np.linalg.matrix_power(Xs, a) @ np.linalg.matrix_power(Zc, b))
            if n == 2:
                labels.append({(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "XZ"}[(a, b)])
            else:
                labels.append(f"X{a}Z{b}")
    return np.array(ops), labels


def product_basis(d_site: int, n_sites: int) -> tuple[np.ndarray, list[str]]:
    ops1, lab1 = weyl_ops(d_site)
    ops, labels = [], []
    for combo in itertools.product(range(len(ops1)), repeat=n_sites):
        ops.append(algebra.kron(*[ops1[i] for i in combo]))
        labels.append("".join(lab1[i] if len(lab1[i]) == 1 else f"({lab1[i]})" for i in combo))
    return np.array(ops), labels


@dataclass(frozen=True, eq=False)
class GradedBasis:
    """Operator basis split by charge: sector charges -> (ops, labels)."""

    rep: OnsiteRep
    sectors: dict

    def ops(self, charges=None) -> tuple[np.ndarray, list[str]]:
        if charges is None:
            all_ops = [o for ops, _ in self.sectors.values() for o in ops]
            all_lab = [lab for _, labs in self.sectors.values() for lab in labs]
            return np.array(all_ops), all_lab
        return self.sectors.get(tuple(charges), (np.zeros((0, self.rep.dim, self.rep.dim), complex), []))

    def charged(self, element: int) -> tuple[np.ndarray, list[str]]:
        """Operators whose character at ``element`` is not 1."""
        irr = {i.charges: i for i in irreps_abelian(self.rep.group)}
        ops, labs = [], []
        for ch, (o, lab) in self.sectors.items():
            if abs(irr[ch].character[element] - 1) > 1e-9:
                ops.extend(o)
                labs.extend(lab)
        return np.array(ops).reshape(-1, self.rep.dim, self.rep.dim), labs


def graded_basis(rep: OnsiteRep, d_site: int | None = None) -> GradedBasis:
    """Charge-graded orthogonal basis of operators on the rep's space.

    Tensor products of single-site clock-shift operators are used when every
    one of them has a definite charge; otherwise matrix units are projected
    to each sector and orthonormalized (scaled to ‖O‖² = dim).
    """
    dim = rep.dim
    d_site = d_site or dim
    n_sites = round(math.log(dim, d_site))
    sectors: dict = {}
    if d_site**n_sites == dim:
        ops, labels = product_basis(d_site, n_sites)
        charges = [operator_charge(o, rep) for o in ops]
        if all(c is not None for c in charges):
            for o, lab, c in zip(ops, labels, charges):
                sectors.setdefault(c.charges, ([], []))
                sectors[c.charges][0].append(o)
                sectors[c.charges][1].append(lab)
            return GradedBasis(rep, {k: (np.array(v[0]), v[1]) for k, v in sectors.items()})
    units = np.eye(dim * dim, dtype=complex).reshape(dim * dim, dim, dim)
    g = rep.group
    for irr in irreps_abelian(g):
        proj = np.zeros_like(units)
        for a in range(g.order):
            u = rep.mats[a]
            proj += irr.character[a].conj() * np.einsum("ij,njk,lk->nil", u, units, u.conj())
        proj /= g.order
        M = proj.reshape(dim * dim, dim * dim)
        U, s, _ = np.linalg.svd(M.T, full_matrices=False)
        r = int(np.sum(s > 1e-10))
        if r == 0:
            continue
        ops = (U[:, :r].T * np.sqrt(dim)).reshape(r, dim, dim)
        sectors[irr.charges] = (ops, [f"q{irr.charges}#{i}" for i in range(r)])
    return GradedBasis(rep, sectors)


def window_rep(rep: OnsiteRep, w: int) -> OnsiteRep:
    out = rep
    for _ in range(w - 1):
        out = out.tensor(rep)
    return out


def factor_onsite(op: np.ndarray, d_site: int, n_sites: int, tol: float = 1e-10) -> list[np.ndarray] | None:
    """Split an operator on n sites into a product of single-site factors, or None."""
    op = np.asarray(op, complex)
    factors = []
    rest = op
    for k in range(n_sites - 1):
        dr = d_site ** (n_sites - k - 1)
        T = rest.reshape(d_site, dr, d_site, dr).transpose(0, 2, 1, 3).reshape(d_site * d_site, dr * dr)
        U, s, Vh = np.linalg.svd(T, full_matrices=False)
        if s.size > 1 and s[1] > tol * max(s[0], 1e-300):
            return None
        factors.append((U[:, 0] * s[0]).reshape(d_site, d_site))
        rest = Vh[0].reshape(dr, dr)
    factors.append(rest)
    # balance norms so unitary inputs give unitary factors
    out = []
    for f in factors:
        scale = np.sqrt(np.trace(f.conj().T @ f).real / d_site)
        out.append(f / scale if scale > 0 else f)
    phase = np.vdot(algebra.kron(*out).ravel(), op.ravel())
    out[0] = out[0] * phase / abs(phase) if abs(phase) > 0 else out[0]
    return out


def string_pattern(rep: OnsiteRep, element: int, d_site: int) -> list[np.ndarray]:
    """Per-site factors of the cell operator u_element, anchored at the cell origin."""
    n = round(math.log(rep.dim, d_site))
    f = factor_onsite(rep.mats[element], d_site, n)
    if f is None:
        raise ValueError("symmetry operator does not factor into single-site pieces")
    return f


# ---------------------------------------------------------------- ring engine


def _cell_tensor(A, dim: int | None) -> MPDOTensor:
    A = as_tensor(A)
    return A if dim is None else match_cell(A, dim)


class _Ring:
    """Normalized transfer matrix of one cell and powers of it."""

    def __init__(self, E: np.ndarray, L: int):
        lam = algebra.eig(E).top
        if abs(lam) < 1e-300:
            raise InvalidTensor("transfer matrix is nilpotent (zero norm on every ring)")
        self.scale = abs(lam)
        self.E = E / self.scale
        self.L = L
        Z = np.trace(np.linalg.matrix_power(self.E, L))
        if abs(Z) < 1e-14:
            raise InvalidTensor("ring normalization vanishes")
        self.Z = Z

    def power(self, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.E, n)

    def normalize(self, M: np.ndarray, cells: int) -> np.ndarray:
        return M / self.scale**cells


def _ring_value(ring: _Ring, inserts) -> complex:
    """inserts: sorted (start, n_cells, matrix) with start >= 0, non-overlapping."""
    P = np.eye(ring.E.shape[0], dtype=complex)
    pos = 0
    for s, n, M in inserts:
        if s < pos:
            raise ValueError("overlapping insertions")
        P = P @ ring.power(s - pos) @ ring.normalize(M, n)
        pos = s + n
    if pos > ring.L:
        raise ValueError("insertions exceed ring length")
    P = P @ ring.power(ring.L - pos)
    return complex(np.trace(P) / ring.Z)


def _pair_scan(
    ring: _Ring, left: np.ndarray, nl: int, mid: np.ndarray, nm: int, right: np.ndarray, nr: int, mid_normalized: bool = False
) -> np.ndarray:
    """value[i, j] = tr(left_i · mid · right_j · E^rest) / Z, all normalized."""
    rest = ring.L - nl - nm - nr
    if rest < 0:
        raise ValueError("ring too short for the requested region")
    lm = (left / ring.scale**nl) @ (mid if mid_normalized else ring.normalize(mid, nm))
    rr = (right / ring.scale**nr) @ ring.power(rest)
    chi = lm.shape[1]
    return (lm.reshape(-1, chi * chi) @ rr.transpose(0, 2, 1).reshape(-1, chi * chi).T) / ring.Z


def default_ring(extent: int, pad: int = 24, xi: float = 0.0) -> int:
    """Ring length with at least ``pad`` (and 16 ξ) cells on either side of the region."""
    return extent + 2 * max(pad, math.ceil(16 * xi))


# ---------------------------------------------------------------- correlators


def _check_kind(kind: str, allowed) -> str:
    k = kind.upper()
    if k not in allowed:
        raise ValueError(f"kind must be one of {allowed}, got {kind!r}")
    return k


def _corr_ops(kind: str, O: np.ndarray):
    """(ket_x, bra_x, ket_y, bra_y) for C1/C2, or (op_x, op_y) for C3."""
    Od = O.conj().T
    if kind == "C1":
        return O, None, Od, None
    if kind == "C2":
        return O, O.conj(), Od, Od.conj()
    return O, Od


def correlator(A, kind: str, O, x: int, y: int, L: int | None = None) -> complex:
    """C1, C2 or C3 of O_x O_y† on a ring of L cells (cells = physical sites of A).

    O may act on a block of sites; A is then blocked to match.
    """
    kind = _check_kind(kind, KINDS_C)
    O = np.asarray(O, complex)
    if x == y:
        raise ValueError("x and y must differ")
    T = _cell_tensor(A, O.shape[0])
    L = L or default_ring(abs(y - x) + 1)
    if abs(y - x) >= L:
        raise ValueError("separation exceeds ring length")
    s = (y - x) % L
    if kind == "C3":
        ring = _Ring(transfer_E1(T), L)
        ox, oy = _corr_ops(kind, O)
        ins = [(0, 1, linear_transfer(T, ox)), (s, 1, linear_transfer(T, oy))]
    else:
        ring = _Ring(transfer_E2(T), L)
        kx, bx, ky, by = _corr_ops(kind, O)
        ins = [(0, 1, mixed_transfer(T, kx, bx)), (s, 1, mixed_transfer(T, ky, by))]
    return _ring_value(ring, ins)


def embed(site_ops: dict, L: int, d: int) -> np.ndarray:
    """Dense operator on L sites of dim d from {site: op}; ops may span several sites."""
    algebra.check_dense(d ** (2 * L), "embedded operator")
    pieces = []
    i = 0
    items = sorted(site_ops.items())
    idx = 0
    while i < L:
        if idx < len(items) and items[idx][0] == i:
            op = np.asarray(items[idx][1], complex)
            n = round(math.log(op.shape[0], d))
            if i + n > L:
                raise ValueError("operator runs past the chain end")
            pieces.append(op)
            i += n
            idx += 1
        else:
            pieces.append(np.eye(d, dtype=complex))
            i += 1
    return algebra.kron(*pieces)


def doubled_expectation(rho: np.ndarray, ket: np.ndarray, bra: np.ndarray) -> complex:
    """<<ρ|ket ⊗ bra|ρ>> = tr(ρ† ket ρ braᵀ)."""
    return complex(np.trace(rho.conj().T @ ket @ rho @ bra.T))


def correlator_dense(rho, kind: str, O, x: int, y: int, d: int = 2) -> complex:
    """Dense oracle for :func:`correlator`; x, y are positions in units of O's size."""
    kind = _check_kind(kind, KINDS_C)
    rho = np.asarray(rho, complex)
    O = np.asarray(O, complex)
    n = round(math.log(O.shape[0], d))
    L = round(math.log(rho.shape[0], d))
    Ox = embed({x * n: O}, L, d)
    Oyd = embed({y * n: O.conj().T}, L, d)
    M = Ox @ Oyd
    if kind == "C3":
        return complex(np.trace(rho @ M))
    norm = doubled_expectation(rho, np.eye(rho.shape[0]), np.eye(rho.shape[0]))
    if abs(norm) < 1e-300:
        raise InvalidTensor("tr(ρ²) vanishes")
    if kind == "C1":
        return doubled_expectation(rho, M, np.eye(rho.shape[0])) / norm
    return doubled_expectation(rho, M, M.conj()) / norm


# ---------------------------------------------------------------- disorder parameters


@dataclass(frozen=True)
class EndpointScan:
    value: complex
    left: str
    right: str
    values: np.ndarray = field(repr=False, default=None)

    @property
    def magnitude(self) -> float:
        return abs(self.value)


def _window_string(u: np.ndarray, w: int, where: str) -> np.ndarray:
    dim = u.shape[0]
    I = np.eye(dim, dtype=complex)
    parts = [I] * (w - 1) + [u] if where == "left" else [u] + [I] * (w - 1)
    return algebra.kron(*parts)


def _disorder_ops(kind: str, ops: np.ndarray, S: np.ndarray, side: str):
    """Ket and bra insertions for endpoint ops multiplying the window string S."""
    T = np.einsum("nij,jk->nik", ops, S) if side == "left" else np.einsum("ij,njk->nik", S, ops)
    if kind == "D1":
        return T, np.broadcast_to(np.eye(S.shape[0]), T.shape)
    if kind == "D2":
        return T, T.conj()
    return T, None


def disorder(
    A,
    kind: str,
    n: int,
    endpoint_left,
    endpoint_right,
    rep: OnsiteRep,
    element: int,
    w: int = 2,
    L: int | None = None,
) -> complex:
    """D1, D2 or D3 for U_A = O_L (⊗_{i∈A} u^i) O_R on a region of n ≥ 2 cells."""
    vals = disorder_scan(A, kind, n, rep, element, w=w, L=L, left_ops=[endpoint_left], right_ops=[endpoint_right])
    return vals.value


def disorder_scan(
    A,
    kind: str,
    n: int,
    rep: OnsiteRep,
    element: int,
    w: int = 2,
    L: int | None = None,
    left_ops=None,
    right_ops=None,
    d_site: int | None = None,
) -> EndpointScan:
    """Scan D over all endpoint pairs from a window basis; returns the largest |value|."""
    kind = _check_kind(kind, KINDS_D)
    if n < 2:
        raise ValueError("region must span at least two cells")
    T = _cell_tensor(A, rep.dim)
    u = rep.mats[element]
    Tw = block_sites(T, w)
    if left_ops is None or right_ops is None:
        basis = graded_basis(window_rep(rep, w), d_site or as_tensor(A).d)
        ops, labels = basis.ops()
    left = np.asarray(left_ops, complex) if left_ops is not None else ops
    right = np.asarray(right_ops, complex) if right_ops is not None else ops
    llab = [f"L{i}" for i in range(len(left))] if left_ops is not None else labels
    rlab = [f"R{i}" for i in range(len(right))] if right_ops is not None else labels
    nm = n - 2
    L = L or default_ring(n + 2 * (w - 1))
    Sl = _window_string(u, w, "left")
    Sr = _window_string(u, w, "right")
    if kind == "D3":
        ring = _Ring(transfer_E1(T), L)
        lk, _ = _disorder_ops(kind, left, Sl, "left")
        rk, _ = _disorder_ops(kind, right, Sr, "right")
        lm = batched_linear_transfer(Tw, lk)
        rm = batched_linear_transfer(Tw, rk)
        mid = np.linalg.matrix_power(linear_transfer(T, u), nm) if nm else np.eye(ring.E.shape[0])
    else:
        ring = _Ring(transfer_E2(T), L)
        lk, lb = _disorder_ops(kind, left, Sl, "left")
        rk, rb = _disorder_ops(kind, right, Sr, "right")
        lm = batched_mixed_transfer(Tw, lk, lb)
        rm = batched_mixed_transfer(Tw, rk, rb)
        mt = mixed_transfer(T, u, np.eye(T.A.shape[1]) if kind == "D1" else u.conj())
        mid = np.linalg.matrix_power(mt, nm) if nm else np.eye(ring.E.shape[0])
    vals = _pair_scan(ring, lm, w, mid, nm, rm, w)
    i, j = np.unravel_index(np.argmax(np.abs(vals)), vals.shape)
    return EndpointScan(complex(vals[i, j]), llab[i], rlab[j], vals)


def disorder_dense(rho, kind: str, start: int, n: int, endpoint_left, endpoint_right, u, d: int = 2, w: int = 2) -> complex:
    """Dense oracle for :func:`disorder`. Positions and sizes are in cells of size dim(u)."""
    kind = _check_kind(kind, KINDS_D)
    rho = np.asarray(rho, complex)
    u = np.asarray(u, complex)
    c = round(math.log(u.shape[0], d))
    L = round(math.log(rho.shape[0], d))
    ncell = L // c
    Sl = _window_string(u, w, "left")
    Sr = _window_string(u, w, "right")
    Tl = np.asarray(endpoint_left, complex) @ Sl
    Tr = Sr @ np.asarray(endpoint_right, complex)
    ops = {((start - w + 1) % ncell) * c: Tl, ((start + n - 1) % ncell) * c: Tr}
    for k in range(start + 1, start + n - 1):
        ops[(k % ncell) * c] = u
    if (start - w + 1) < 0 or start + n - 1 + w > ncell:
        raise ValueError("dense oracle needs the windows inside the chain")
    U = embed(ops, L, d)
    I = np.eye(rho.shape[0])
    if kind == "D3":
        return complex(np.trace(U @ rho))
    norm = doubled_expectation(rho, I, I)
    if kind == "D1":
        return doubled_expectation(rho, U, I) / norm
    return doubled_expectation(rho, U, U.conj()) / norm


# ---------------------------------------------------------------- string order


@dataclass(frozen=True)
class StringSector:
    alpha: IrrepLabel
    alpha_p: IrrepLabel
    value: float
    endpoints: tuple[str, str, str, str] = ()


def string_order_sector(
    A,
    rep: OnsiteRep,
    k: int,
    alpha: IrrepLabel,
    alpha_p: IrrepLabel,
    n: int,
    w: int = 2,
    L: int | None = None,
    d_site: int | None = None,
    basis: GradedBasis | None = None,
) -> StringSector:
    """Largest |<<ρ|s[(e,k);(α,α')]|ρ>>|/<<ρ|ρ>> over basis endpoints in the given sector.

    Ket endpoints carry α on the left and α* on the right, bra endpoints α'
    and α'*. The bra string is (u_k*)^n and bra endpoints enter transposed.
    """
    T = _cell_tensor(A, rep.dim)
    Tw = block_sites(T, w)
    basis = basis or graded_basis(window_rep(rep, w), d_site or as_tensor(A).d)
    u = rep.mats[k]
    kl, kll = basis.ops(alpha.charges)
    kr, krl = basis.ops(alpha.conj().charges)
    bl, bll = basis.ops(alpha_p.charges)
    br, brl = basis.ops(alpha_p.conj().charges)
    if min(len(kl), len(kr), len(bl), len(br)) == 0:
        return StringSector(alpha, alpha_p, 0.0)
    I = np.eye(rep.dim, dtype=complex)
    # ket string is the identity; bra string u*, straddled by the windows
    Sl_b = _window_string(u.conj(), w, "left")
    Sr_b = _window_string(u.conj(), w, "right")
    lb = np.einsum("nji,jk->nik", bl, Sl_b)
    rb = np.einsum("ij,nkj->nik", Sr_b, br)
    n_eff = max(n, 2)
    L = L or default_ring(n_eff + 2 * (w - 1), xi=correlation_length(T))
    ring = _Ring(transfer_E2(T), L)
    chi = ring.E.shape[0]
    lm = paired_mixed_transfer(Tw, kl, lb).reshape(-1, chi, chi)
    rm = paired_mixed_transfer(Tw, kr, rb).reshape(-1, chi, chi)
    nm = n_eff - 2
    mid = np.linalg.matrix_power(mixed_transfer(T, I, u.conj()) / ring.scale, nm)
    vals = _pair_scan(ring, lm, w, mid, nm, rm, w, mid_normalized=True)
    i, j = np.unravel_index(np.argmax(np.abs(vals)), vals.shape)
    nb_l, nb_r = len(bl), len(br)
    labels = (kll[i // nb_l], krl[j // nb_r], bll[i % nb_l], brl[j % nb_r])
    return StringSector(alpha, alpha_p, float(abs(vals[i, j])), labels)


def string_order(A, rep: OnsiteRep, k: int, alpha: IrrepLabel, alpha_p: IrrepLabel, n: int, **kw) -> float:
    return string_order_sector(A, rep, k, alpha, alpha_p, n, **kw).value


def string_selection_scan(
    A,
    rep: OnsiteRep,
    k: int,
    n: int | None = None,
    threshold: float = 1e-6,
    w: int = 2,
    L: int | None = None,
    d_site: int | None = None,
) -> list[StringSector]:
    """All (α, α') sectors whose string order exceeds ``threshold``.

    The default string length is 16 correlation lengths, long enough for
    leakage into wrong sectors (∝ e^{-n/ξ}) to fall well below threshold.
    """
    if not rep.group.abelian:
        raise ValueError("string selection scan needs an abelian group")
    if n is None:
        n = max(8, math.ceil(16 * correlation_length(A, rep.dim)) + 2)
    basis = graded_basis(window_rep(rep, w), d_site or as_tensor(A).d)
    out = []
    irreps = irreps_abelian(rep.group)
    for a in irreps:
        for ap in irreps:
            s = string_order_sector(A, rep, k, a, ap, n, w=w, L=L, basis=basis)
            if s.value > threshold:
                out.append(s)
    return out


def string_order_dense(rho, kl, kr, bl, br, u, start: int, n: int, d: int = 2, w: int = 2) -> complex:
    """Dense oracle for one endpoint choice of :func:`string_order_sector`."""
    rho = np.asarray(rho, complex)
    u = np.asarray(u, complex)
    c = round(math.log(u.shape[0], d))
    L = round(math.log(rho.shape[0], d))
    ncell = L // c
    if start - w + 1 < 0 or start + n - 1 + w > ncell:
        raise ValueError("dense oracle needs the windows inside the chain")
    ket = embed({(start - w + 1) * c: kl, (start + n - 1) * c: kr}, L, d)
    Sl = _window_string(u.conj(), w, "left")
    Sr = _window_string(u.conj(), w, "right")
    bops = {(start - w + 1) * c: np.asarray(bl).T @ Sl, (start + n - 1) * c: Sr @ np.asarray(br).T}
    for k in range(start + 1, start + n - 1):
        bops[k * c] = u.conj()
    bra = embed(bops, L, d)
    I = np.eye(rho.shape[0])
    return doubled_expectation(rho, ket, bra) / doubled_expectation(rho, I, I)


# ---------------------------------------------------------------- SSB classification


@dataclass(frozen=True)
class LROFit:
    a: float
    b: float
    r: float
    verdict: str  # "LRO" | "zero" | "indeterminate"


def fit_lro(seps, values) -> LROFit:
    """Fit |value| = a + b·r^sep with 0 ≤ r ≤ 1 and classify a."""
    s = np.asarray(seps, float)
    v = np.abs(np.asarray(values, complex))
    if np.ptp(v) < 1e-12:
        a, b, r = float(v.mean()), 0.0, 0.0
    else:
        try:
            (a, b, r), _ = curve_fit(
                lambda x, a, b, r: a + b * r**x,
                s,
                v,
                p0=(v[-1], v[0] - v[-1], 0.5),
                bounds=([0.0, -np.inf, 0.0], [np.inf, np.inf, 1.0]),
                sigma=np.maximum(v, 1e-300),  # relative residuals: the tail decides a
                maxfev=20000,
                ftol=1e-14,
                xtol=1e-14,
                gtol=1e-14,
            )
        except (RuntimeError, ValueError):
            a, b, r = float(v[-1]), 0.0, 0.0
        # the fit cannot resolve an offset smaller than the tail itself
        if v[-1] < ZERO_THRESHOLD:
            a = min(a, float(v[-1]))
    if a > LRO_THRESHOLD:
        verdict = "LRO"
    elif a < ZERO_THRESHOLD:
        verdict = "zero"
    else:
        verdict = "indeterminate"
    return LROFit(float(a), float(b), float(r), verdict)


SSB_TABLE = {
    ("zero", "zero", "LRO", "LRO"): "Unbroken",
    ("zero", "LRO", "zero", "LRO"): "ExactToAverage",
    ("LRO", "LRO", "zero", "zero"): "FullyBroken",
}


@dataclass
class DiagnosticsReport:
    correlators: dict = field(default_factory=dict)  # key -> {sep: value}
    fitted_xi: float = 0.0
    ssb_pattern: dict = field(default_factory=dict)  # factor -> pattern
    disorder: dict = field(default_factory=dict)  # key -> {value, left, right, n}
    fits: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def cval(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "correlators": {k: {str(s): cval(v) for s, v in d.items()} for k, d in self.correlators.items()},
            "fitted_xi": self.fitted_xi if math.isfinite(self.fitted_xi) else "inf",
            "ssb_pattern": dict(self.ssb_pattern),
            "disorder": {
                k: {str(n): {"value": cval(e.value), "left": e.left, "right": e.right} for n, e in d.items()}
                for k, d in self.disorder.items()
            },
            "fits": {k: {"a": f.a, "b": f.b, "r": f.r, "verdict": f.verdict} for k, f in self.fits.items()},
        }


def correlation_length(A, dim: int | None = None, sites_per_cell: int = 1) -> float:
    """ξ from the gap between the top and next-distinct E² magnitudes, in sites."""
    T = _cell_tensor(A, dim)
    mags = np.abs(algebra.eig(transfer_E2(T)).eigenvalues)
    top = mags[0]
    rest = mags[mags < top * (1 - 1e-9)]
    if rest.size == 0 or rest[0] < 1e-14 * top:
        return 0.0
    ratio = rest[0] / top
    return float(-sites_per_cell / math.log(ratio))


def _scan_correlator(T: MPDOTensor, kind: str, ops: np.ndarray, seps, L: int) -> np.ndarray:
    """values[o, s] for each operator and separation (cell units)."""
    if kind == "C3":
        ring = _Ring(transfer_E1(T), L)
        mx = batched_linear_transfer(T, ops)
        my = batched_linear_transfer(T, ops.conj().transpose(0, 2, 1))
    else:
        ring = _Ring(transfer_E2(T), L)
        Od = ops.conj().transpose(0, 2, 1)
        if kind == "C1":
            I = np.broadcast_to(np.eye(T.A.shape[1]), ops.shape)
            mx = batched_mixed_transfer(T, ops, I)
            my = batched_mixed_transfer(T, Od, I)
        else:
            mx = batched_mixed_transfer(T, ops, ops.conj())
            my = batched_mixed_transfer(T, Od, Od.conj())
    out = np.zeros((len(ops), len(seps)), complex)
    mx = mx / ring.scale
    my = my / ring.scale
    for j, s in enumerate(seps):
        mid = ring.power(s - 1)
        rest = ring.power(L - s - 1)
        out[:, j] = np.einsum("oab,bc,ocd,da->o", mx, mid, my, rest) / ring.Z
    return out


def ssb_classify(
    A,
    spec: SymmetrySpec,
    seps=(2, 4, 6, 8, 10, 12),
    regions=(3, 4, 6, 8, 10),
    w: int = 2,
    d_site: int | None = None,
) -> DiagnosticsReport:
    """SSB-pattern classification for every cyclic generator of every exact symmetry.

    C1/C2 use single-cell operators charged under the generator; D1/D2 scan
    all window endpoints. Each quantity's largest magnitude is fitted against
    separation (or region size) and read off as LRO, zero or indeterminate.
    """
    A = as_tensor(A)
    d_site = d_site or A.d
    report = DiagnosticsReport()
    if not spec.exact:
        return report
    cells = round(math.log(spec.exact[0].dim, d_site))
    report.fitted_xi = correlation_length(A, spec.exact[0].dim, cells)
    L = default_ring(max(max(seps), max(regions) + 2 * w))
    for ri, rep in enumerate(spec.exact):
        T = _cell_tensor(A, rep.dim)
        basis = graded_basis(rep, d_site)
        for gi, g in enumerate(rep.group.generators()):
            factor = f"exact{ri}:g{gi}"
            ops, labels = basis.charged(g)
            verdicts = {}
            for kind in ("C1", "C2"):
                if len(ops) == 0:
                    verdicts[kind] = "zero"
                    continue
                vals = _scan_correlator(T, kind, ops, list(seps), L)
                best = int(np.argmax(np.abs(vals[:, -1])))
                key = f"{factor}:{kind}:{labels[best]}"
                report.correlators[key] = dict(zip(seps, vals[best]))
                fit = fit_lro(seps, np.abs(vals).max(axis=0))
                report.fits[f"{factor}:{kind}"] = fit
                verdicts[kind] = fit.verdict
            for kind in ("D1", "D2"):
                scans = {n: disorder_scan(A, kind, n, rep, g, w=w, L=L, d_site=d_site) for n in regions}
                report.disorder[f"{factor}:{kind}"] = scans
                fit = fit_lro(regions, [s.magnitude for s in scans.values()])
                report.fits[f"{factor}:{kind}"] = fit
                verdicts[kind] = fit.verdict
            key = (verdicts["C1"], verdicts["C2"], verdicts["D1"], verdicts["D2"])
            report.ssb_pattern[factor] = SSB_TABLE.get(key, "Indeterminate")
    return report


# ---------------------------------------------------------------- boundary probe


@dataclass(frozen=True)
class BoundaryProbe:
    value: float
    left: str
    right: str
    charges: dict  # name -> (left charges, right charges)
    renyi2: float
    fractionalized: bool


def _site_pattern(pattern: list[np.ndarray], i: int) -> np.ndarray:
    return pattern[i % len(pattern)]


def _global_from_pattern(pattern, sites, L: int, d: int) -> np.ndarray:
    return embed({i: _site_pattern(pattern, i) for i in sites}, L, d)


def _window_rep_from_patterns(rep: OnsiteRep, d_site: int, sites) -> OnsiteRep:
    mats = []
    for a in range(rep.group.order):
        pat = string_pattern(rep, a, d_site)
        mats.append(algebra.kron(*[_site_pattern(pat, i) for i in sites]))
    return OnsiteRep(rep.group, np.array(mats))


def _reduce(M: np.ndarray, keep: list[int], L: int, d: int) -> np.ndarray:
    """Partial trace of an L-site operator onto the sites in ``keep`` (in order)."""
    T = M.reshape([d] * (2 * L))
    drop = [i for i in range(L) if i not in keep]
    perm = keep + drop + [L + i for i in keep] + [L + i for i in drop]
    T = T.transpose(perm)
    k, r = d ** len(keep), d ** len(drop)
    return np.einsum("arbr->ab", T.reshape(k, r, k, r))


def boundary_probe(
    A,
    spec: SymmetrySpec,
    L: int,
    m: int,
    n: int,
    element: int | None = None,
    rep_index: int = 0,
    d_site: int | None = None,
    threshold: float = 1e-6,
) -> BoundaryProbe:
    """max |tr[(V_l† Π_{i≤m} u^i)(V_r† Π_{i≥n} u^i) ρ]| over window unitaries.

    ρ is an open segment of L sites of the infinite chain (E¹ fixed-point
    boundaries; A may be a cell of several sites of dim ``d_site``), projected onto the symmetric sector of the exact symmetry. V_l ranges over
    a product clock-shift basis on sites [m, m+1], V_r on [n-1, n].
    """
    A = as_tensor(A)
    d = d_site or A.d
    if not spec.exact:
        raise ValueError("boundary probe needs an exact symmetry")
    rep = spec.exact[rep_index]
    if element is None:
        element = rep.group.generators()[0]
    if not (0 <= m and m + 1 < n - 1 and n < L):
        raise ValueError("need 0 <= m, m+1 < n-1 and n < L")
    c = round(math.log(A.d, d))
    if d**c != A.d or L % c:
        raise ValueError("tensor cell must be a whole number of sites dividing L")
    rho = open_chain_operator(A, L // c)
    # symmetric-sector projection
    G = rep.group
    P = np.zeros_like(rho)
    for a in range(G.order):
        P += _global_from_pattern(string_pattern(rep, a, d), range(L), L, d)
    P /= G.order
    rho = P @ rho @ P
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise InvalidTensor("state has no weight in the symmetric sector")
    rho = rho / tr
    pat = string_pattern(rep, element, d)
    S = _global_from_pattern(pat, list(range(m + 1)) + list(range(n, L)), L, d)
    lw, rw = [m, m + 1], [n - 1, n]
    R = _reduce(S @ rho, lw + rw, L, d)  # value = tr((Vl† ⊗ Vr†) R)
    ops, labels = product_basis(d, 2)
    k = ops.shape[1]
    R4 = R.reshape(k, k, k, k)  # (lw_out, rw_out, lw_in, rw_in)
    vals = np.einsum("iba,jdc,acbd->ij", ops.conj(), ops.conj(), R4)
    i, j = np.unravel_index(np.argmax(np.abs(vals)), vals.shape)
    value = float(abs(vals[i, j]))
    Vl, Vr = ops[i], ops[j]
    charges = {}
    for kind, reps in (("exact", spec.exact), ("average", spec.average)):
        for ri, r in enumerate(reps):
            cl = operator_charge(Vl, _window_rep_from_patterns(r, d, lw))
            cr = operator_charge(Vr, _window_rep_from_patterns(r, d, rw))
            charges[f"{kind}{ri}"] = (cl.charges if cl else None, cr.charges if cr else None)
    W = embed({m: Vl.conj().T, n - 1: Vr.conj().T}, L, d) @ S
    I = np.eye(rho.shape[0])
    r2 = abs(doubled_expectation(rho, W, W.conj()) / doubled_expectation(rho, I, I))
    frac = value > threshold and any(
        c is not None and any(x != 0 for x in c) for pair in charges.values() for c in pair
    )
    return BoundaryProbe(value, labels[i], labels[j], charges, float(r2), bool(frac))
