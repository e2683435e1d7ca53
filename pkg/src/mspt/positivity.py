"""Density-matrix validity, the string-order positivity witness, and the Levin–Gu diagonal."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .diagnostics import StringSector, string_selection_scan
from .mpdo import as_tensor, dense_operator, match_cell
from .symmetry import OnsiteRep

HERM_TOL = 1e-8
PSD_RTOL = 1e-8


class Verdict(str, enum.Enum):
    VALID = "ValidDensityMatrix"
    NOT_HERMITIAN = "NotHermitian"
    NEGATIVE = "NegativeEigenvalue"


@dataclass(frozen=True)
class ValidityReport:
    hermitian: bool
    hermiticity_residual: float
    psd: bool
    min_eigenvalue: float
    trace: complex
    verdict: Verdict
    spectrum: np.ndarray = field(repr=False, default=None)

    @property
    def valid(self) -> bool:
        return self.verdict is Verdict.VALID

    def to_json(self) -> dict:
        return {
            "hermitian": self.hermitian,
            "hermiticity_residual": self.hermiticity_residual,
            "psd": self.psd,
            "min_eigenvalue": self.min_eigenvalue,
            "trace": [self.trace.real, self.trace.imag],
            "verdict": self.verdict.value,
        }


def validity_dense(rho, herm_tol: float = HERM_TOL, psd_rtol: float = PSD_RTOL) -> ValidityReport:
    """Hermiticity residual ‖ρ-ρ†‖/‖ρ‖ and the spectrum of the Hermitian part.

    PSD means min eigenvalue ≥ -psd_rtol·‖ρ‖ (spectral norm).
    """
    rho = np.asarray(rho, complex)
    nrm = np.linalg.norm(rho, 2)
    if nrm == 0:
        return ValidityReport(True, 0.0, True, 0.0, 0j, Verdict.VALID, np.zeros(rho.shape[0]))
    res = float(np.linalg.norm(rho - rho.conj().T) / nrm)
    H = (rho + rho.conj().T) / 2
    ev = np.linalg.eigvalsh(H)
    tr = complex(np.trace(rho))
    herm = res <= herm_tol
    psd = bool(ev[0] >= -psd_rtol * nrm)
    if not herm:
        verdict = Verdict.NOT_HERMITIAN
    elif not psd:
        verdict = Verdict.NEGATIVE
    else:
        verdict = Verdict.VALID
    return ValidityReport(bool(herm), res, psd, float(ev[0]), tr, verdict, ev)


def validity(A, L: int, **kw) -> ValidityReport:
    """Dense validity check of the ring operator of length L."""
    return validity_dense(dense_operator(A, L), **kw)


# ---------------------------------------------------------------- folding


def mps_state_dense(B, L: int) -> np.ndarray:
    """Periodic MPS vector Σ tr(B^{p1}...B^{pL}) |p1...pL>."""
    B = np.asarray(B, complex)
    d, D = B.shape[0], B.shape[1]
    algebra.check_dense(d**L, "dense MPS state")
    M = B
    for _ in range(L - 1):
        M = np.einsum("Pij,pjk->Ppik", M, B).reshape(-1, D, D)
    return np.einsum("Pii->P", M)


def fold_doubled_state(psi, ket_sites, bra_sites, d: int = 2) -> np.ndarray:
    """Read a pure state on 2L sites as an operator: ρ[i, j] = ψ(ket = i, bra = j)."""
    ket_sites, bra_sites = list(ket_sites), list(bra_sites)
    psi = np.asarray(psi, complex).ravel()
    n = len(ket_sites) + len(bra_sites)
    if sorted(ket_sites + bra_sites) != list(range(n)) or len(ket_sites) != len(bra_sites):
        raise ValueError("ket and bra sites must split the chain into two equal halves")
    if psi.size != d**n:
        raise ValueError(f"state has {psi.size} amplitudes, expected {d}**{n}")
    L = len(ket_sites)
    T = psi.reshape([d] * n).transpose(ket_sites + bra_sites)
    return T.reshape(d**L, d**L)


def alternating_sites(L: int) -> tuple[list[int], list[int]]:
    return list(range(0, 2 * L, 2)), list(range(1, 2 * L, 2))


# ---------------------------------------------------------------- witness


@dataclass(frozen=True)
class WitnessReport:
    sectors: list[StringSector]
    alpha_nontrivial: bool
    validity: ValidityReport
    fired: bool
    consistent: bool

    def to_json(self) -> dict:
        return {
            "sectors": [
                {"alpha": list(s.alpha.charges), "alpha_p": list(s.alpha_p.charges), "value": s.value} for s in self.sectors
            ],
            "alpha_nontrivial": self.alpha_nontrivial,
            "validity": self.validity.to_json(),
            "fired": self.fired,
            "consistent": self.consistent,
        }


def witness_string_vs_positivity(
    A, rep: OnsiteRep, k: int, L: int = 4, n: int | None = None, threshold: float = 1e-6, w: int = 2
) -> WitnessReport:
    """Surviving string-order charge α_k against the dense validity verdict (L in rep cells).

    The witness fires when some surviving sector has nontrivial ket charge;
    positivity then forbids a valid density matrix, so ``consistent`` is
    False only if it fires on a state that passes validity.
    """
    A = as_tensor(A)
    sectors = string_selection_scan(A, rep, k, n=n, threshold=threshold, w=w)
    nontriv = any(not s.alpha.trivial for s in sectors)
    rho = dense_operator(match_cell(A, rep.dim), L)
    rep_v = validity_dense(rho)
    return WitnessReport(sectors, nontriv, rep_v, nontriv, (not nontriv) or (not rep_v.valid))


def cauchy_schwarz_check(rho, S1, S2) -> tuple[float, float]:
    """Both sides of |tr(ρS₁ρS₂)|² ≤ tr[(√ρS₁√ρ)(…)†]·tr[(√ρS₂√ρ)(…)†]."""
    rho = np.asarray(rho, complex)
    r = algebra.psd_sqrt(rho)
    lhs = abs(np.trace(rho @ S1 @ rho @ S2)) ** 2
    a = r @ S1 @ r
    b = r @ S2 @ r
    rhs = np.trace(a @ a.conj().T).real * np.trace(b @ b.conj().T).real
    return float(lhs), float(rhs)


# ---------------------------------------------------------------- Levin–Gu diagonal


class MalformedLattice(ValueError):
    pass


@dataclass(frozen=True)
class TriangularPatch:
    """Sites with triangular faces; lattice edges are the triangle sides."""

    n_sites: int
    triangles: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.n_sites < 1 or self.n_sites > 16:
            raise MalformedLattice("patch must have between 1 and 16 sites")
        for t in self.triangles:
            if len(t) != 3 or len(set(t)) != 3 or min(t) < 0 or max(t) >= self.n_sites:
                raise MalformedLattice(f"bad triangle {t}")
        cover = {s for t in self.triangles for s in t}
        if self.n_sites > 1 and cover != set(range(self.n_sites)):
            raise MalformedLattice("every site must belong to a triangle")
        for e, faces in self.edge_faces().items():
            if len(faces) > 2:
                raise MalformedLattice(f"edge {e} is shared by more than two triangles")

    def edge_faces(self) -> dict:
        out: dict = {}
        for f, t in enumerate(self.triangles):
            for a, b in itertools.combinations(sorted(t), 2):
                out.setdefault((a, b), []).append(f)
        return out

    @classmethod
    def rhombus(cls, rows: int, cols: int) -> "TriangularPatch":
        """rows×cols sites on a triangular lattice, two triangles per plaquette."""
        idx = lambda r, c: r * cols + c  # noqa: E731
        tris = []
        for r in range(rows - 1):
            for c in range(cols - 1):
                tris.append((idx(r, c), idx(r, c + 1), idx(r + 1, c)))
                tris.append((idx(r, c + 1), idx(r + 1, c + 1), idx(r + 1, c)))
        return cls(rows * cols, tuple(tris))

    @classmethod
    def hexagon(cls) -> "TriangularPatch":
        """A center site (0) with six neighbours: the smallest closed wall around one site."""
        return cls(7, tuple((0, 1 + i, 1 + (i + 1) % 6) for i in range(6)))


def domain_wall_count(patch: TriangularPatch, config) -> int:
    """Connected components of the dual domain-wall edges.

    Dual vertices are the triangles plus one exterior vertex that every
    boundary edge connects to.
    """
    s = np.asarray(config).ravel()
    if s.size != patch.n_sites:
        raise MalformedLattice("configuration size does not match the patch")
    ext = len(patch.triangles)
    parent = list(range(ext + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    touched = set()
    for (a, b), faces in patch.edge_faces().items():
        if s[a] == s[b]:
            continue
        u, v = faces[0], faces[1] if len(faces) == 2 else ext
        touched.update((u, v))
        parent[find(u)] = find(v)
    return len({find(x) for x in touched})


def levin_gu_diagonal(patch: TriangularPatch) -> np.ndarray:
    """Diagonal entries of Σ_D (-1)^{N_dw(D)} |D><D| in the computational basis.

    Returned as a vector of length 2^N; bit i of the index is site i
    (most significant first, matching kron order).
    """
    N = patch.n_sites
    out = np.empty(2**N)
    for idx in range(2**N):
        bits = [(idx >> (N - 1 - i)) & 1 for i in range(N)]
        out[idx] = (-1) ** domain_wall_count(patch, bits)
    return out


def levin_gu_matrix(patch: TriangularPatch) -> np.ndarray:
    algebra.check_dense(4**patch.n_sites, "Levin-Gu density matrix")
    return np.diag(levin_gu_diagonal(patch)).astype(complex)
