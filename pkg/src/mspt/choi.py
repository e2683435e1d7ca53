"""Operator-state map between operators on H and vectors on H ⊗ H*.

Convention: the doubled vector carries one (ket, bra) index pair per site,
interleaved as (p1, q1, p2, q2, ...). The relative state is normalized, so
``choi_of_operator(O)`` has amplitudes ``O[p, q] / sqrt(N)`` and the doubled
overlap of two Choi vectors equals ``hs_inner(A, B) / N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import DimensionMismatch, check_dense
from .symmetry import OnsiteRep


@dataclass(frozen=True, eq=False)
class ChoiVector:
    site_dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        n = int(np.prod([d * d for d in self.site_dims]))
        if self.amplitudes.shape != (n,):
            raise DimensionMismatch(f"Choi vector length {self.amplitudes.shape} != {n}")

    @property
    def N(self) -> int:
        return int(np.prod(self.site_dims))

    def overlap(self, other: "ChoiVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _dims(site_dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in site_dims)
    if not dims or min(dims) < 1:
        raise DimensionMismatch("site dims must be >= 1")
    return dims


def _interleave_perm(L: int) -> list[int]:
    # axes (p1..pL, q1..qL) -> (p1, q1, ..., pL, qL)
    return [ax for i in range(L) for ax in (i, L + i)]


def relative_state(site_dims) -> ChoiVector:
    dims = _dims(site_dims)
    v = np.ones(1, dtype=complex)
    for d in dims:
        v = np.kron(v, np.eye(d, dtype=complex).ravel() / np.sqrt(d))
    return ChoiVector(dims, v)


def choi_of_operator(op, site_dims) -> ChoiVector:
    dims = _dims(site_dims)
    op = np.asarray(op, dtype=complex)
    N = int(np.prod(dims))
    if op.shape != (N, N):
        raise DimensionMismatch(f"operator shape {op.shape} incompatible with site dims {dims}")
    check_dense(N * N, "Choi vector")
    t = op.reshape(dims + dims).transpose(_interleave_perm(len(dims)))
    return ChoiVector(dims, t.reshape(-1) / np.sqrt(N))


def amplitude_matrix(v: ChoiVector) -> np.ndarray:
    """Bend the bra legs back without rescaling: M[p, q] = v[(p1, q1, ...)].

    For the relative state this is I/√N.
    """
    dims = v.site_dims
    shape = [x for d in dims for x in (d, d)]
    t = v.amplitudes.reshape(shape)
    inv = np.argsort(_interleave_perm(len(dims)))
    return t.transpose(inv).reshape(v.N, v.N)


def operator_of_choi(v: ChoiVector) -> np.ndarray:
    """Exact inverse of :func:`choi_of_operator` (the relative state maps to I)."""
    return amplitude_matrix(v) * np.sqrt(v.N)


def doubled_operator(ket, bra, site_dims) -> np.ndarray:
    """Matrix of ket ⊗ bra acting on the interleaved doubled space.

    ``ket`` and ``bra`` act on all sites (N×N). The result acts on Choi vectors
    with the per-site interleaving.
    """
    dims = _dims(site_dims)
    L = len(dims)
    N = int(np.prod(dims))
    check_dense(N * N, "doubled operator")
    big = np.kron(np.asarray(ket, complex), np.asarray(bra, complex))
    perm = _interleave_perm(L)
    t = big.reshape(dims + dims + dims + dims)
    t = t.transpose(perm + [2 * L + ax for ax in perm])
    return t.reshape(N * N, N * N)


def apply_ket(op, v: ChoiVector) -> ChoiVector:
    return choi_of_operator(np.asarray(op) @ operator_of_choi(v), v.site_dims)


def apply_bra(op, v: ChoiVector) -> ChoiVector:
    """Act with ``op`` on the bra (H*) factor: |O>> -> |O op^T>>."""
    return choi_of_operator(operator_of_choi(v) @ np.asarray(op).T, v.site_dims)


def apply_J(v: ChoiVector) -> ChoiVector:
    """Modular conjugation: swap ket and bra, complex conjugate."""
    return choi_of_operator(operator_of_choi(v).conj().T, v.site_dims)


def hs_inner(a, b) -> complex:
    a, b = np.asarray(a, complex), np.asarray(b, complex)
    if a.shape != b.shape:
        raise DimensionMismatch("hs_inner needs equal shapes")
    return complex(np.vdot(a, b))


# ---------------------------------------------------------------- symmetry checks


@dataclass(frozen=True)
class SymmetryCheckResult:
    holds: bool
    residual: float
    phase: float | None = None


def _ratio_phase(a: np.ndarray, b: np.ndarray) -> float:
    """arg of a/b at the entry where |b| is largest."""
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) == 0:
        return 0.0
    return float(np.angle(a[idx] / b[idx]))


def verify_symmetry(rho, kind: str, op, tol: float = 1e-10) -> SymmetryCheckResult:
    """Check an exact, average, J or T symmetry of a dense operator.

    ``op`` is the full unitary (exact/average) or the unitary part W of T.
    Residuals are relative to ``‖ρ‖``.
    """
    rho = np.asarray(rho, dtype=complex)
    scale = max(np.linalg.norm(rho), 1e-300)
    if kind == "J":
        r = np.linalg.norm(rho - rho.conj().T) / scale
        return SymmetryCheckResult(bool(r <= tol), float(r))
    u = np.asarray(op, dtype=complex)
    if u.shape != rho.shape:
        raise DimensionMismatch("symmetry operator and state differ in size")
    if kind == "exact":
        left = u @ rho
        theta = _ratio_phase(left, rho)
        ph = np.exp(1j * theta)
        r = max(np.linalg.norm(left - ph * rho), np.linalg.norm(rho @ u - ph * rho)) / scale
        return SymmetryCheckResult(bool(r <= tol), float(r), theta)
    if kind == "average":
        r = np.linalg.norm(u @ rho @ u.conj().T - rho) / scale
        return SymmetryCheckResult(bool(r <= tol), float(r))
    if kind == "T":
        r = np.linalg.norm(u @ rho.conj() @ u.conj().T - rho) / scale
        return SymmetryCheckResult(bool(r <= tol), float(r))
    raise ValueError(f"unknown symmetry kind {kind!r}")


def global_operator(rep: OnsiteRep, element: int, L: int) -> np.ndarray:
    return rep.global_op(element, L)
