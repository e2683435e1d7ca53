"""Dense complex linear algebra shared by the rest of the package.

Everything here is a thin, checked layer over numpy/scipy. Matrices are plain
``numpy.ndarray`` objects with complex dtype; the helpers add dimension checks,
magnitude-sorted spectra with a shared degeneracy tolerance, and deterministic
phase fixing of eigenvectors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

DEGENERACY_RTOL = 1e-8
DEFAULT_DENSE_CAP = 4**12


class DimensionMismatch(ValueError):
    pass


class DenseCapExceeded(RuntimeError):
    pass


class NumericalFailure(RuntimeError):
    pass


def dense_cap() -> int:
    """Largest dense vector length allowed; ``MSPT_DENSE_CAP`` overrides."""
    raw = os.environ.get("MSPT_DENSE_CAP")
    if raw is None or raw == "":
        return DEFAULT_DENSE_CAP
    return int(float(raw))


def check_dense(length: int, what: str = "dense object") -> None:
    cap = dense_cap()
    if length > cap:
        raise DenseCapExceeded(f"{what} needs length {length} > cap {cap} (set MSPT_DENSE_CAP)")


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalFailure("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(*mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def degeneracy_tol(lam1: complex | float) -> float:
    return DEGENERACY_RTOL * max(1.0, abs(lam1))


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    degeneracy_of_top: int
    gap: float
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def top(self) -> complex:
        return complex(self.eigenvalues[0])

    @property
    def unique_top(self) -> bool:
        return self.degeneracy_of_top == 1


def sort_by_magnitude(vals: np.ndarray) -> np.ndarray:
    # stable: ties broken by larger real part, then imaginary part
    order = np.lexsort((-vals.imag, -vals.real, -np.round(np.abs(vals), 13)))
    return order


def eig(a, vectors: bool = False) -> SpectralData:
    """Full spectrum sorted by descending magnitude.

    Eigenvalues come from a complex Schur form, which is well defined for the
    non-normal transfer matrices used throughout.
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch("eig needs a square matrix")
    if m.shape[0] == 0:
        return SpectralData(np.zeros(0, complex), 0, 0.0)
    try:
        if vectors:
            vals, vecs = sla.eig(m)
        else:
            t = sla.schur(m, output="complex")[0]
            vals, vecs = np.diag(t).copy(), None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc
    order = sort_by_magnitude(vals)
    vals = vals[order]
    if vecs is not None:
        vecs = vecs[:, order]
    mags = np.abs(vals)
    tol = degeneracy_tol(vals[0])
    deg = int(np.sum(mags[0] - mags <= tol))
    gap = float(mags[0] - mags[deg]) if deg < len(vals) else 0.0
    return SpectralData(vals, deg, max(gap, 0.0), vecs)


def svd(a):
    """Return (U, s, Vh) with singular values descending."""
    m = as_matrix(a)
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"svd failed: {exc}") from exc


def rank(a, rtol: float = 1e-10) -> int:
    s = svd(a)[1]
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def solve_linear(a, b) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != np.asarray(b).shape[0]:
        raise DimensionMismatch("solve: incompatible shapes")
    return np.linalg.solve(a, b)


def pinv(a, rtol: float = 1e-12) -> np.ndarray:
    return np.linalg.pinv(as_matrix(a), rcond=rtol)


def null_space(a, rtol: float = 1e-10, ref: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the right null space.

    Singular values below ``rtol`` times ``ref`` (default: the largest
    singular value) count as zero. Pass ``ref`` when the matrix itself may
    vanish numerically.
    """
    m = as_matrix(a)
    if m.shape[0] == 0:
        return np.eye(m.shape[1], dtype=complex)
    if m.shape[0] > m.shape[1]:
        # tall: R from QR has the same null space and singular values
        m = np.linalg.qr(m, mode="r")
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    scale = ref if ref is not None else (s[0] if s.size and s[0] > 0 else 1.0)
    r = int(np.sum(s > rtol * scale))
    return vh[r:].conj().T


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate so the first largest-magnitude component is real positive."""
    v = np.asarray(v, dtype=complex)
    flat = v.ravel()
    if not flat.size:
        return v
    mags = np.abs(flat)
    idx = int(np.argmax(mags >= mags.max() * (1 - 1e-9)))
    if mags[idx] == 0:
        return v
    return v * (abs(flat[idx]) / flat[idx])


def top_eigvec(a, left: bool = False, iters: int = 50) -> tuple[complex, np.ndarray]:
    """Top-magnitude eigenpair via shifted inverse iteration, phase fixed.

    With ``left=True`` returns ``l`` such that ``l @ a = lam * l``.
    """
    m = as_matrix(a)
    if left:
        m = m.T
    n = m.shape[0]
    lam = eig(m).top
    shift = lam + 1e-10 * max(1.0, abs(lam)) * (1 + 1j)
    rng = np.random.default_rng(12345)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v /= np.linalg.norm(v)
    shifted = m - shift * np.eye(n)
    try:
        lu = sla.lu_factor(shifted)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"inverse iteration failed: {exc}") from exc
    for _ in range(iters):
        w = sla.lu_solve(lu, v)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0:
            raise NumericalFailure("inverse iteration diverged")
        w /= nrm
        if np.linalg.norm(w - v * np.vdot(v, w)) < 1e-14:
            v = w
            break
        v = w
    v = fix_phase(v)
    lam = complex(np.vdot(v, m @ v) / np.vdot(v, v))
    return lam, v


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = as_matrix(u)
    return u.shape[0] == u.shape[1] and np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def psd_sqrt(rho: np.ndarray) -> np.ndarray:
    h = (rho + rho.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
