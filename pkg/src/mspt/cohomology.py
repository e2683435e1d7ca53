"""Finite-group cohomology with U(1) or finite-module coefficients.

Cochains are normalized and inhomogeneous: an n-cochain is a function on
(G \\ {e})^n, extended by zero. Two coefficient types are supported.

* U(1), possibly twisted by a sign character σ (σ(g) = -1 for antiunitary g,
  acting by complex conjugation). For n ≥ 1 the exponential sequence gives
  H^n(G, U(1)_σ) ≅ H^{n+1}(G, Z_σ), and the latter is the torsion of
  coker δ^n over Z, i.e. the elementary divisors > 1 of the integer
  coboundary matrix δ^n : C^n → C^{n+1}. A class with divisor e_i is
  represented by the R/Z-valued cocycle V[:, i] / e_i, where U δ V = diag.
* Finite modules M = ⊕ Z_{m_i} with an integer action matrix per element.
  Cohomology is the lattice quotient ker(δ^n mod m) / (im δ^{n-1} + mZ).

Values of U(1) cochains are stored additively in R/Z (phase = exp(2πi ω)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .symmetry import FiniteGroup, IrrepLabel, direct_product, group_from_cyclic_factors, parse_group

try:  # optional accelerator for the mod p^k elimination
    import numba

    _njit = numba.njit(cache=True)
except Exception:  # pragma: no cover - numba missing
    numba = None
    _njit = None

EXACT_CAP = 3_000_000  # rows × cols of the largest matrix handled by exact Smith reduction


class CapExceeded(RuntimeError):
    pass


class InvalidAction(ValueError):
    pass


# ---------------------------------------------------------------- modules


@dataclass(frozen=True, eq=False)
class CoefficientModule:
    """U(1) (``moduli is None``) or ⊕ Z_{m_i}; ``action[g]`` integer r×r matrix.

    For U(1) the action is a sign per element (+1 trivial, -1 conjugation).
    """

    moduli: tuple[int, ...] | None
    action: np.ndarray

    @property
    def is_u1(self) -> bool:
        return self.moduli is None

    @property
    def rank(self) -> int:
        return 1 if self.moduli is None else len(self.moduli)

    @property
    def trivial_action(self) -> bool:
        r = self.rank
        return all(np.array_equal(a, np.eye(r, dtype=np.int64)) for a in self.action)


def u1(group: FiniteGroup, antiunitary=None) -> CoefficientModule:
    """U(1) coefficients; ``antiunitary`` is a boolean mask over group elements."""
    s = np.ones(group.order, dtype=np.int64)
    if antiunitary is not None:
        mask = np.asarray(antiunitary, bool)
        s[mask] = -1
        for a in range(group.order):
            for b in range(group.order):
                if s[group.mul[a, b]] != s[a] * s[b]:
                    raise InvalidAction("antiunitary mask is not a homomorphism to Z2")
    return CoefficientModule(None, s.reshape(-1, 1, 1))


def finite_module(group: FiniteGroup, moduli, action=None) -> CoefficientModule:
    moduli = tuple(int(m) for m in moduli)
    if any(m < 1 for m in moduli):
        raise InvalidAction("moduli must be positive")
    r = len(moduli)
    if action is None:
        act = np.tile(np.eye(r, dtype=np.int64), (group.order, 1, 1))
    else:
        act = np.asarray(action, dtype=np.int64).reshape(group.order, r, r)
    m = np.array(moduli, dtype=np.int64)
    for a in range(group.order):
        A = act[a]
        # a hom Z_{m_j} -> Z_{m_i} needs A_ij m_j ≡ 0 mod m_i
        if np.any((A * m[None, :]) % m[:, None]):
            raise InvalidAction("action matrix is not well defined on the module")
    for a in range(group.order):
        for b in range(group.order):
            lhs = (act[a] @ act[b]) % m[:, None]
            rhs = act[group.mul[a, b]] % m[:, None]
            if not np.array_equal(lhs, rhs):
                raise InvalidAction("action is not a group homomorphism")
    return CoefficientModule(moduli, act)


# ---------------------------------------------------------------- cochains and coboundaries


def _tuples(group: FiniteGroup, n: int) -> np.ndarray:
    ne = [a for a in range(group.order) if a != group.identity]
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if not ne:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(list(itertools.product(ne, repeat=n)), dtype=np.int64).reshape(-1, n)


def _index_map(group: FiniteGroup, n: int):
    """Map from full tuples to normalized-cochain column index (-1 if any arg is e)."""
    G = group.order
    pos = np.full(G, -1, dtype=np.int64)
    ne = [a for a in range(G) if a != group.identity]
    pos[ne] = np.arange(len(ne))
    base = len(ne)

    def idx(cols: np.ndarray) -> np.ndarray:
        if n == 0:
            return np.zeros(cols.shape[0], dtype=np.int64)
        p = pos[cols]
        bad = np.any(p < 0, axis=1)
        flat = np.zeros(cols.shape[0], dtype=np.int64)
        for j in range(n):
            flat = flat * base + p[:, j]
        flat[bad] = -1
        return flat

    return idx


def cochain_count(group: FiniteGroup, n: int) -> int:
    return (group.order - 1) ** n if n > 0 else 1


def coboundary_matrix(group: FiniteGroup, n: int, module: CoefficientModule) -> sp.csr_matrix:
    """Integer matrix of δ^n : C^n(G, Z^r) → C^{n+1}(G, Z^r) with the module's action."""
    r = module.rank
    rows_t = _tuples(group, n + 1)
    nrow, ncol = rows_t.shape[0], cochain_count(group, n)
    idx = _index_map(group, n)
    entries_r, entries_c, entries_v = [], [], []
    base_rows = np.arange(nrow)

    def add(cols_idx, sign, mats=None):
        ok = cols_idx >= 0
        rr, cc = base_rows[ok], cols_idx[ok]
        if mats is None:
            for i in range(r):
                entries_r.append(rr * r + i)
                entries_c.append(cc * r + i)
                entries_v.append(np.full(rr.size, sign, dtype=np.int64))
        else:
            M = mats[ok]
            for i in range(r):
                for j in range(r):
                    v = sign * M[:, i, j]
                    nz = v != 0
                    entries_r.append(rr[nz] * r + i)
                    entries_c.append(cc[nz] * r + j)
                    entries_v.append(v[nz])

    if nrow:
        g1 = rows_t[:, 0]
        add(idx(rows_t[:, 1:]), 1, module.action[g1])
        for i in range(1, n + 1):
            merged = np.concatenate(
                [rows_t[:, : i - 1], group.mul[rows_t[:, i - 1], rows_t[:, i]][:, None], rows_t[:, i + 1 :]], axis=1
            )
            add(idx(merged), (-1) ** i)
        add(idx(rows_t[:, :n]), (-1) ** (n + 1))
    if entries_r:
        R = np.concatenate(entries_r)
        C = np.concatenate(entries_c)
        V = np.concatenate(entries_v)
    else:
        R = C = V = np.zeros(0, dtype=np.int64)
    M = sp.coo_matrix((V, (R, C)), shape=(nrow * r, ncol * r), dtype=np.int64).tocsr()
    M.sum_duplicates()
    M.eliminate_zeros()
    return M


def cochain_tensor(group: FiniteGroup, n: int, vec, r: int = 1) -> np.ndarray:
    """Full array of shape (|G|,)*n (+ (r,) if r>1) from a normalized cochain vector."""
    vec = np.asarray(vec)
    full = np.zeros((group.order,) * n + ((r,) if r > 1 else ()), dtype=vec.dtype)
    t = _tuples(group, n)
    vals = vec.reshape(-1, r) if r > 1 else vec.reshape(-1)
    if n == 0:
        return vals[0] if r == 1 else vals[0]
    full[tuple(t.T)] = vals
    return full


def cochain_vector(group: FiniteGroup, n: int, tensor) -> np.ndarray:
    t = _tuples(group, n)
    tensor = np.asarray(tensor)
    if n == 0:
        return np.atleast_1d(tensor).reshape(-1)
    return tensor[tuple(t.T)].reshape(-1)


# ---------------------------------------------------------------- Smith reduction over Z


def _to_object(*arrs):
    return [None if a is None else a.astype(object) for a in arrs]


def smith_diagonal(M, want_u=False, want_uinv=False, want_v=False, want_vinv=False):
    """Diagonalize an integer matrix by unimodular row/column operations.

    Returns (diag, U, Uinv, V, Vinv) with U M V = D (rectangular, diag on the
    main diagonal). The diagonal is not forced into a divisibility chain; the
    cokernel is ⊕ Z/diag_i either way.
    """
    A = np.array(M.toarray() if sp.issparse(M) else M, dtype=np.int64)
    m, n = A.shape
    U = np.eye(m, dtype=np.int64) if want_u else None
    Ui = np.eye(m, dtype=np.int64) if want_uinv else None
    V = np.eye(n, dtype=np.int64) if want_v else None
    Vi = np.eye(n, dtype=np.int64) if want_vinv else None
    big = 2**40
    t = 0
    while t < min(m, n):
        sub = A[t:, t:]
        nzr, nzc = np.nonzero(sub)
        if nzr.size == 0:
            break
        mags = np.abs(sub[nzr, nzc])
        k = int(np.argmin(mags))
        i, j = t + nzr[k], t + nzc[k]
        _swap_rows(A, U, Ui, t, i)
        _swap_cols(A, V, Vi, t, j)
        while True:
            piv = A[t, t]
            col = A[t + 1 :, t]
            if np.any(col):
                q = col // piv
                A[t + 1 :] -= np.multiply.outer(q, A[t])
                if U is not None:
                    U[t + 1 :] -= np.multiply.outer(q, U[t])
                if Ui is not None:
                    Ui[:, t] += Ui[:, t + 1 :] @ q
            row = A[t, t + 1 :]
            if np.any(row):
                q = row // piv
                A[:, t + 1 :] -= np.multiply.outer(A[:, t], q)
                if V is not None:
                    V[:, t + 1 :] -= np.multiply.outer(V[:, t], q)
                if Vi is not None:
                    Vi[t] += q @ Vi[t + 1 :]
            col_nz = np.nonzero(A[t + 1 :, t])[0]
            row_nz = np.nonzero(A[t, t + 1 :])[0]
            if col_nz.size == 0 and row_nz.size == 0:
                break
            best, where = None, None
            for c in col_nz:
                v = abs(A[t + 1 + c, t])
                if best is None or v < best:
                    best, where = v, ("r", t + 1 + c)
            for c in row_nz:
                v = abs(A[t, t + 1 + c])
                if best is None or v < best:
                    best, where = v, ("c", t + 1 + c)
            if where[0] == "r":
                _swap_rows(A, U, Ui, t, where[1])
            else:
                _swap_cols(A, V, Vi, t, where[1])
        if A.dtype != object:
            mx = max(int(np.abs(x).max()) if x is not None and x.size else 0 for x in (A, U, Ui, V, Vi))
            if mx > big:
                A, U, Ui, V, Vi = _to_object(A, U, Ui, V, Vi)
        t += 1
    diag = [abs(int(A[i, i])) for i in range(min(m, n))]
    # make diagonal non-negative
    for i in range(min(m, n)):
        if A[i, i] < 0:
            A[i] *= -1
            if U is not None:
                U[i] *= -1
            if Ui is not None:
                Ui[:, i] *= -1
    return diag, U, Ui, V, Vi


def _swap_rows(A, U, Ui, a, b):
    if a == b:
        return
    A[[a, b]] = A[[b, a]]
    if U is not None:
        U[[a, b]] = U[[b, a]]
    if Ui is not None:
        Ui[:, [a, b]] = Ui[:, [b, a]]


def _swap_cols(A, V, Vi, a, b):
    if a == b:
        return
    A[:, [a, b]] = A[:, [b, a]]
    if V is not None:
        V[:, [a, b]] = V[:, [b, a]]
    if Vi is not None:
        Vi[[a, b]] = Vi[[b, a]]


def invariant_factors_from_diagonal(diag) -> list[int]:
    """Canonical invariant factors (d1 | d2 | ...) of ⊕ Z/diag_i, dropping 1s and 0s."""
    prime_powers: dict[int, list[int]] = {}
    for d in diag:
        d = int(d)
        if d <= 1:
            continue
        for p, e in _factorize(d).items():
            prime_powers.setdefault(p, []).append(p**e)
    if not prime_powers:
        return []
    width = max(len(v) for v in prime_powers.values())
    out = [1] * width
    for p, pows in prime_powers.items():
        pows = sorted(pows)
        for k, q in enumerate(pows):
            out[width - len(pows) + k] *= q
    return [x for x in out if x > 1]


def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


# ---------------------------------------------------------------- local elimination mod p^k


def _local_counts_numpy(M: np.ndarray, p: int, k: int) -> np.ndarray:
    """Number of local elementary divisors of valuation j (j < k) of M over Z/p^k."""
    A = M % (p**k)
    counts = np.zeros(k, dtype=np.int64)
    level = 0
    mod = p**k
    while level < k and A.size:
        units = np.argwhere(A % p != 0)
        if units.size == 0:
            if not A.any():
                break
            A = A // p
            level += 1
            mod //= p
            continue
        r, c = units[0]
        inv = pow(int(A[r, c]), -1, mod)
        f = (A[:, c] * inv) % mod
        f[r] = 0
        A = (A - np.multiply.outer(f, A[r])) % mod
        A = np.delete(np.delete(A, r, axis=0), c, axis=1)
        counts[level] += 1
    return counts


if _njit is not None:

    @_njit
    def _local_counts_jit(M, p, k):  # pragma: no cover - compiled
        A = M.copy()
        rows, cols = A.shape
        mod = 1
        for _ in range(k):
            mod *= p
        for i in range(rows):
            for j in range(cols):
                A[i, j] = A[i, j] % mod
        counts = np.zeros(k, dtype=np.int64)
        level = 0
        nr, nc = rows, cols
        # entries are reduced lazily: each update adds at most (mod-1)^2, so a
        # full reduction every ``sweep`` pivots keeps them far inside int64
        sweep = max(1, (1 << 40) // (mod * mod))
        since = 0
        while level < k and nr > 0 and nc > 0:
            pr, pc = -1, -1
            for i in range(nr):
                for j in range(nc):
                    if A[i, j] % p != 0:
                        pr, pc = i, j
                        break
                if pr >= 0:
                    break
            if pr < 0:
                anynz = False
                for i in range(nr):
                    for j in range(nc):
                        A[i, j] = A[i, j] % mod
                        if A[i, j] != 0:
                            anynz = True
                if not anynz:
                    break
                for i in range(nr):
                    for j in range(nc):
                        A[i, j] //= p
                level += 1
                mod //= p
                sweep = max(1, (1 << 40) // (mod * mod))
                continue
            for j in range(nc):
                A[pr, j] = A[pr, j] % mod
            # modular inverse by extended Euclid
            a, m0 = A[pr, pc], mod
            x0, x1 = 0, 1
            aa, mm = a, m0
            while aa > 1 and mm != 0:
                qq = aa // mm
                aa, mm = mm, aa % mm
                x0, x1 = x1 - qq * x0, x0
            inv = x1 % m0
            for i in range(nr):
                if i == pr:
                    continue
                f = ((A[i, pc] % mod) * inv) % mod
                if f != 0:
                    for j in range(nc):
                        A[i, j] -= f * A[pr, j]
            # move pivot row/col to the end of the active region
            nr -= 1
            nc -= 1
            for j in range(cols):
                t = A[pr, j]
                A[pr, j] = A[nr, j]
                A[nr, j] = t
            for i in range(rows):
                t = A[i, pc]
                A[i, pc] = A[i, nc]
                A[i, nc] = t
            counts[level] += 1
            since += 1
            if since >= sweep:
                since = 0
                for i in range(nr):
                    for j in range(nc):
                        A[i, j] = A[i, j] % mod
        return counts


def _local_counts(M: np.ndarray, p: int, k: int) -> np.ndarray:
    if _njit is not None and M.size > 2000:
        return _local_counts_jit(np.ascontiguousarray(M, dtype=np.int64), p, k)
    return _local_counts_numpy(M.astype(np.int64), p, k)


def _compress_rows(M: sp.csr_matrix, mod: int, rng: np.random.Generator, extra: int = 24) -> np.ndarray:
    """R·M mod ``mod`` with a random R of (cols+extra) rows; same row module w.h.p."""
    nrow, ncol = M.shape
    if nrow <= 2 * ncol + extra:
        return M.toarray() % mod
    out = np.zeros((ncol, ncol + extra), dtype=np.int64)
    MT = M.T.tocsr()
    chunk = 8192
    for s in range(0, nrow, chunk):
        e = min(nrow, s + chunk)
        R = rng.integers(0, mod, size=(e - s, ncol + extra), dtype=np.int64)
        out = (out + (MT[:, s:e] @ R)) % mod
    return out.T.copy()


def elementary_torsion(M: sp.csr_matrix, order_bound: int, seed: int = 0) -> list[int]:
    """Invariant factors (>1) of coker M's torsion, assuming it is killed by ``order_bound``.

    Works one prime at a time over Z/p^k with k = v_p(order_bound) + 1, after a
    random row compression; no exact integer arithmetic on the large matrix.
    """
    comps = []
    rng = np.random.default_rng(seed)
    for p, v in _factorize(order_bound).items():
        k = v + 1
        A = _compress_rows(M, p**k, rng)
        counts = _local_counts(A, p, k)
        for j in range(1, k):
            comps += [p**j] * int(counts[j])
    return invariant_factors_from_diagonal(comps)


# ---------------------------------------------------------------- cohomology groups


@dataclass(frozen=True, eq=False)
class CohomologyGroup:
    """Abelian group ⊕ Z/e_i with representative cocycles.

    ``torsion_orders[i]`` is the order of ``representatives[i]``; the list may
    differ from the canonical ``invariant_factors`` (e.g. [2, 3] vs [6]).
    U(1) representatives are R/Z-valued cochain vectors; finite-module ones
    are integer vectors of length (#cochains)·rank.
    """

    group: FiniteGroup
    degree: int
    module: CoefficientModule
    invariant_factors: list[int]
    torsion_orders: list[int] = field(default_factory=list)
    representatives: list[np.ndarray] = field(default_factory=list)
    continuous: bool = False
    _coords: object = field(default=None, repr=False)

    @property
    def order(self) -> int | float:
        if self.continuous:
            return math.inf
        return int(np.prod(self.invariant_factors)) if self.invariant_factors else 1

    @property
    def trivial(self) -> bool:
        return not self.continuous and not self.invariant_factors

    @property
    def label(self) -> str:
        if self.continuous:
            return "U(1)"
        if not self.invariant_factors:
            return "0"
        return "x".join(f"Z{e}" for e in self.invariant_factors)

    def representative_tensor(self, i: int) -> np.ndarray:
        return cochain_tensor(self.group, self.degree, self.representatives[i], self.module.rank)

    def class_of(self, cochain) -> tuple[int, ...]:
        """Coordinates of a cocycle (vector or full tensor) in the torsion basis."""
        if self._coords is None:
            raise CapExceeded("class coordinates are unavailable for this group size")
        return self._coords(cochain)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "group": self.label,
            "invariant_factors": list(self.invariant_factors),
            "torsion_orders": list(self.torsion_orders),
            "representatives": [np.asarray(r).tolist() for r in self.representatives],
        }


def _u1_cohomology(group: FiniteGroup, n: int, module: CoefficientModule, representatives: bool) -> CohomologyGroup:
    d = coboundary_matrix(group, n, module)
    if n == 0 and d.nnz == 0:
        return CohomologyGroup(group, 0, module, [], continuous=True)
    rows, cols = d.shape
    if cols == 0:
        return CohomologyGroup(group, n, module, [])
    exact_ok = rows * cols <= EXACT_CAP
    if not (representatives and exact_ok):
        if not exact_ok and representatives:
            pass  # fall through to factors only
        factors = elementary_torsion(d, max(2, group.order))
        return CohomologyGroup(group, n, module, factors)
    want_u = rows * rows <= EXACT_CAP
    diag, U, _, V, _ = smith_diagonal(d, want_u=want_u, want_v=True)
    keep = [i for i, e in enumerate(diag) if e > 1]
    orders = [diag[i] for i in keep]
    reps = [np.mod(np.array(V[:, i], dtype=float) / diag[i], 1.0) for i in keep]
    coords = None
    if U is not None:
        Uk = np.array(U[keep], dtype=object) if keep else np.zeros((0, rows), dtype=object)
        dense_d = d.toarray()

        def coords(cochain, _Uk=Uk, _o=orders, _d=dense_d):
            vec = np.asarray(cochain, float)
            if vec.ndim > 1 or vec.size != cols:
                vec = cochain_vector(group, n, normalize_u1_cocycle(group, n, cochain, module))
            z = _d @ vec
            zi = np.rint(z)
            if np.abs(z - zi).max() > 1e-6:
                raise ValueError("input is not a cocycle (δω not integral)")
            zi = zi.astype(np.int64).astype(object)
            return tuple(int(c) % o for c, o in zip(_Uk.dot(zi), _o))

    return CohomologyGroup(group, n, module, invariant_factors_from_diagonal(orders), orders, reps, False, coords)


def _finite_cohomology(group: FiniteGroup, n: int, module: CoefficientModule) -> CohomologyGroup:
    m_vec = np.array(module.moduli, dtype=np.int64)
    mexp = int(np.lcm.reduce(m_vec)) if m_vec.size else 1
    d_n = coboundary_matrix(group, n, module)
    a = d_n.shape[1]
    if a == 0:
        return CohomologyGroup(group, n, module, [])
    if d_n.shape[0] * a > EXACT_CAP:
        raise CapExceeded("cochain space too large for the finite-module route")
    row_mod = np.tile(m_vec, d_n.shape[0] // max(1, len(m_vec)))
    scaled = sp.diags(mexp // row_mod) @ d_n if d_n.shape[0] else d_n
    diag, _, _, V, Vi = smith_diagonal(scaled, want_v=True, want_vinv=True)
    f = np.ones(a, dtype=np.int64)
    for i in range(a):
        di = diag[i] if i < len(diag) else 0
        f[i] = mexp // math.gcd(di, mexp)
    # K = V · diag(f) Z^a ; I = im δ^{n-1} + diag(m) Z^a
    col_mod = np.tile(m_vec, a // len(m_vec))
    gens = [np.diag(col_mod)]
    if n > 0:
        gens.insert(0, coboundary_matrix(group, n - 1, module).toarray())
    I = np.hstack(gens).astype(object)
    Kinv_I = (np.array(Vi, dtype=object).dot(I))
    f_obj = f.astype(object)
    if any(int(x) % int(y) for row, y in zip(Kinv_I, f_obj) for x in row):
        raise ArithmeticError("image lattice not contained in the kernel lattice")
    Q = np.array([[int(x) // int(y) for x in row] for row, y in zip(Kinv_I, f_obj)], dtype=object)
    Qi = Q.astype(np.int64) if np.abs(Q).max() < 2**40 else Q
    diag2, _, Uinv2, _, _ = smith_diagonal(Qi, want_uinv=True)
    Kb = np.array(V, dtype=object) * f_obj[None, :]
    keep = [i for i, e in enumerate(diag2) if e > 1]
    orders = [diag2[i] for i in keep]
    reps = []
    for i in keep:
        v = Kb.dot(np.array(Uinv2[:, i], dtype=object))
        reps.append(np.array([int(x) % int(mm) for x, mm in zip(v, col_mod)], dtype=np.int64))
    return CohomologyGroup(group, n, module, invariant_factors_from_diagonal(orders), orders, reps)


def cohomology_group(
    group: FiniteGroup, n: int, coeff: CoefficientModule | None = None, representatives: bool = True
) -> CohomologyGroup:
    """H^n(G, coeff); coeff defaults to untwisted U(1)."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    coeff = coeff or u1(group)
    if coeff.action.shape[0] != group.order:
        raise InvalidAction("action table does not match the group")
    if coeff.is_u1:
        return _u1_cohomology(group, n, coeff, representatives)
    return _finite_cohomology(group, n, coeff)


@lru_cache(maxsize=256)
def _cached_u1(label: str, n: int) -> CohomologyGroup:
    return cohomology_group(parse_group(label), n)


def cohomology_u1(group: FiniteGroup | str, n: int) -> CohomologyGroup:
    if isinstance(group, str):
        return _cached_u1(group, n)
    return cohomology_group(group, n)


# ---------------------------------------------------------------- cocycle utilities


def normalize_u1_cocycle(group: FiniteGroup, n: int, omega, module: CoefficientModule | None = None) -> np.ndarray:
    """Shift a 2-cocycle (R/Z tensor) by a constant coboundary so ω(e,·)=ω(·,e)=0."""
    om = np.mod(np.asarray(omega, float), 1.0)
    if n == 2:
        e = group.identity
        om = np.mod(om - om[e, e], 1.0)
        edge = np.concatenate([om[e, :], om[:, e]])
        if np.abs(_wrap(edge)).max() > 1e-6:
            raise ValueError("cocycle cannot be normalized by a constant shift")
    return om


def _wrap(x):
    return (np.asarray(x) + 0.5) % 1.0 - 0.5


def cocycle_residual(group: FiniteGroup, n: int, omega, signs=None) -> float:
    """max |δω| in R/Z for an R/Z-valued n-cochain given as a full tensor."""
    om = np.asarray(omega, float)
    G = group.order
    s = np.ones(G) if signs is None else np.asarray(signs, float)
    worst = 0.0
    for args in itertools.product(range(G), repeat=n + 1):
        val = s[args[0]] * om[args[1:]] if n > 0 else 0.0
        for i in range(1, n + 1):
            merged = args[: i - 1] + (int(group.mul[args[i - 1], args[i]]),) + args[i + 1 :]
            val += (-1) ** i * om[merged]
        val += (-1) ** (n + 1) * om[args[:n]]
        worst = max(worst, abs(_wrap(val)))
    return float(worst)


def coboundary_of(group: FiniteGroup, n: int, beta) -> np.ndarray:
    """δβ for an R/Z-valued (n)-cochain tensor (untwisted), as an (n+1)-tensor."""
    beta = np.asarray(beta, float)
    G = group.order
    out = np.zeros((G,) * (n + 1))
    for args in itertools.product(range(G), repeat=n + 1):
        val = beta[args[1:]] if n > 0 else 0.0
        for i in range(1, n + 1):
            merged = args[: i - 1] + (int(group.mul[args[i - 1], args[i]]),) + args[i + 1 :]
            val += (-1) ** i * beta[merged]
        val += (-1) ** (n + 1) * (beta[args[:n]] if n > 0 else beta)
        out[args] = val
    return np.mod(out, 1.0)


def commutator_phase(omega, a: int, b: int) -> float:
    """ω(a,b) − ω(b,a) in R/Z: the gauge-invariant bicharacter of an abelian 2-cocycle."""
    om = np.asarray(omega, float)
    return float(np.mod(om[a, b] - om[b, a], 1.0))


def slant_product(omega, Kplus: FiniteGroup, Kminus: FiniteGroup, k: int, tol: float = 1e-8) -> IrrepLabel:
    """Character a ↦ ω[(a,e),(e,k)] − ω[(e,k),(a,e)] of K₊ for k ∈ K₋.

    ``omega`` is an R/Z-valued 2-cocycle tensor on K₊×K₋, with (a,b) stored at
    index a·|K₋| + b.
    """
    om = np.asarray(omega, float)
    m = Kminus.order
    e_p, e_m = Kplus.identity, Kminus.identity
    kk = e_p * m + k
    vals = np.array([np.mod(om[a * m + e_m, kk] - om[kk, a * m + e_m], 1.0) for a in range(Kplus.order)])
    chi = np.exp(2j * np.pi * vals)
    for a in range(Kplus.order):
        for b in range(Kplus.order):
            if abs(chi[a] * chi[b] - chi[Kplus.mul[a, b]]) > tol:
                raise ValueError("slant product is not a character: invalid cocycle")
    charges = None
    if Kplus.cyclic_factors is not None:
        charges = tuple(
            int(round(vals[g] * m_)) % m_ for g, m_ in zip(Kplus.generators(), [x for x in Kplus.cyclic_factors if x > 1])
        )
    return IrrepLabel(Kplus, chi, charges)


# ---------------------------------------------------------------- classification formulas


@dataclass(frozen=True)
class Summand:
    p: int
    q: int
    group: CohomologyGroup

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "group": self.group.label, "invariant_factors": list(self.group.invariant_factors),
                "generators": [np.asarray(r).tolist() for r in self.group.representatives]}


@dataclass(frozen=True)
class Classification:
    summands: list
    e2_page: bool = False
    note: str = ""

    @property
    def invariant_factors(self) -> list[int]:
        return invariant_factors_from_diagonal([e for s in self.summands for e in s.group.invariant_factors])

    @property
    def order(self) -> int:
        return int(np.prod(self.invariant_factors)) if self.invariant_factors else 1

    @property
    def label(self) -> str:
        f = self.invariant_factors
        return "x".join(f"Z{e}" for e in f) if f else "0"

    def to_json(self) -> dict:
        return {"summands": [s.to_json() for s in self.summands], "total": self.label, "e2_page": self.e2_page,
                "note": self.note}


def _pullback_action(Kgroup: FiniteGroup, q: int, H: CohomologyGroup, auto: np.ndarray) -> np.ndarray:
    """Integer matrix of φ* on H^q(K,U(1)) in its torsion basis, for an automorphism φ of K."""
    r = len(H.torsion_orders)
    M = np.zeros((r, r), dtype=np.int64)
    inv_auto = np.argsort(auto)
    for j in range(r):
        w = H.representative_tensor(j)
        moved = w[np.ix_(*[inv_auto] * q)] if q > 0 else w
        M[:, j] = H.class_of(moved)
    return M


def coefficient_from_cohomology(
    G: FiniteGroup, K: FiniteGroup, q: int, action_of_G_on_K=None, antiunitary=None
) -> CoefficientModule:
    """H^q(K, U(1)) as a G-module (automorphism pullback, times -1 for antiunitary g)."""
    H = cohomology_group(K, q)
    signs = np.ones(G.order, dtype=np.int64)
    if antiunitary is not None:
        signs[np.asarray(antiunitary, bool)] = -1
    if H.continuous:
        return u1(G, antiunitary)
    r = len(H.torsion_orders)
    act = np.zeros((G.order, r, r), dtype=np.int64)
    for g in range(G.order):
        if action_of_G_on_K is None:
            A = np.eye(r, dtype=np.int64)
        else:
            auto = np.asarray(action_of_G_on_K[g], dtype=int)
            # (g·ω)(k) = ω(φ_g^{-1}(k)) is a left action
            A = _pullback_action(K, q, H, auto)
        act[g] = signs[g] * A
    return finite_module(G, H.torsion_orders, act)


def _check_automorphisms(G: FiniteGroup, K: FiniteGroup, table) -> np.ndarray:
    t = np.asarray(table, dtype=int)
    if t.shape != (G.order, K.order):
        raise InvalidAction("action table must be |G| × |K|")
    for g in range(G.order):
        if sorted(t[g]) != list(range(K.order)):
            raise InvalidAction("action of an element is not a bijection")
        for a in range(K.order):
            for b in range(K.order):
                if t[g, K.mul[a, b]] != K.mul[t[g, a], t[g, b]]:
                    raise InvalidAction("action of an element is not an automorphism")
    for g in range(G.order):
        for h in range(G.order):
            if not np.array_equal(t[G.mul[g, h]], t[g][t[h]]):
                raise InvalidAction("action is not a homomorphism G → Aut(K)")
    return t


def classify_mspt(
    K: FiniteGroup | str,
    G: FiniteGroup | str,
    d: int,
    with_T: bool = False,
    action_of_G_on_K=None,
    antiunitary_mask=None,
) -> Classification:
    """⊕_{p=0}^{d} H^p[G', H^{d+1-p}(K, U(1))] (summands with q > 0).

    With ``with_T`` the average group is G×Z2^T, the time reversal acting on
    the U(1) coefficients by conjugation. A nontrivial action of G on K makes
    the result the E₂ page only (differentials are not computed).
    """
    K = parse_group(K) if isinstance(K, str) else K
    G = parse_group(G) if isinstance(G, str) else G
    if d not in (0, 1, 2):
        raise ValueError("d must be 0, 1 or 2")
    anti = None if antiunitary_mask is None else np.asarray(antiunitary_mask, bool)
    act = None
    if action_of_G_on_K is not None:
        act = _check_automorphisms(G, K, action_of_G_on_K)
    Gp = G
    if with_T:
        T = group_from_cyclic_factors([2])
        Gp = direct_product(G, T)
        base = np.zeros(G.order, bool) if anti is None else anti
        anti = np.array([bool(base[a]) ^ bool(t) for a in range(G.order) for t in range(2)])
        if act is not None:
            act = np.array([act[a] for a in range(G.order) for _ in range(2)])
    summands = []
    for p in range(d + 1):
        q = d + 1 - p
        coeff = coefficient_from_cohomology(Gp, K, q, act, anti)
        summands.append(Summand(p, q, cohomology_group(Gp, p, coeff)))
    nontrivial_action = act is not None and not all(np.array_equal(row, np.arange(K.order)) for row in act)
    note = "E2 page; differentials not computed" if nontrivial_action else ""
    return Classification(summands, nontrivial_action, note)


def kunneth_decompose(Kplus: FiniteGroup | str, Kminus: FiniteGroup | str, degree: int) -> list[Summand]:
    """H^p[K₋, H^{n-p}(K₊, U(1))] for p = 0..n (trivial action)."""
    Kp = parse_group(Kplus) if isinstance(Kplus, str) else Kplus
    Km = parse_group(Kminus) if isinstance(Kminus, str) else Kminus
    out = []
    for p in range(degree + 1):
        q = degree - p
        coeff = coefficient_from_cohomology(Km, Kp, q)
        out.append(Summand(p, q, cohomology_group(Km, p, coeff, representatives=False)))
    return out


def kunneth_total(summands) -> list[int]:
    return invariant_factors_from_diagonal([e for s in summands for e in s.group.invariant_factors])


def direct_product_cohomology(Kplus, Kminus, degree: int) -> CohomologyGroup:
    Kp = parse_group(Kplus) if isinstance(Kplus, str) else Kplus
    Km = parse_group(Kminus) if isinstance(Kminus, str) else Kminus
    return cohomology_group(direct_product(Kp, Km), degree, representatives=False)


def twisted_vanishing_check(K: FiniteGroup | str, p: int, q: int = 1) -> CohomologyGroup:
    """H^p(Z2^J, M ⊕ M), M = H^q(K, U(1)), J acting by swap plus negation."""
    K = parse_group(K) if isinstance(K, str) else K
    if q < 1:
        raise ValueError("q must be >= 1 so that M is finite")
    J = group_from_cyclic_factors([2])
    H = cohomology_group(K, q)
    mods = tuple(H.torsion_orders)
    r = len(mods)
    if r == 0:
        return cohomology_group(J, p, finite_module(J, (1,)))
    I = np.eye(r, dtype=np.int64)
    swap = np.block([[0 * I, -I], [-I, 0 * I]])
    act = np.stack([np.eye(2 * r, dtype=np.int64), swap])
    return cohomology_group(J, p, finite_module(J, mods + mods, act))
