"""Finite groups, on-site representations and symmetry tags."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


class InvalidGroup(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mul: np.ndarray
    identity: int
    inv: np.ndarray
    cyclic_factors: tuple[int, ...] | None = None
    name: str = ""

    @property
    def order(self) -> int:
        return int(self.mul.shape[0])

    @property
    def abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def __len__(self) -> int:
        return self.order

    def exponents(self, a: int) -> tuple[int, ...]:
        if self.cyclic_factors is None:
            raise InvalidGroup("group has no cyclic factor labelling")
        out = []
        for m in reversed(self.cyclic_factors):
            out.append(a % m)
            a //= m
        return tuple(reversed(out))

    def element(self, exps) -> int:
        if self.cyclic_factors is None:
            raise InvalidGroup("group has no cyclic factor labelling")
        idx = 0
        for e, m in zip(exps, self.cyclic_factors):
            idx = idx * m + (e % m)
        return idx

    def generators(self) -> list[int]:
        if self.cyclic_factors is None:
            return [a for a in range(self.order) if a != self.identity]
        out = []
        for i, m in enumerate(self.cyclic_factors):
            if m > 1:
                e = [0] * len(self.cyclic_factors)
                e[i] = 1
                out.append(self.element(e))
        return out

    def power(self, a: int, n: int) -> int:
        out = self.identity
        for _ in range(n % self.order if self.order else 0):
            out = int(self.mul[out, a])
        return out

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "mul": self.mul.tolist(),
            "cyclic_factors": list(self.cyclic_factors) if self.cyclic_factors else None,
        }

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name or self.order})"


def _label(factors) -> str:
    if not factors or all(m == 1 for m in factors):
        return "1"
    return "x".join(f"Z{m}" for m in factors if m > 1)


def group_from_table(mul, cyclic_factors=None, name: str = "") -> FiniteGroup:
    mul = np.asarray(mul, dtype=int)
    n = mul.shape[0]
    if mul.shape != (n, n) or n == 0:
        raise InvalidGroup("multiplication table must be square and non-empty")
    if mul.min() < 0 or mul.max() >= n:
        raise InvalidGroup("table entries out of range")
    ids = [e for e in range(n) if np.array_equal(mul[e], np.arange(n)) and np.array_equal(mul[:, e], np.arange(n))]
    if len(ids) != 1:
        raise InvalidGroup("no unique identity")
    e = ids[0]
    inv = np.full(n, -1)
    for a in range(n):
        hits = np.nonzero(mul[a] == e)[0]
        if len(hits) != 1 or mul[hits[0], a] != e:
            raise InvalidGroup(f"element {a} has no two-sided inverse")
        inv[a] = hits[0]
    # associativity: (ab)c == a(bc)
    left = mul[mul, :]  # left[a,b,c] = mul[mul[a,b], c]
    right = mul[:, mul]  # right[a,b,c] = mul[a, mul[b,c]]
    if not np.array_equal(left, right):
        raise InvalidGroup("multiplication is not associative")
    if cyclic_factors is not None:
        cyclic_factors = tuple(int(m) for m in cyclic_factors)
        if int(np.prod(cyclic_factors)) != n:
            raise InvalidGroup("cyclic factors do not multiply to the order")
    return FiniteGroup(mul, e, inv, cyclic_factors, name)


def group_from_cyclic_factors(moduli) -> FiniteGroup:
    """Direct product of cyclic groups, elements indexed lexicographically."""
    moduli = tuple(int(m) for m in moduli)
    if any(m < 1 for m in moduli):
        raise InvalidGroup("moduli must be >= 1")
    if not moduli:
        moduli = (1,)
    elems = list(itertools.product(*[range(m) for m in moduli]))
    index = {e: i for i, e in enumerate(elems)}
    mul = np.empty((len(elems), len(elems)), dtype=int)
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            mul[i, j] = index[tuple((x + y) % m for x, y, m in zip(a, b, moduli))]
    return group_from_table(mul, moduli, name=_label(moduli))


def parse_group(label: str) -> FiniteGroup:
    """Parse labels like ``Z2``, ``Z2xZ3``, ``1``."""
    label = label.strip()
    if label in ("", "1", "trivial"):
        return group_from_cyclic_factors([1])
    parts = [p.strip() for p in label.replace("×", "x").split("x")]
    try:
        moduli = [int(p.lstrip("Zz")) for p in parts]
    except ValueError as exc:
        raise InvalidGroup(f"cannot parse group label {label!r}") from exc
    return group_from_cyclic_factors(moduli)


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    """G×H with element (a,b) at index a*|H|+b."""
    n, m = g.order, h.order
    mul = np.empty((n * m, n * m), dtype=int)
    for a1, b1, a2, b2 in itertools.product(range(n), range(m), range(n), range(m)):
        mul[a1 * m + b1, a2 * m + b2] = g.mul[a1, a2] * m + h.mul[b1, b2]
    factors = None
    if g.cyclic_factors is not None and h.cyclic_factors is not None:
        factors = g.cyclic_factors + h.cyclic_factors
    name = f"({g.name or g.order})x({h.name or h.order})"
    return group_from_table(mul, factors, name=name)


def group_from_json(obj: dict) -> FiniteGroup:
    return group_from_table(obj["mul"], obj.get("cyclic_factors"))


# ---------------------------------------------------------------- representations


@dataclass(frozen=True, eq=False)
class OnsiteRep:
    group: FiniteGroup
    mats: np.ndarray  # (|G|, d, d)

    @property
    def dim(self) -> int:
        return int(self.mats.shape[1])

    def __getitem__(self, a: int) -> np.ndarray:
        return self.mats[a]

    def global_op(self, a: int, L: int) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for _ in range(L):
            out = np.kron(out, self.mats[a])
        return out

    def tensor(self, other: "OnsiteRep") -> "OnsiteRep":
        """Same group acting on two sites: u_a ⊗ v_a."""
        if other.group is not self.group:
            raise InvalidGroup("tensor of reps needs the same group object")
        return OnsiteRep(self.group, np.array([np.kron(a, b) for a, b in zip(self.mats, other.mats)]))


def rep_from_generators(group: FiniteGroup, gens) -> OnsiteRep:
    """Build a rep of a cyclic-product group from one matrix per cyclic factor."""
    if group.cyclic_factors is None:
        raise InvalidGroup("rep_from_generators needs cyclic factors")
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if len(gens) != len(group.cyclic_factors):
        raise InvalidGroup("one generator matrix per cyclic factor required")
    d = gens[0].shape[0]
    mats = np.empty((group.order, d, d), dtype=complex)
    for a in range(group.order):
        m = np.eye(d, dtype=complex)
        for g, e in zip(gens, group.exponents(a)):
            m = m @ np.linalg.matrix_power(g, e)
        mats[a] = m
    return OnsiteRep(group, mats)


def regular_rep(group: FiniteGroup) -> OnsiteRep:
    """Left regular representation: u_k |k'> = |k k'>."""
    n = group.order
    mats = np.zeros((n, n, n), dtype=complex)
    for k in range(n):
        for kp in range(n):
            mats[k, group.mul[k, kp], kp] = 1.0
    return OnsiteRep(group, mats)


@dataclass(frozen=True)
class RepReport:
    ok: bool
    unitarity: float
    homomorphism: float
    message: str = ""


def check_representation(rep: OnsiteRep, tol: float = 1e-10) -> RepReport:
    g = rep.group
    d = rep.dim
    unit = max(np.abs(m.conj().T @ m - np.eye(d)).max() for m in rep.mats)
    hom = 0.0
    for a in range(g.order):
        for b in range(g.order):
            hom = max(hom, np.abs(rep.mats[a] @ rep.mats[b] - rep.mats[g.mul[a, b]]).max())
    ok = unit <= tol and hom <= tol
    msg = "" if ok else f"unitarity residual {unit:.2e}, homomorphism residual {hom:.2e}"
    return RepReport(bool(ok), float(unit), float(hom), msg)


def verify_representation(rep: OnsiteRep, tol: float = 1e-10) -> bool:
    return check_representation(rep, tol).ok


# ---------------------------------------------------------------- abelian irreps


@dataclass(frozen=True, eq=False)
class IrrepLabel:
    group: FiniteGroup
    character: np.ndarray  # per-element unit complex values
    charges: tuple[int, ...] = ()

    @property
    def trivial(self) -> bool:
        return bool(np.allclose(self.character, 1.0))

    def conj(self) -> "IrrepLabel":
        m = self.group.cyclic_factors or ()
        return IrrepLabel(self.group, self.character.conj(), tuple((-c) % n for c, n in zip(self.charges, m)))

    def __eq__(self, other) -> bool:
        return isinstance(other, IrrepLabel) and np.allclose(self.character, other.character)

    def __hash__(self) -> int:
        return hash(self.charges)

    def __repr__(self) -> str:
        return f"IrrepLabel{self.charges}"


def irreps_abelian(g: FiniteGroup) -> list[IrrepLabel]:
    if not g.abelian:
        raise InvalidGroup("irrep machinery is abelian-only")
    if g.cyclic_factors is None:
        raise InvalidGroup("abelian group needs a cyclic-factor labelling")
    m = g.cyclic_factors
    out = []
    for charges in itertools.product(*[range(n) for n in m]):
        chi = np.empty(g.order, dtype=complex)
        for a in range(g.order):
            ph = sum(c * e / n for c, e, n in zip(charges, g.exponents(a), m))
            chi[a] = np.exp(2j * np.pi * ph)
        out.append(IrrepLabel(g, chi, tuple(charges)))
    return out


def trivial_irrep(g: FiniteGroup) -> IrrepLabel:
    return irreps_abelian(g)[0]


def operator_charge(op: np.ndarray, rep: OnsiteRep, tol: float = 1e-9) -> IrrepLabel | None:
    """Charge α with u_a O u_a† = χ_α(a) O for all a, or None if O is not homogeneous.

    ``rep`` may act on several sites; its matrix size must match ``op``.
    """
    op = np.asarray(op, dtype=complex)
    nrm = np.linalg.norm(op)
    if nrm == 0:
        return None
    for irr in irreps_abelian(rep.group):
        if all(
            np.linalg.norm(rep.mats[a] @ op @ rep.mats[a].conj().T - irr.character[a] * op) <= tol * nrm
            for a in range(rep.group.order)
        ):
            return irr
    return None


def charge_projector(op: np.ndarray, rep: OnsiteRep, irr: IrrepLabel) -> np.ndarray:
    """Component of ``op`` carrying charge ``irr`` (see operator_charge)."""
    g = rep.group
    out = np.zeros_like(op, dtype=complex)
    for a in range(g.order):
        out += irr.character[a].conj() * (rep.mats[a] @ op @ rep.mats[a].conj().T)
    return out / g.order


# ---------------------------------------------------------------- symmetry spec


@dataclass(frozen=True, eq=False)
class SymmetrySpec:
    """Symmetry data for a translation-invariant state on a unit cell.

    ``exact`` and ``average`` are lists of representations acting on the unit
    cell's physical space; ``antiunitary_T`` is the unitary part W of T = W K.
    """

    exact: list[OnsiteRep] = field(default_factory=list)
    average: list[OnsiteRep] = field(default_factory=list)
    has_J: bool = True
    antiunitary_T: np.ndarray | None = None

    def __post_init__(self):
        dims = {r.dim for r in self.exact} | {r.dim for r in self.average}
        if self.antiunitary_T is not None:
            dims.add(np.asarray(self.antiunitary_T).shape[0])
        if len(dims) > 1:
            raise InvalidGroup(f"symmetry reps act on different local dims {sorted(dims)}")

    @property
    def dim(self) -> int | None:
        for r in self.exact + self.average:
            return r.dim
        return None
