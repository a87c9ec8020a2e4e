"""Integer lattices with a symmetric bilinear form.

Everything here is exact: Gram matrices are integer tuples, signatures come
from rational congruence diagonalization, and primitivity / complements go
through integer normal forms.

K3 lattice basis order (``standard_lattice("K3")``)::

    index   0..7    a1..a8   first  (-E8) block, simple roots
    index   8..15   b1..b8   second (-E8) block, simple roots
    index  16, 17   e1, e1'  first  hyperbolic plane
    index  18, 19   e2, e2'  second hyperbolic plane
    index  20, 21   e3, e3'  third  hyperbolic plane

``L0`` is the same without the third hyperbolic plane.  Roots are numbered
in Bourbaki order: the E8 Dynkin diagram has the chain 1-3-4-5-6-7-8 with
node 2 attached to node 4.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, NamedTuple, Sequence

from . import normal_forms as nf


class LatticeError(ValueError):
    """Raised on malformed lattice data or violated preconditions."""


class Signature(NamedTuple):
    positive: int
    negative: int
    zero: int


@dataclass(frozen=True)
class GramLattice:
    label: str
    gram: tuple

    def __post_init__(self):
        gram = tuple(tuple(int(a) for a in row) for row in self.gram)
        n = len(gram)
        if any(len(row) != n for row in gram):
            raise LatticeError(f"{self.label}: Gram matrix is not square")
        for i in range(n):
            for j in range(i):
                if gram[i][j] != gram[j][i]:
                    raise LatticeError(
                        f"{self.label}: Gram matrix not symmetric at ({i},{j})"
                    )
        object.__setattr__(self, "gram", gram)

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def is_even(self) -> bool:
        return all(self.gram[i][i] % 2 == 0 for i in range(self.rank))

    @cached_property
    def determinant(self) -> int:
        return nf.determinant(self.gram)

    @property
    def is_unimodular(self) -> bool:
        return abs(self.determinant) == 1

    @cached_property
    def _rows(self):
        # sparse rows for fast pairings
        return tuple(
            tuple((j, a) for j, a in enumerate(row) if a) for row in self.gram
        )

    def signature(self) -> Signature:
        return signature(self)

    def vector(self, coords: Iterable[int]) -> "LatticeVector":
        return LatticeVector(tuple(coords), self)

    def basis_vector(self, i: int) -> "LatticeVector":
        return self.vector(int(k == i) for k in range(self.rank))

    def zero(self) -> "LatticeVector":
        return self.vector([0] * self.rank)

    def to_json(self) -> dict:
        return {"label": self.label, "gram": [list(row) for row in self.gram]}

    @classmethod
    def from_json(cls, data: dict) -> "GramLattice":
        try:
            return cls(str(data["label"]), tuple(map(tuple, data["gram"])))
        except (KeyError, TypeError) as exc:
            raise LatticeError(f"bad lattice JSON: {exc}") from None

    def __repr__(self):
        return f"GramLattice({self.label!r}, rank={self.rank})"


@dataclass(frozen=True)
class LatticeVector:
    coords: tuple
    ambient: GramLattice = field(repr=False)

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        if len(coords) != self.ambient.rank:
            raise LatticeError(
                f"vector of length {len(coords)} in rank-{self.ambient.rank} "
                f"lattice {self.ambient.label}"
            )
        object.__setattr__(self, "coords", coords)

    def _check(self, other: "LatticeVector") -> None:
        if other.ambient is not self.ambient and other.ambient.gram != self.ambient.gram:
            raise LatticeError(
                f"vectors live in different lattices "
                f"({self.ambient.label} vs {other.ambient.label})"
            )

    def __add__(self, other):
        self._check(other)
        return LatticeVector(tuple(a + b for a, b in zip(self.coords, other.coords)), self.ambient)

    def __sub__(self, other):
        self._check(other)
        return LatticeVector(tuple(a - b for a, b in zip(self.coords, other.coords)), self.ambient)

    def __neg__(self):
        return LatticeVector(tuple(-a for a in self.coords), self.ambient)

    def __mul__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        return LatticeVector(tuple(k * a for a in self.coords), self.ambient)

    __rmul__ = __mul__

    def __bool__(self):
        return any(self.coords)

    def square(self) -> int:
        return inner_product(self, self)

    def to_json(self) -> dict:
        return {"ambient": self.ambient.label, "coords": list(self.coords)}

    def __str__(self):
        if self.ambient.rank == 22 and self.ambient.label == "K3":
            return format_k3_vector(self)
        return str(self.coords)


@dataclass(frozen=True)
class Sublattice:
    ambient: GramLattice
    basis: tuple

    def __post_init__(self):
        basis = tuple(self.basis)
        for v in basis:
            if v.ambient is not self.ambient and v.ambient.gram != self.ambient.gram:
                raise LatticeError("basis vector from a different lattice")
        object.__setattr__(self, "basis", basis)
        if basis and nf.rank(self.matrix) != len(basis):
            raise LatticeError("sublattice basis is linearly dependent")

    @classmethod
    def from_rows(cls, ambient: GramLattice, rows) -> "Sublattice":
        return cls(ambient, tuple(ambient.vector(r) for r in rows))

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def matrix(self):
        return [list(v.coords) for v in self.basis]

    def gram(self) -> tuple:
        return tuple(tuple(inner_product(v, w) for w in self.basis) for v in self.basis)

    def as_lattice(self, label: str | None = None) -> GramLattice:
        return GramLattice(label or f"sub({self.ambient.label})", self.gram())

    def contains(self, v: LatticeVector) -> bool:
        if not self.basis:
            return not v
        H, _ = nf.hermite_normal_form(self.matrix + [list(v.coords)])
        H0, _ = nf.hermite_normal_form(self.matrix)
        return [r for r in H if any(r)] == [r for r in H0 if any(r)]

    def same_span(self, other: "Sublattice") -> bool:
        a, _ = nf.hermite_normal_form(self.matrix) if self.basis else ([], None)
        b, _ = nf.hermite_normal_form(other.matrix) if other.basis else ([], None)
        return [r for r in a if any(r)] == [r for r in b if any(r)]

    def to_json(self) -> dict:
        return {"ambient": self.ambient.label, "basis": self.matrix}


# ---------------------------------------------------------------------------
# standard lattices

E8_CARTAN = (
    (2, 0, -1, 0, 0, 0, 0, 0),
    (0, 2, 0, -1, 0, 0, 0, 0),
    (-1, 0, 2, -1, 0, 0, 0, 0),
    (0, -1, -1, 2, -1, 0, 0, 0),
    (0, 0, 0, -1, 2, -1, 0, 0),
    (0, 0, 0, 0, -1, 2, -1, 0),
    (0, 0, 0, 0, 0, -1, 2, -1),
    (0, 0, 0, 0, 0, 0, -1, 2),
)

HYPERBOLIC = ((0, 1), (1, 0))

STANDARD_NAMES = ("H", "E8", "minusE8", "K3", "L0")

K3_BASIS_LABELS = tuple(
    [f"a{i}" for i in range(1, 9)]
    + [f"b{i}" for i in range(1, 9)]
    + ["e1", "e1'", "e2", "e2'", "e3", "e3'"]
)


def direct_sum(label: str, *blocks) -> GramLattice:
    n = sum(len(b) for b in blocks)
    gram = [[0] * n for _ in range(n)]
    off = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, a in enumerate(row):
                gram[off + i][off + j] = a
        off += len(b)
    return GramLattice(label, tuple(map(tuple, gram)))


def _negate(block):
    return tuple(tuple(-a for a in row) for row in block)


@lru_cache(maxsize=None)
def standard_lattice(name: str) -> GramLattice:
    """One of ``H``, ``E8``, ``minusE8``, ``K3``, ``L0``."""
    if name == "H":
        return GramLattice("H", HYPERBOLIC)
    if name == "E8":
        return GramLattice("E8", E8_CARTAN)
    if name == "minusE8":
        return GramLattice("minusE8", _negate(E8_CARTAN))
    if name == "K3":
        m = _negate(E8_CARTAN)
        return direct_sum("K3", m, m, HYPERBOLIC, HYPERBOLIC, HYPERBOLIC)
    if name == "L0":
        m = _negate(E8_CARTAN)
        return direct_sum("L0", m, m, HYPERBOLIC, HYPERBOLIC)
    raise LatticeError(
        f"unknown lattice {name!r}; valid names: {', '.join(STANDARD_NAMES)}"
    )


def hyperbolic_index(j: int, dual: bool = False) -> int:
    """Coordinate index of e_j (or e_j' when ``dual``) in the K3 basis."""
    if j not in (1, 2, 3):
        raise LatticeError(f"K3 has hyperbolic summands 1..3, not {j}")
    return 16 + 2 * (j - 1) + int(dual)


_TERM = re.compile(r"([+-]?)\s*(\d*)\s*\*?\s*(e[123]'|e'[123]|e[123]|[ab][1-8])")


def parse_k3_vector(text: str, lattice: GramLattice | None = None) -> LatticeVector:
    """Parse expressions such as ``"e1+4e1'"`` or ``"e1 - e'1 + 2a3"``.

    Both ``e'1`` and ``e1'`` denote the second basis vector of the first
    hyperbolic plane.
    """
    L = lattice or standard_lattice("K3")
    coords = [0] * L.rank
    s = text.replace(" ", "")
    pos = 0
    if not s:
        raise LatticeError("empty vector expression")
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or (pos > 0 and not m.group(1)):
            raise LatticeError(f"cannot parse vector expression {text!r} at {s[pos:]!r}")
        sign = -1 if m.group(1) == "-" else 1
        k = int(m.group(2)) if m.group(2) else 1
        name = m.group(3)
        if name.startswith("e'"):
            name = f"e{name[2]}'"
        idx = K3_BASIS_LABELS.index(name)
        if idx >= L.rank:
            raise LatticeError(f"{name} is not a basis vector of {L.label}")
        coords[idx] += sign * k
        pos = m.end()
    return L.vector(coords)


def format_k3_vector(v: LatticeVector) -> str:
    parts = []
    for c, name in zip(v.coords, K3_BASIS_LABELS):
        if not c:
            continue
        mag = "" if abs(c) == 1 else str(abs(c))
        if name.endswith("'"):
            name = f"e'{name[1]}"
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign}{mag}{name}")
    if not parts:
        return "0"
    out = "".join(parts)
    return out[1:] if out[0] == "+" else out


# ---------------------------------------------------------------------------
# operations


def inner_product(v: LatticeVector, w: LatticeVector) -> int:
    v._check(w)
    wc = w.coords
    total = 0
    for a, row in zip(v.coords, v.ambient._rows):
        if a:
            total += a * sum(g * wc[j] for j, g in row)
    return total


def pairing_matrix(L: GramLattice, rows) -> list:
    """Rows ``r * gram`` so that ``(r, w)`` is a dot product with ``w``."""
    return [[sum(r[i] * L.gram[i][j] for i in range(L.rank)) for j in range(L.rank)] for r in rows]


def signature(L) -> Signature:
    """Signature of a lattice or a Gram matrix by rational congruence."""
    gram = L.gram if isinstance(L, GramLattice) else L
    A = [[Fraction(a) for a in row] for row in gram]
    n = len(A)
    pos = neg = 0
    k = 0
    while k < n:
        piv = next((i for i in range(k, n) if A[i][i] != 0), None)
        if piv is None:
            pair = next(
                ((i, j) for i in range(k, n) for j in range(i + 1, n) if A[i][j] != 0),
                None,
            )
            if pair is None:
                break
            i, j = pair
            # v_i <- v_i + v_j turns the zero pivot into 2*A[i][j]
            for c in range(n):
                A[i][c] += A[j][c]
            for r in range(n):
                A[r][i] += A[r][j]
            piv = i
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            for row in A:
                row[k], row[piv] = row[piv], row[k]
        p = A[k][k]
        for r in range(k + 1, n):
            q = A[r][k] / p
            if q:
                for c in range(k, n):
                    A[r][c] -= q * A[k][c]
                for rr in range(k, n):
                    A[rr][r] -= q * A[rr][k]
        if p > 0:
            pos += 1
        else:
            neg += 1
        k += 1
    return Signature(pos, neg, n - pos - neg)


def is_primitive_vector(v: LatticeVector) -> bool:
    if not v:
        raise LatticeError("the zero vector has no primitivity")
    g = 0
    for c in v.coords:
        g = nf.xgcd(g, c)[0]
    return g == 1


def is_primitive_sublattice(S: Sublattice) -> bool:
    if S.rank == 0:
        return True
    return all(d == 1 for d in nf.invariant_factors(S.matrix))


def span(ambient: GramLattice, vectors: Sequence[LatticeVector]) -> Sublattice:
    """The sublattice generated by arbitrary (possibly dependent) vectors."""
    rows = [list(v.coords) for v in vectors]
    if not rows:
        return Sublattice(ambient, ())
    H, _ = nf.hermite_normal_form(rows)
    return Sublattice.from_rows(ambient, [r for r in H if any(r)])


def span_rank(ambient: GramLattice, vectors: Sequence[LatticeVector]) -> int:
    rows = [list(v.coords) for v in vectors]
    return nf.rank(rows) if rows else 0


def saturation(S: Sublattice) -> Sublattice:
    """Smallest primitive sublattice containing ``S`` (same rank)."""
    if is_primitive_sublattice(S):
        return S
    D, _, V = nf.smith_normal_form(S.matrix)
    Vinv = nf.unimodular_inverse(V)
    return Sublattice.from_rows(S.ambient, reduced_basis(S.ambient, Vinv[: S.rank]))


def orthogonal_complement(S: Sublattice) -> Sublattice:
    """Saturated basis of ``{w : (w, s) = 0 for all s in S}``."""
    L = S.ambient
    if L.determinant == 0:
        raise LatticeError(f"{L.label} is degenerate; complement undefined")
    if S.rank == 0:
        rows = nf.identity(L.rank)
    else:
        rows = nf.integer_kernel(pairing_matrix(L, S.matrix), L.rank)
    return Sublattice.from_rows(L, reduced_basis(L, rows))


def coordinate_preference(L: GramLattice) -> list:
    """Isotropic basis directions first, then the rest, each in index order."""
    iso = [i for i in range(L.rank) if L.gram[i][i] == 0]
    return iso + [i for i in range(L.rank) if L.gram[i][i] != 0]


def reduced_basis(L: GramLattice, rows) -> list:
    """LLL-reduce ``rows`` (Euclidean coordinate norm) and order canonically.

    Each vector is signed so its first nonzero entry in the preferred
    coordinate order is positive; vectors are sorted by coordinate norm,
    then by how early their support starts in that order.
    """
    rows = [list(r) for r in rows if any(r)]
    if not rows:
        return []
    if len(rows) > 1:
        from sympy import ZZ
        from sympy.polys.matrices import DomainMatrix

        dm = DomainMatrix([[ZZ(a) for a in r] for r in rows], (len(rows), len(rows[0])), ZZ)
        rows = [[int(a) for a in r] for r in dm.lll().to_list()]
    pref = coordinate_preference(L)
    out = []
    for r in rows:
        lead = next(r[p] for p in pref if r[p])
        out.append(r if lead > 0 else [-a for a in r])
    out.sort(key=lambda r: (sum(a * a for a in r), tuple(-abs(r[p]) for p in pref), tuple(-r[p] for p in pref)))
    return out


# ---------------------------------------------------------------------------
# Eichler transformations


@dataclass(frozen=True)
class EichlerTransform:
    """The isometry v -> v + (v,f)x - (f,f)/2 (v,x) x - (v,x) f."""

    f: LatticeVector
    x: LatticeVector

    def __post_init__(self):
        _check_eichler(self.f, self.x)

    def __call__(self, v: LatticeVector) -> LatticeVector:
        f, x = self.f, self.x
        vf = inner_product(v, f)
        vx = inner_product(v, x)
        half_ff = inner_product(f, f) // 2
        a = vf - half_ff * vx
        return LatticeVector(
            tuple(c + a * xc - vx * fc for c, xc, fc in zip(v.coords, x.coords, f.coords)),
            v.ambient,
        )

    def fixes(self, v: LatticeVector) -> bool:
        return inner_product(v, self.f) == 0 and inner_product(v, self.x) == 0

    def to_json(self) -> dict:
        return {"f": list(self.f.coords), "x": list(self.x.coords)}


def _check_eichler(f: LatticeVector, x: LatticeVector) -> None:
    f._check(x)
    if not f.ambient.is_even:
        raise LatticeError("Eichler transform needs an even lattice ((f,f)/2 must be integral)")
    if inner_product(x, x) != 0:
        raise LatticeError("Eichler transform needs isotropic x: (x,x) != 0")
    if inner_product(f, x) != 0:
        raise LatticeError("Eichler transform needs (f,x) = 0")
    if not x or not is_primitive_vector(x):
        raise LatticeError("Eichler transform needs primitive x")


def eichler_transform(f: LatticeVector, x: LatticeVector, v: LatticeVector) -> LatticeVector:
    return EichlerTransform(f, x)(v)


def move_into_rank2(e: LatticeVector, S2: Sublattice, f: LatticeVector):
    """Eichler-move ``e`` into the rank-2 lattice spanned by ``{x, x'}``.

    Requires ``e = a x + b x' + (x,x') b f`` for integers a, b, with ``x``
    isotropic and primitive and ``f`` nonzero and orthogonal to ``x, x'``.
    Returns the image and the transform so it can be replayed.
    """
    if S2.rank != 2:
        raise LatticeError("move_into_rank2 needs a rank-2 sublattice {x, x'}")
    x, xp = S2.basis
    if not f:
        raise LatticeError("f must be nonzero")
    if inner_product(f, x) or inner_product(f, xp):
        raise LatticeError("f must be orthogonal to x and x'")
    c = inner_product(x, xp)
    if c == 0:
        raise LatticeError("(x, x') = 0: the span of x, x' is degenerate")
    ex = inner_product(e, x)
    if ex % c:
        raise LatticeError(
            f"no decomposition e = a x + b x' + (x,x') b f: (e,x)={ex} not divisible by (x,x')={c}"
        )
    b = ex // c
    rest = e - b * xp - (c * b) * f
    a = _multiple_of(rest, x)
    if a is None:
        raise LatticeError(
            "no decomposition e = a x + b x' + (x,x') b f for this f"
        )
    T = EichlerTransform(f, x)
    image = T(e)
    if not Sublattice(S2.ambient, (x, xp)).contains(image):
        raise LatticeError("internal: Eichler image left span{x, x'}")
    return image, T


def _multiple_of(v: LatticeVector, x: LatticeVector):
    a = None
    for vc, xc in zip(v.coords, x.coords):
        if xc == 0:
            if vc:
                return None
            continue
        if vc % xc:
            return None
        q = vc // xc
        if a is None:
            a = q
        elif a != q:
            return None
    return 0 if a is None else a
