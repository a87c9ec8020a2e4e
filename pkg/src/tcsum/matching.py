"""Matching data for a twisted connected sum of two Fano 3-folds.

The engine embeds the polarization lattices S(V1), S(V2) primitively into the
K3 lattice, picks orthogonal Kahler vectors kappa1, kappa2 and a positive
kappa_K orthogonal to both images, and records the rank of the span of the
two images.  Everything is integral and checked exactly; the resulting
:class:`MatchingCertificate` can be re-verified from its JSON form alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Callable, Iterable, Mapping, Optional, Sequence

import jsonschema

from . import normal_forms as nf
from .fano import Check, PolarizedFanoClass
from .lattice import (
    GramLattice,
    LatticeError,
    LatticeVector,
    Sublattice,
    hyperbolic_index,
    inner_product,
    is_primitive_sublattice,
    pairing_matrix,
    parse_k3_vector,
    reduced_basis,
    signature,
    span,
    span_rank,
    standard_lattice,
)
from .search import babai_reduce, first_match

CERTIFICATE_FORMAT = "tcsum.matching-certificate/1"

GENERICITY_CAVEAT = (
    "Only integral lattice data is certified. Genericity of the K3 periods "
    "(the open dense conditions on the matching) is not checked."
)

CHECK_NAMES = (
    "emb1_gram_preserving",
    "emb1_primitive",
    "emb2_gram_preserving",
    "emb2_primitive",
    "kappa1_is_image",
    "kappa2_is_image",
    "kappa_orthogonal",
    "kappa2_perp_image1",
    "kappa1_perp_image2",
    "kappa1_primitive",
    "kappa2_primitive",
    "kappa_pair_primitive",
    "kappaK_positive",
    "kappaK_perp_image1",
    "kappaK_perp_image2",
    "positive_triple",
    "span_rank",
    "span_rank_bound",
    "squares",
    "scaling_ratios",
)


class MatchingError(ValueError):
    """A matching step failed; ``step`` names it."""

    def __init__(self, message: str, step: Optional[str] = None):
        self.step = step
        self.reason = message
        super().__init__(f"step {step}: {message}" if step else message)

    def at_step(self, step: str) -> "MatchingError":
        return type(self)(self.reason, step)


class SearchExhausted(MatchingError):
    """Bounded search found nothing; existence is not refuted."""


class CheckFailed(MatchingError):
    pass


def k3() -> GramLattice:
    return standard_lattice("K3")


# ---------------------------------------------------------------------------
# embeddings


@dataclass(frozen=True)
class Embedding:
    """Linear map ``source -> target``; column ``j`` is the image of basis vector ``j``."""

    source: GramLattice
    target: GramLattice
    matrix: tuple

    def __post_init__(self):
        m = tuple(tuple(int(a) for a in row) for row in self.matrix)
        if len(m) != self.target.rank or any(len(r) != self.source.rank for r in m):
            raise LatticeError(
                f"embedding matrix must be {self.target.rank} x {self.source.rank}"
            )
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_images(cls, source: GramLattice, images: Sequence[LatticeVector]) -> "Embedding":
        target = images[0].ambient
        cols = [v.coords for v in images]
        return cls(source, target, tuple(zip(*cols)))

    def images(self) -> list:
        return [self.target.vector(col) for col in zip(*self.matrix)]

    def apply(self, coords: Sequence[int]) -> LatticeVector:
        if len(coords) != self.source.rank:
            raise LatticeError("vector length does not match the source lattice")
        return self.target.vector(
            tuple(sum(row[j] * coords[j] for j in range(len(coords))) for row in self.matrix)
        )

    def image(self) -> Sublattice:
        return Sublattice(self.target, tuple(self.images()))

    def gram_mismatch(self):
        """First ``(i, j, got, expected)`` where the Gram matrix is not preserved."""
        imgs = self.images()
        for i in range(self.source.rank):
            for j in range(i, self.source.rank):
                got = inner_product(imgs[i], imgs[j])
                if got != self.source.gram[i][j]:
                    return i, j, got, self.source.gram[i][j]
        return None

    def checks(self, prefix: str = "") -> list:
        bad = self.gram_mismatch()
        out = [
            Check(
                f"{prefix}gram_preserving",
                bad is None,
                "images reproduce the source Gram matrix"
                if bad is None
                else f"entry ({bad[0]},{bad[1]}) is {bad[2]}, expected {bad[3]}",
            )
        ]
        factors = nf.invariant_factors([list(v.coords) for v in self.images()])
        ok = len(factors) == self.source.rank and all(d == 1 for d in factors)
        out.append(
            Check(f"{prefix}primitive", ok, f"invariant factors of the image {factors}")
        )
        return out

    def transformed(self, isometry: Callable[[LatticeVector], LatticeVector]) -> "Embedding":
        return Embedding.from_images(self.source, [isometry(v) for v in self.images()])

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.label,
            "matrix": [list(r) for r in self.matrix],
            "images": [str(v) for v in self.images()],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Embedding":
        target = standard_lattice(d.get("target", "K3"))
        return cls(GramLattice.from_json(d["source"]), target, tuple(map(tuple, d["matrix"])))


def embed_rank1(square: int, summand: int = 1, lattice: Optional[GramLattice] = None) -> LatticeVector:
    """``e_j + (square/2) e'_j`` in hyperbolic summand ``j``."""
    if square <= 0 or square % 2:
        raise MatchingError(f"square {square} is not a positive even integer")
    L = lattice or k3()
    coords = [0] * L.rank
    coords[hyperbolic_index(summand)] = 1
    coords[hyperbolic_index(summand, dual=True)] = square // 2
    return L.vector(coords)


def allowed_indices(reserved: Iterable[int] = ()) -> list:
    """E8 coordinates plus the coordinates of non-reserved hyperbolic summands."""
    reserved = set(reserved)
    for j in reserved:
        hyperbolic_index(j)
    out = list(range(16))
    for j in (1, 2, 3):
        if j not in reserved:
            out += [hyperbolic_index(j), hyperbolic_index(j, True)]
    return out


def _complement_rows(L: GramLattice, constraint_rows, allowed) -> list:
    allowed = sorted(allowed)
    if constraint_rows:
        P = [[row[i] for i in allowed] for row in pairing_matrix(L, constraint_rows)]
        kernel = nf.integer_kernel(P, len(allowed))
    else:
        kernel = nf.identity(len(allowed))
    rows = []
    for k in kernel:
        r = [0] * L.rank
        for i, a in zip(allowed, k):
            r[i] = a
        rows.append(r)
    return reduced_basis(L, rows)


def _gcd_is_one(v) -> bool:
    g = 0
    for a in v:
        g = nf.xgcd(g, a)[0]
    return g == 1


def find_orthogonal_positive(
    constraints: Sublattice,
    square: int,
    radius: int = 8,
    *,
    max_support: int = 4,
    accept: Optional[Callable[[LatticeVector], bool]] = None,
    allowed: Optional[Sequence[int]] = None,
) -> LatticeVector:
    """First primitive ``v`` with ``(v,v) = square`` and ``v`` orthogonal to ``constraints``."""
    if square <= 0 or square % 2:
        raise MatchingError(f"square {square} is not a positive even integer")
    L = constraints.ambient
    idx = range(L.rank) if allowed is None else allowed
    basis = _complement_rows(L, constraints.matrix, idx)
    if not basis or signature(GramLattice("N", tuple(map(tuple, pairing_matrix_rows(L, basis))))).positive == 0:
        raise MatchingError("complement has no positive part")

    def exact(v):
        if not _gcd_is_one(v):
            return False
        return accept is None or accept(L.vector(v))

    hit = first_match(basis, L.gram, square, exact, radius, max_support)
    if hit is None:
        raise SearchExhausted(
            f"no primitive vector of square {square} orthogonal to the constraints "
            f"found within radius {radius}"
        )
    return L.vector(hit[0])


def pairing_matrix_rows(L: GramLattice, rows) -> list:
    """Gram matrix of ``rows`` under the form of ``L``."""
    P = pairing_matrix(L, rows)
    return [[sum(a * b for a, b in zip(p, r)) for r in rows] for p in P]


def _multi_xgcd(values):
    g, coeffs = 0, []
    for q in values:
        g2, x, y = nf.xgcd(g, q)
        coeffs = [x * c for c in coeffs] + [y]
        g = g2
    return g, coeffs


def _find_with_pairing(
    L: GramLattice,
    kappa: LatticeVector,
    pairing: int,
    square: int,
    constraint_rows,
    allowed,
    radius: int,
    max_support: int,
    exact: Callable[[tuple], bool],
):
    """First ``y`` with ``(y,kappa) = pairing``, ``y^2 = square``, ``y`` orthogonal to constraints."""
    N = _complement_rows(L, constraint_rows, allowed)
    q = [inner_product(L.vector(n), kappa) for n in N]
    g, coeffs = _multi_xgcd(q)
    if g == 0 or pairing % g:
        raise MatchingError(
            f"no vector in the allowed region pairs to {pairing} with {kappa} "
            f"(pairings generate {g}Z)"
        )
    t = pairing // g
    y0 = [sum(t * c * n[i] for c, n in zip(coeffs, N)) for i in range(L.rank)]
    K = nf.integer_kernel([q], len(N))
    Np = reduced_basis(L, [[sum(k[a] * N[a][i] for a in range(len(N))) for i in range(L.rank)] for k in K])
    y0 = babai_reduce(y0, Np)
    hit = first_match(Np, L.gram, square, exact, radius, max_support, offset=y0, symmetric=False)
    if hit is None:
        raise SearchExhausted(
            f"no vector of square {square} pairing {pairing} with {kappa} found within radius {radius}"
        )
    return L.vector(hit[0])


def embedding_from_hint(rec: PolarizedFanoClass, hint: Mapping, lattice: Optional[GramLattice] = None) -> Embedding:
    """Build and verify an embedding from a user hint.

    A hint is either ``{"matrix": [[...]]}`` (target rows, record basis) or
    ``{"images": [...], "basis": [[...]]}``: the images of the listed basis
    vectors (rows in the record basis, identity when omitted).  Images may
    be coordinate lists or K3 expressions such as ``"e1+4e1'"``.
    """
    L = lattice or k3()
    S = rec.polarization
    if "matrix" in hint:
        emb = Embedding(S, L, tuple(map(tuple, hint["matrix"])))
        hint_basis = nf.identity(S.rank)
    else:
        imgs = [
            parse_k3_vector(v, L) if isinstance(v, str) else L.vector(v) for v in hint["images"]
        ]
        hint_basis = [list(r) for r in hint.get("basis", nf.identity(S.rank))]
        if len(imgs) != S.rank or len(hint_basis) != S.rank:
            raise MatchingError(f"hint for {rec.name} must give {S.rank} images")
        try:
            Tinv = nf.unimodular_inverse(hint_basis)
        except ValueError:
            raise MatchingError(f"hint basis for {rec.name} is not a basis of S({rec.name})") from None
        # record basis vector i = sum_k Tinv[i][k] * hint basis vector k
        cols = [
            [sum(Tinv[i][k] * imgs[k].coords[r] for k in range(S.rank)) for r in range(L.rank)]
            for i in range(S.rank)
        ]
        emb = Embedding(S, L, tuple(zip(*cols)))
    # a non-primitive image is reported before any Gram mismatch it causes
    factors = nf.invariant_factors([list(v.coords) for v in emb.images()])
    if len(factors) != S.rank or any(d != 1 for d in factors):
        raise MatchingError(
            f"hint for {rec.name} fails verification: image is not primitive "
            f"(invariant factors {factors})"
        )
    # report Gram failures in the basis the user wrote
    hint_gram = nf.matmul(nf.matmul(hint_basis, [list(r) for r in S.gram]), nf.transpose(hint_basis))
    hint_imgs = [emb.apply(b) for b in hint_basis]
    for i in range(S.rank):
        for j in range(i, S.rank):
            got = inner_product(hint_imgs[i], hint_imgs[j])
            if got != hint_gram[i][j]:
                raise MatchingError(
                    f"hint for {rec.name} fails verification: Gram entry ({i},{j}) "
                    f"is {got}, expected {hint_gram[i][j]}"
                )
    return emb


def embed_polarization(
    rec: PolarizedFanoClass,
    reserved: Iterable[int] = (),
    hints: Optional[Mapping] = None,
    *,
    constraints: Sequence[LatticeVector] = (),
    kahler_image: Optional[LatticeVector] = None,
    radius: int = 8,
    max_support: int = 4,
    accept: Optional[Callable[[Embedding], bool]] = None,
    lattice: Optional[GramLattice] = None,
) -> Embedding:
    """Primitive embedding of S(V) into K3 mapping the Kahler vector where asked.

    Ranks 1 and 2 are constructed by bounded search; higher ranks need
    ``hints``.  The image is kept orthogonal to ``constraints`` and inside the
    coordinates left free by ``reserved`` hyperbolic summands.
    """
    L = lattice or k3()
    if hints:
        emb = embedding_from_hint(rec, hints, L)
        if kahler_image is not None and emb.apply(rec.kahler_vector) != kahler_image:
            raise MatchingError(f"hint for {rec.name} does not map the Kahler vector to {kahler_image}")
        return emb
    S = rec.polarization
    if S.rank > 2:
        raise MatchingError(
            f"S({rec.name}) has rank {S.rank}; rank 3 and higher need an explicit hint"
        )
    allowed = allowed_indices(reserved)
    reserved = set(reserved)
    sq = rec.kahler_square
    crow = [list(c.coords) for c in constraints]

    if kahler_image is None:
        if constraints:
            kappa = find_orthogonal_positive(
                Sublattice(L, tuple(constraints)), sq, radius, max_support=max_support, allowed=allowed
            )
        else:
            free = next((j for j in (1, 2, 3) if j not in reserved), None)
            if free is None:
                raise MatchingError("every hyperbolic summand is reserved")
            kappa = embed_rank1(sq, free, L)
    else:
        kappa = kahler_image
        if kappa.square() != sq:
            raise MatchingError(f"Kahler image {kappa} has square {kappa.square()}, expected {sq}")

    if S.rank == 1:
        # primitive Kahler vector of a rank-1 lattice is +-generator
        emb = Embedding.from_images(S, [kappa * rec.kahler_vector[0]])
        if accept is not None and not accept(emb):
            raise SearchExhausted("the forced rank-1 embedding is rejected by the requested target")
    else:
        T = nf.complete_to_basis(rec.kahler_vector)
        Gp = nf.matmul(nf.matmul(T, [list(r) for r in S.gram]), nf.transpose(T))
        Tinv = nf.unimodular_inverse(T)

        def to_embedding(y: LatticeVector) -> Embedding:
            new = [kappa, y]
            cols = [
                [sum(Tinv[i][k] * new[k].coords[r] for k in range(2)) for r in range(L.rank)]
                for i in range(2)
            ]
            return Embedding(S, L, tuple(zip(*cols)))

        def exact(v):
            y = L.vector(v)
            if not is_primitive_sublattice(Sublattice(L, (kappa, y))):
                return False
            return accept is None or accept(to_embedding(y))

        y = _find_with_pairing(
            L, kappa, Gp[0][1], Gp[1][1], crow, allowed, radius, max_support, exact
        )
        emb = to_embedding(y)
    failed = [c for c in emb.checks() if not c.ok]
    if failed:
        raise CheckFailed(f"internal: constructed embedding fails {failed[0].name}: {failed[0].detail}")
    return emb


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class MatchingConfig:
    radius: int = 8
    max_support: int = 4
    hints: Optional[Mapping] = None
    target_span_rank: Optional[int] = None
    waive: frozenset = frozenset()
    kappa_K_squares: tuple = (2, 4, 6, 8)

    def __post_init__(self):
        object.__setattr__(self, "waive", frozenset(self.waive))
        unknown = sorted(self.waive - set(CHECK_NAMES))
        if unknown:
            raise MatchingError(f"unknown check names to waive: {', '.join(unknown)}")
        if self.radius < 0:
            raise MatchingError("radius must be non-negative")

    @classmethod
    def from_hint_file(cls, doc: Mapping, **kw) -> "MatchingConfig":
        hints = {k: doc[k] for k in ("fano1", "fano2") if k in doc}
        return cls(hints=hints, waive=frozenset(doc.get("waive", ())), **kw)


@dataclass(frozen=True)
class MatchingCertificate:
    fano1: str
    fano2: str
    kahler1: tuple
    kahler2: tuple
    emb1: Embedding
    emb2: Embedding
    kappa1: LatticeVector
    kappa2: LatticeVector
    kappaK: LatticeVector
    span_rank: int
    squares: tuple
    scaling_ratios: tuple
    checks: tuple = ()
    waived_checks: tuple = ()
    caveat: str = GENERICITY_CAVEAT
    search: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        return {
            "format": CERTIFICATE_FORMAT,
            "fano1": self.fano1,
            "fano2": self.fano2,
            "kahler1": list(self.kahler1),
            "kahler2": list(self.kahler2),
            "emb1": self.emb1.to_json(),
            "emb2": self.emb2.to_json(),
            "kappa1": list(self.kappa1.coords),
            "kappa2": list(self.kappa2.coords),
            "kappaK": list(self.kappaK.coords),
            "display": {
                "kappa1": str(self.kappa1),
                "kappa2": str(self.kappa2),
                "kappaK": str(self.kappaK),
            },
            "span_rank": self.span_rank,
            "squares": list(self.squares),
            "scaling_ratios": [str(r) for r in self.scaling_ratios],
            "checks": [{"name": c.name, "ok": c.ok, "detail": c.detail} for c in self.checks],
            "waived_checks": list(self.waived_checks),
            "genericity_caveat": self.caveat,
            "search": dict(self.search),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "MatchingCertificate":
        try:
            jsonschema.validate(d, _schema())
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise MatchingError(f"certificate schema violation at {path}: {exc.message}") from None
        L = k3()
        return cls(
            fano1=d["fano1"],
            fano2=d["fano2"],
            kahler1=tuple(d["kahler1"]),
            kahler2=tuple(d["kahler2"]),
            emb1=Embedding.from_json(d["emb1"]),
            emb2=Embedding.from_json(d["emb2"]),
            kappa1=L.vector(d["kappa1"]),
            kappa2=L.vector(d["kappa2"]),
            kappaK=L.vector(d["kappaK"]),
            span_rank=int(d["span_rank"]),
            squares=tuple(d["squares"]),
            scaling_ratios=tuple(Fraction(r) for r in d["scaling_ratios"]),
            checks=tuple(Check(c["name"], c["ok"], c.get("detail", "")) for c in d.get("checks", [])),
            waived_checks=tuple(d.get("waived_checks", ())),
            caveat=d.get("genericity_caveat", GENERICITY_CAVEAT),
            search=d.get("search", {}),
        )

    @classmethod
    def loads(cls, text: str) -> "MatchingCertificate":
        return cls.from_json(json.loads(text))

    def transformed(self, isometry: Callable[[LatticeVector], LatticeVector]) -> "MatchingCertificate":
        """Image of the certificate under a lattice isometry (checks recomputed)."""
        out = replace(
            self,
            emb1=self.emb1.transformed(isometry),
            emb2=self.emb2.transformed(isometry),
            kappa1=isometry(self.kappa1),
            kappa2=isometry(self.kappa2),
            kappaK=isometry(self.kappaK),
        )
        return replace(out, checks=tuple(certificate_checks(out)))


@lru_cache(maxsize=1)
def _schema() -> dict:
    return json.loads(
        resources.files("tcsum").joinpath("schemas/certificate.schema.json").read_text()
    )


@dataclass
class CertificateReport:
    checks: list
    waived: frozenset = frozenset()

    def status(self, c: Check) -> str:
        if c.ok:
            return "pass"
        return "waived" if c.name in self.waived else "fail"

    @property
    def failures(self) -> list:
        return [c for c in self.checks if self.status(c) == "fail"]

    @property
    def waived_failures(self) -> list:
        return [c for c in self.checks if self.status(c) == "waived"]

    @property
    def ok(self) -> bool:
        return not self.failures

    def get(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "status": self.status(c), "detail": c.detail} for c in self.checks
            ],
        }


def _guard(name: str, fn) -> Check:
    try:
        ok, detail = fn()
    except (LatticeError, ValueError) as exc:
        return Check(name, False, f"could not evaluate: {exc}")
    return Check(name, bool(ok), detail)


def _perp(v: LatticeVector, emb: Embedding):
    bad = [(j, inner_product(v, w)) for j, w in enumerate(emb.images()) if inner_product(v, w)]
    if not bad:
        return True, "orthogonal to every image basis vector"
    j, p = bad[0]
    return False, f"pairing with image of basis vector {j} is {p}"


def certificate_checks(cert: MatchingCertificate) -> list:
    """Recompute every named check from the raw certificate data."""
    k1, k2, kK = cert.kappa1, cert.kappa2, cert.kappaK
    e1, e2 = cert.emb1, cert.emb2
    out = []
    for prefix, emb in (("emb1_", e1), ("emb2_", e2)):
        try:
            out += emb.checks(prefix)
        except (LatticeError, ValueError) as exc:
            out += [
                Check(f"{prefix}gram_preserving", False, str(exc)),
                Check(f"{prefix}primitive", False, str(exc)),
            ]
    out.append(_guard("kappa1_is_image", lambda: (e1.apply(cert.kahler1) == k1, f"emb1(kahler1) = {e1.apply(cert.kahler1)}")))
    out.append(_guard("kappa2_is_image", lambda: (e2.apply(cert.kahler2) == k2, f"emb2(kahler2) = {e2.apply(cert.kahler2)}")))
    out.append(_guard("kappa_orthogonal", lambda: (inner_product(k1, k2) == 0, f"(kappa1, kappa2) = {inner_product(k1, k2)}")))
    out.append(_guard("kappa2_perp_image1", lambda: _perp(k2, e1)))
    out.append(_guard("kappa1_perp_image2", lambda: _perp(k1, e2)))
    for name, v in (("kappa1_primitive", k1), ("kappa2_primitive", k2)):
        out.append(_guard(name, lambda v=v: (bool(v) and _gcd_is_one(v.coords), f"coordinate gcd {_gcd(v.coords)}")))

    def pair_primitive():
        f = nf.invariant_factors([list(k1.coords), list(k2.coords)])
        return len(f) == 2 and all(d == 1 for d in f), f"invariant factors {f}"

    out.append(_guard("kappa_pair_primitive", pair_primitive))
    out.append(_guard("kappaK_positive", lambda: (kK.square() > 0, f"(kappaK, kappaK) = {kK.square()}")))
    out.append(_guard("kappaK_perp_image1", lambda: _perp(kK, e1)))
    out.append(_guard("kappaK_perp_image2", lambda: _perp(kK, e2)))

    def triple():
        G = tuple(tuple(inner_product(a, b) for b in (k1, k2, kK)) for a in (k1, k2, kK))
        return tuple(signature(G)) == (3, 0, 0), f"Gram of (kappa1, kappa2, kappaK) {[list(r) for r in G]}"

    out.append(_guard("positive_triple", triple))
    r = _guard("span_rank", lambda: _span_rank_check(cert))
    out.append(r)
    bound = max(e1.source.rank, e2.source.rank) + 1
    out.append(
        Check(
            "span_rank_bound",
            cert.span_rank >= bound,
            f"r = {cert.span_rank}, lower bound max(rank S1, rank S2) + 1 = {bound}",
        )
    )
    sq = (k1.square(), k2.square(), kK.square())
    out.append(
        _guard(
            "squares",
            lambda: (
                tuple(cert.squares) == sq
                and sq[0] == _source_square(e1, cert.kahler1)
                and sq[1] == _source_square(e2, cert.kahler2),
                f"recomputed {sq}, recorded {tuple(cert.squares)}",
            ),
        )
    )

    def ratios():
        if sq[0] <= 0 or sq[1] <= 0:
            return False, "kappa squares must be positive"
        want = (Fraction(sq[2], sq[0]), Fraction(sq[2], sq[1]))
        ok = tuple(cert.scaling_ratios) == want and all(
            lam * s == sq[2] for lam, s in zip(cert.scaling_ratios, sq[:2])
        )
        return ok, f"lambda^2 = {tuple(str(x) for x in cert.scaling_ratios)}, expected {tuple(str(x) for x in want)}"

    out.append(_guard("scaling_ratios", ratios))
    return out


def _gcd(coords):
    g = 0
    for a in coords:
        g = nf.xgcd(g, a)[0]
    return g


def _source_square(emb: Embedding, kv) -> int:
    G = emb.source.gram
    n = len(kv)
    return sum(kv[i] * G[i][j] * kv[j] for i in range(n) for j in range(n))


def _span_rank_check(cert):
    r = span_rank(k3(), cert.emb1.images() + cert.emb2.images())
    return r == cert.span_rank, f"recomputed rank {r}, recorded {cert.span_rank}"


def verify_certificate(cert: MatchingCertificate) -> CertificateReport:
    """Replay every check from raw data; waived failures are reported, not fatal."""
    return CertificateReport(certificate_checks(cert), frozenset(cert.waived_checks))


# ---------------------------------------------------------------------------
# the recipe


def _untouched_summand_vector(images, square: int, kappa1: LatticeVector):
    """``e_j + (square/2) e'_j`` in the first hyperbolic summand no image touches."""
    L = k3()
    for j in (1, 2, 3):
        i, ip = hyperbolic_index(j), hyperbolic_index(j, True)
        if all(v.coords[i] == 0 and v.coords[ip] == 0 for v in images):
            v = embed_rank1(square, j, L)
            if is_primitive_sublattice(Sublattice(L, (kappa1, v))):
                return v
    return None


def _step(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except MatchingError as exc:
        raise exc.at_step(name) from None


def build_matching(
    rec1: PolarizedFanoClass, rec2: PolarizedFanoClass, config: Optional[MatchingConfig] = None
) -> MatchingCertificate:
    """Run the six-step matching recipe and return a verified certificate."""
    cfg = config or MatchingConfig()
    L = k3()
    hints = dict(cfg.hints or {})
    target = cfg.target_span_rank
    common = dict(radius=cfg.radius, max_support=cfg.max_support)

    # 1. embed S(V1)
    emb1 = _step("embed_fano1", embed_polarization, rec1, hints=hints.get("fano1"), **common)
    img1 = emb1.images()
    kappa1 = emb1.apply(rec1.kahler_vector)

    # 2. kappa2 orthogonal to the first image
    emb2 = None
    kappa2 = None
    if hints.get("fano2"):
        emb2 = _step("embed_fano2", embed_polarization, rec2, hints=hints["fano2"], **common)
        kappa2 = emb2.apply(rec2.kahler_vector)
    else:
        kappa2 = _untouched_summand_vector(img1, rec2.kahler_square, kappa1)
    if kappa2 is None:
        kappa2 = _step(
            "kappa2",
            find_orthogonal_positive,
            Sublattice(L, tuple(img1)),
            rec2.kahler_square,
            cfg.radius,
            max_support=cfg.max_support,
            accept=lambda v: is_primitive_sublattice(Sublattice(L, (kappa1, v)))
            if span_rank(L, [kappa1, v]) == 2
            else False,
        )

    # 3. {kappa1, kappa2} must extend to a basis
    if span_rank(L, [kappa1, kappa2]) != 2 or not is_primitive_sublattice(Sublattice(L, (kappa1, kappa2))):
        raise CheckFailed("kappa1 and kappa2 do not span a primitive rank-2 sublattice", "kappa_pair")

    # 4. embed S(V2) with kappa2 as Kahler image, orthogonal to kappa1
    def hits_target(e: Embedding) -> bool:
        return target is None or span_rank(L, img1 + e.images()) == target

    if emb2 is None:
        emb2 = _step(
            "embed_fano2",
            embed_polarization,
            rec2,
            constraints=[kappa1],
            kahler_image=kappa2,
            accept=hits_target,
            **common,
        )
    img2 = emb2.images()
    r = span_rank(L, img1 + img2)
    if target is not None and r != target:
        raise SearchExhausted(
            f"target span rank {target} unreachable within radius {cfg.radius} (got {r})",
            "span_rank",
        )

    # 5. kappa_K orthogonal to both images
    both = span(L, img1 + img2)
    kappaK = None
    for s in cfg.kappa_K_squares:
        try:
            kappaK = _step("kappaK", find_orthogonal_positive, both, s, cfg.radius, max_support=cfg.max_support)
            break
        except SearchExhausted:
            continue
    if kappaK is None:
        raise SearchExhausted(
            f"no positive kappa_K with square in {list(cfg.kappa_K_squares)} within radius {cfg.radius}",
            "kappaK",
        )

    # 6. span rank and rescaling
    sq = (kappa1.square(), kappa2.square(), kappaK.square())
    cert = MatchingCertificate(
        fano1=rec1.name,
        fano2=rec2.name,
        kahler1=tuple(rec1.kahler_vector),
        kahler2=tuple(rec2.kahler_vector),
        emb1=emb1,
        emb2=emb2,
        kappa1=kappa1,
        kappa2=kappa2,
        kappaK=kappaK,
        span_rank=r,
        squares=sq,
        scaling_ratios=(Fraction(sq[2], sq[0]), Fraction(sq[2], sq[1])),
        waived_checks=tuple(sorted(cfg.waive)),
        search={
            "radius": cfg.radius,
            "max_support": cfg.max_support,
            "target_span_rank": target,
            "hinted": sorted(hints),
        },
    )
    report = verify_certificate(cert)
    cert = replace(cert, checks=tuple(report.checks))
    if not report.ok:
        names = ", ".join(c.name for c in report.failures)
        raise CheckFailed(f"certificate checks failed: {names}", "verify")
    return cert
