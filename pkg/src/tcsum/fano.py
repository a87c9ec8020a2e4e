"""Database of polarized Fano 3-fold deformation classes.

A record carries the topological invariants of the class and the
polarization lattice S(V) induced on an anticanonical K3 divisor, together
with the Kahler vector (in the basis of S(V)) that the matching engine
embeds into the K3 lattice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Optional

import jsonschema

from . import chern
from .lattice import GramLattice, LatticeError, signature


class FanoError(ValueError):
    pass


class FanoSchemaError(FanoError):
    pass


class FanoValidationError(FanoError):
    def __init__(self, reports):
        self.reports = reports
        lines = []
        for rep in reports:
            for c in rep.failures:
                lines.append(f"{rep.name}: {c.name}: {c.detail}")
        super().__init__("; ".join(lines) or "validation failed")


class FanoDuplicateError(FanoError):
    pass


@dataclass(frozen=True)
class Provenance:
    kind: str = "other"
    ambient_dim: Optional[int] = None
    degrees: Optional[tuple] = None
    branch_degree: Optional[int] = None
    product_dims: Optional[tuple] = None
    notes: str = ""

    @classmethod
    def from_json(cls, d: dict) -> "Provenance":
        return cls(
            kind=d.get("kind", "other"),
            ambient_dim=d.get("ambient_dim"),
            degrees=tuple(d["degrees"]) if "degrees" in d else None,
            branch_degree=d.get("branch_degree"),
            product_dims=tuple(d["product_dims"]) if "product_dims" in d else None,
            notes=d.get("notes", ""),
        )

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.ambient_dim is not None:
            out["ambient_dim"] = self.ambient_dim
        if self.degrees is not None:
            out["degrees"] = list(self.degrees)
        if self.branch_degree is not None:
            out["branch_degree"] = self.branch_degree
        if self.product_dims is not None:
            out["product_dims"] = list(self.product_dims)
        if self.notes:
            out["notes"] = self.notes
        return out


@dataclass(frozen=True)
class PolarizedFanoClass:
    name: str
    b2: int
    b3: int
    minus_K_cubed: int
    polarization: GramLattice
    kahler_vector: tuple
    torsion_free_H3: bool
    provenance: Provenance = field(default_factory=Provenance)

    @property
    def genus(self):
        """``-K^3/2 + 1``; a Fraction-free int only when -K^3 is even."""
        if self.minus_K_cubed % 2:
            return None
        return self.minus_K_cubed // 2 + 1

    @property
    def kahler_square(self) -> int:
        k = self.kahler_vector
        G = self.polarization.gram
        if len(k) != len(G):
            return 0
        return sum(k[i] * G[i][j] * k[j] for i in range(len(k)) for j in range(len(k)))

    @classmethod
    def from_json(cls, d: dict) -> "PolarizedFanoClass":
        b3 = int(d["b3"])
        return cls(
            name=d["name"],
            b2=int(d["b2"]),
            b3=b3,
            minus_K_cubed=int(d["minus_K_cubed"]),
            polarization=GramLattice(f"S({d['name']})", tuple(map(tuple, d["polarization_gram"]))),
            kahler_vector=tuple(int(a) for a in d["kahler_vector"]),
            # H^3(V) = 0 is the sufficient condition for torsion-free H_2(M)
            torsion_free_H3=bool(d.get("torsion_free_H3", b3 == 0)),
            provenance=Provenance.from_json(d.get("provenance", {})),
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "b2": self.b2,
            "b3": self.b3,
            "minus_K_cubed": self.minus_K_cubed,
            "polarization_gram": [list(r) for r in self.polarization.gram],
            "kahler_vector": list(self.kahler_vector),
            "torsion_free_H3": self.torsion_free_H3,
            "provenance": self.provenance.to_json(),
        }


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ValidationReport:
    name: str
    checks: List[Check] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.ok]

    def get(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "checks": [{"name": c.name, "ok": c.ok, "detail": c.detail} for c in self.checks],
        }


def validate(rec: PolarizedFanoClass) -> ValidationReport:
    rep = ValidationReport(rec.name)
    S = rec.polarization
    rep.add("rank_equals_b2", S.rank == rec.b2, f"rank S = {S.rank}, b2 = {rec.b2}")
    rep.add("b2_in_range", 1 <= rec.b2 <= 10, f"b2 = {rec.b2}")
    sig = signature(S)
    want = (1, rec.b2 - 1, 0)
    rep.add("signature_1_t", tuple(sig) == want, f"signature {tuple(sig)}, expected {want}")
    rep.add("polarization_even", S.is_even, "diagonal of S must be even inside the K3 lattice")
    rep.add(
        "kahler_vector_length",
        len(rec.kahler_vector) == S.rank,
        f"{len(rec.kahler_vector)} coordinates for rank {S.rank}",
    )
    ks = rec.kahler_square
    rep.add("kahler_square_positive_even", ks > 0 and ks % 2 == 0, f"kahler square {ks}")
    g = 0
    for a in rec.kahler_vector:
        g = _gcd(g, a)
    rep.add("kahler_vector_primitive", g == 1, f"gcd of coordinates {g}")
    rep.add("minus_K_cubed_positive", rec.minus_K_cubed > 0, f"-K^3 = {rec.minus_K_cubed}")
    rep.add(
        "genus_integer",
        rec.minus_K_cubed % 2 == 0,
        f"genus not an integer: -K^3 = {rec.minus_K_cubed} is odd"
        if rec.minus_K_cubed % 2
        else f"genus {rec.genus}",
    )
    _recompute(rec, rep)
    return rep


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def _recompute(rec: PolarizedFanoClass, rep: ValidationReport) -> None:
    p = rec.provenance
    try:
        if p.kind == "complete_intersection" and p.ambient_dim is not None and p.degrees is not None:
            series, deg = chern.chern_complete_intersection(p.ambient_dim, p.degrees)
            inv = chern.euler_and_betti(series, deg, rec.b2)
            rep.add("chern_b3", inv.b3 == rec.b3, f"recomputed b3 = {inv.b3}, record {rec.b3}")
            rep.add(
                "chern_minus_K_cubed",
                inv.minus_K_cubed == rec.minus_K_cubed,
                f"recomputed -K^3 = {inv.minus_K_cubed}, record {rec.minus_K_cubed}",
            )
            if rec.b2 == 1:
                # hyperplane class squared on D in |c1 H|
                k2 = series[1] * deg
                rep.add(
                    "chern_kahler_square",
                    k2 == rec.kahler_square,
                    f"H^2.D = {k2}, record {rec.kahler_square}",
                )
        elif p.kind == "double_cover" and p.ambient_dim is not None and p.branch_degree is not None:
            chi_base = chern.complete_intersection_euler(p.ambient_dim, [])
            chi_branch = chern.complete_intersection_euler(p.ambient_dim, [p.branch_degree])
            inv = chern.double_cover_invariants(chi_base, chi_branch, rec.b2)
            rep.add("chern_b3", inv.b3 == rec.b3, f"recomputed b3 = {inv.b3}, record {rec.b3}")
            mk3 = chern.double_cover_anticanonical_degree(p.ambient_dim, p.branch_degree)
            rep.add(
                "chern_minus_K_cubed",
                mk3 == rec.minus_K_cubed,
                f"recomputed -K^3 = {mk3}, record {rec.minus_K_cubed}",
            )
            if rec.b2 == 1:
                k = p.ambient_dim + 1 - p.branch_degree // 2
                k2 = 2 * k  # (p*H)^2 . (k p*H), with (p*H)^3 = 2
                rep.add(
                    "chern_kahler_square",
                    k2 == rec.kahler_square,
                    f"(p*H)^2.D = {k2}, record {rec.kahler_square}",
                )
        elif p.kind == "other" and p.product_dims == (2, 1):
            inv = chern.product_invariants(2, 1)
            rep.add("chern_b3", inv.b3 == rec.b3, f"recomputed b3 = {inv.b3}, record {rec.b3}")
            rep.add(
                "chern_minus_K_cubed",
                inv.minus_K_cubed == rec.minus_K_cubed,
                f"recomputed -K^3 = {inv.minus_K_cubed}, record {rec.minus_K_cubed}",
            )
            x = chern.BivariateSeries.x()
            y = chern.BivariateSeries.y()
            gram = chern.restricted_gram(3 * x + 2 * y, [y, x])
            rep.add(
                "chern_polarization_gram",
                gram == rec.polarization.gram,
                f"intersection form on D {gram}, record {rec.polarization.gram}",
            )
    except chern.ChernError as exc:
        rep.add("chern_recompute", False, str(exc))


def _records_from_document(doc) -> list:
    schema = _schema()
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise FanoSchemaError(f"schema violation at {path}: {exc.message}") from None
    return doc if isinstance(doc, list) else doc["classes"]


def load(source) -> List[PolarizedFanoClass]:
    """Load and validate records from a path, JSON text, or parsed document."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith(("[", "{"))):
        doc = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    raw = _records_from_document(doc)
    records, reports, seen = [], [], set()
    for d in raw:
        if d["name"] in seen:
            raise FanoDuplicateError(f"duplicate class name {d['name']!r}")
        seen.add(d["name"])
        try:
            rec = PolarizedFanoClass.from_json(d)
        except LatticeError as exc:
            rep = ValidationReport(d["name"])
            rep.add("polarization_gram", False, str(exc))
            reports.append(rep)
            continue
        rep = validate(rec)
        if not rep.ok:
            reports.append(rep)
        records.append(rec)
    if reports:
        raise FanoValidationError(reports)
    return records


@lru_cache(maxsize=1)
def _schema() -> dict:
    return json.loads(resources.files("tcsum").joinpath("schemas/fano_db.schema.json").read_text())


@lru_cache(maxsize=1)
def _builtin() -> tuple:
    text = resources.files("tcsum").joinpath("data/fano_builtin.json").read_text()
    return tuple(load(text))


def builtin() -> List[PolarizedFanoClass]:
    return list(_builtin())


def by_name(records: Iterable[PolarizedFanoClass]) -> dict:
    return {r.name: r for r in records}


def lookup(name: str, records: Optional[Iterable[PolarizedFanoClass]] = None) -> PolarizedFanoClass:
    db = by_name(builtin() if records is None else records)
    try:
        return db[name]
    except KeyError:
        raise FanoError(f"unknown Fano class {name!r}; known: {', '.join(sorted(db))}") from None


def dump(records: Iterable[PolarizedFanoClass]) -> str:
    return json.dumps({"classes": [r.to_json() for r in records]}, indent=2)
