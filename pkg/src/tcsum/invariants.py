"""Topology of the compact 7-manifold M glued from a matching.

``b2(M) = b2(V1) + b2(V2) - r`` with ``r`` the span rank of the two
polarization images.  This is a derived formula (it fits every worked
example and the bound ``b2(M) <= min b2(Vi) - 1``), so every result carries
a flag saying so.  ``b3`` follows from ``b3(M) + b2(M) = b3(V~1) + b3(V~2) + 23``
where ``V~i`` is Vi blown up along a genus-g curve.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from . import chern
from .fano import PolarizedFanoClass
from .matching import MatchingCertificate, MatchingConfig, MatchingError, build_matching, verify_certificate

B2_FORMULA_NOTE = "b2(M) = b2(V1) + b2(V2) - r is a derived formula, validated on the worked examples only"

GEOGRAPHY_COLUMNS = (
    "fano1",
    "fano2",
    "span_rank",
    "b2",
    "b3",
    "pi1_trivial",
    "torsion_flag",
    "certificate_path",
    "status",
)


class InvariantsError(ValueError):
    pass


@dataclass(frozen=True)
class G2Invariants:
    b1: int
    b2: int
    b3: int
    pi1_trivial: bool
    torsion_free_H2: str  # "true" or "unknown", never "false"
    span_rank_used: int
    b3_tilde: tuple = ()
    caveats: tuple = ()

    def to_json(self) -> dict:
        return {
            "b1": self.b1,
            "b2": self.b2,
            "b3": self.b3,
            "pi1_trivial": self.pi1_trivial,
            "torsion_free_H2": self.torsion_free_H2,
            "span_rank_used": self.span_rank_used,
            "b3_blowups": list(self.b3_tilde),
            "b2_formula": "derived",
            "caveats": list(self.caveats),
        }


def pi1_complement(m: int) -> int:
    """Order of pi1(W) = Z_m for the intersection number m = D . l."""
    if m < 1:
        raise InvariantsError(f"intersection number m = {m} must be positive")
    return m


def blowup_b3(rec: PolarizedFanoClass) -> int:
    """b3 of V blown up along a smooth curve in a pencil of anticanonical divisors."""
    if rec.genus is None:
        raise InvariantsError(f"{rec.name}: -K^3 = {rec.minus_K_cubed} is odd, genus not an integer")
    try:
        return chern.blowup_invariants(rec.b2, rec.b3, rec.genus)[1]
    except chern.ChernError as exc:
        raise InvariantsError(f"{rec.name}: {exc}") from None


def invariants_from_rank(rec1: PolarizedFanoClass, rec2: PolarizedFanoClass, r: int, caveats=()) -> G2Invariants:
    b2 = rec1.b2 + rec2.b2 - r
    bt = (blowup_b3(rec1), blowup_b3(rec2))
    b3 = bt[0] + bt[1] + 23 - b2
    if not 0 <= b2 <= 9:
        raise InvariantsError(f"inconsistent certificate: b2(M) = {b2} outside [0, 9]")
    if b2 > min(rec1.b2, rec2.b2) - 1:
        raise InvariantsError(
            f"inconsistent certificate: b2(M) = {b2} exceeds min(b2(V1), b2(V2)) - 1"
        )
    torsion = "true" if rec1.torsion_free_H3 and rec2.torsion_free_H3 else "unknown"
    # blown-up Fano pieces have l . D~ = 1, so pi1 of each end is trivial
    pi1 = pi1_complement(1) == 1
    return G2Invariants(0, b2, b3, pi1, torsion, r, bt, (B2_FORMULA_NOTE,) + tuple(caveats))


def invariants_of_M(
    cert: MatchingCertificate, rec1: PolarizedFanoClass, rec2: PolarizedFanoClass
) -> G2Invariants:
    if (cert.fano1, cert.fano2) != (rec1.name, rec2.name):
        raise InvariantsError(
            f"certificate is for ({cert.fano1}, {cert.fano2}), records are ({rec1.name}, {rec2.name})"
        )
    report = verify_certificate(cert)
    if not report.ok:
        names = ", ".join(c.name for c in report.failures)
        raise InvariantsError(f"inconsistent certificate: failed checks {names}")
    caveats = [f"check {c.name} waived: {c.detail}" for c in report.waived_failures]
    return invariants_from_rank(rec1, rec2, cert.span_rank, caveats)


def theorem_b3_check(rec1: PolarizedFanoClass, rec2: PolarizedFanoClass) -> int:
    """Closed form ``b3(V1) - K^3(V1) + b3(V2) - K^3(V2) + 27`` (needs b2(V1) = 1)."""
    if rec1.b2 != 1:
        raise InvariantsError(f"theorem hypothesis not met: b2({rec1.name}) = {rec1.b2} != 1")
    return rec1.b3 + rec1.minus_K_cubed + rec2.b3 + rec2.minus_K_cubed + 27


# ---------------------------------------------------------------------------
# geography


@dataclass(frozen=True)
class GeographyConfig:
    radius: int = 8
    max_support: int = 4
    span_ranks: Optional[Sequence[int]] = None
    cert_dir: Optional[Path] = None


@dataclass(frozen=True)
class GeographyRow:
    fano1: str
    fano2: str
    span_rank: Optional[int]
    b2: Optional[int]
    b3: Optional[int]
    pi1_trivial: Optional[bool]
    torsion_flag: str
    certificate_path: str
    status: str
    b3_tilde: tuple = field(default=(), compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_csv_row(self) -> list:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            return str(v)

        return [fmt(getattr(self, c)) for c in GEOGRAPHY_COLUMNS]


def feasible_span_ranks(rec1: PolarizedFanoClass, rec2: PolarizedFanoClass) -> range:
    """Ranks allowed by the orthogonality of kappa2 to S(V1) and kappa1 to S(V2)."""
    lo = max(rec1.b2, rec2.b2) + 1
    return range(lo, rec1.b2 + rec2.b2 + 1)


def geography(db: Iterable[PolarizedFanoClass], config: Optional[GeographyConfig] = None) -> List[GeographyRow]:
    """Every unordered pair of classes, sorted by names then span rank."""
    cfg = config or GeographyConfig()
    recs = sorted(db, key=lambda r: r.name)
    rows = []
    for i, a in enumerate(recs):
        for b in recs[i:]:
            if cfg.span_ranks is None:
                targets = [None]
            else:
                feasible = feasible_span_ranks(a, b)
                targets = [r for r in sorted(set(cfg.span_ranks)) if r in feasible]
            for target in targets:
                rows.append(_geography_row(a, b, target, cfg))
    return rows


def _geography_row(a, b, target, cfg: GeographyConfig) -> GeographyRow:
    mcfg = MatchingConfig(radius=cfg.radius, max_support=cfg.max_support, target_span_rank=target)
    try:
        cert = build_matching(a, b, mcfg)
        inv = invariants_of_M(cert, a, b)
    except (MatchingError, InvariantsError) as exc:
        return GeographyRow(
            a.name, b.name, target, None, None, None, "", "",
            f"no certificate within radius {cfg.radius}: {exc}",
        )
    path = ""
    if cfg.cert_dir is not None:
        d = Path(cfg.cert_dir)
        d.mkdir(parents=True, exist_ok=True)
        p = d / f"{a.name}__{b.name}__r{cert.span_rank}.json"
        p.write_text(cert.dumps())
        path = str(p)
    return GeographyRow(
        a.name, b.name, cert.span_rank, inv.b2, inv.b3, inv.pi1_trivial,
        inv.torsion_free_H2, path, "ok", inv.b3_tilde,
    )


def geography_csv(rows: Iterable[GeographyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GEOGRAPHY_COLUMNS)
    for row in rows:
        w.writerow(row.as_csv_row())
    return buf.getvalue()
