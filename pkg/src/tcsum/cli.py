"""Command-line front end: ``tcsum <command> ...``.

Exit codes: 0 success, 1 other error, 2 usage, 3 validation, 4 search
exhausted, 5 check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import chern, fano, invariants, lattice, matching

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_SEARCH = 4
EXIT_CHECK = 5


def _emit(obj, fmt: str, human) -> None:
    if fmt == "json":
        print(json.dumps(obj, indent=2))
    else:
        print(human)


def _int_list(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _db(args):
    return fano.load(Path(args.db)) if getattr(args, "db", None) else fano.builtin()


# ---------------------------------------------------------------------------
# lattice


def cmd_lattice_show(args) -> int:
    L = lattice.standard_lattice(args.name)
    sig = L.signature()
    data = {
        "label": L.label,
        "rank": L.rank,
        "even": L.is_even,
        "determinant": L.determinant,
        "unimodular": L.is_unimodular,
        "signature": list(sig),
        "gram": [list(r) for r in L.gram],
    }
    human = "\n".join(
        [
            f"lattice     {L.label}",
            f"rank        {L.rank}",
            f"even        {str(L.is_even).lower()}",
            f"determinant {L.determinant}",
            f"unimodular  {str(L.is_unimodular).lower()}",
            f"signature   ({sig.positive},{sig.negative})" + (f" + {sig.zero} null" if sig.zero else ""),
        ]
    )
    _emit(data, args.format, human)
    return EXIT_OK


def cmd_lattice_signature(args) -> int:
    sig = lattice.standard_lattice(args.name).signature()
    human = f"({sig.positive},{sig.negative})" + (f" + {sig.zero} null" if sig.zero else "")
    _emit({"positive": sig.positive, "negative": sig.negative, "zero": sig.zero}, args.format, human)
    return EXIT_OK


def cmd_lattice_complement(args) -> int:
    L = lattice.standard_lattice("K3")
    vecs = [lattice.parse_k3_vector(v, L) for v in args.vectors]
    S = lattice.span(L, vecs)
    C = lattice.orthogonal_complement(S)
    names = [str(v) for v in C.basis]
    _emit(
        {"constraints": [str(v) for v in vecs], "rank": C.rank, "signature": list(lattice.signature(C.as_lattice())), "basis": names},
        args.format,
        f"complement rank {C.rank}\n" + "\n".join(names),
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# chern


def cmd_chern(args) -> int:
    series, deg = chern.chern_complete_intersection(args.ambient, args.degrees)
    inv = chern.euler_and_betti(series, deg, args.b2)
    data = {
        "ambient": args.ambient,
        "degrees": args.degrees,
        "chern_class": list(series.coeffs),
        "chern_class_text": str(series),
        "degree": deg,
        "chi": inv.chi,
        "b2": inv.b2,
        "b3": inv.b3,
        "minus_K_cubed": inv.minus_K_cubed,
        "genus": inv.genus,
    }
    human = "\n".join(
        [
            f"c     = {series}",
            f"deg   = {deg}",
            f"chi   = {inv.chi}",
            f"b2    = {inv.b2}",
            f"b3    = {inv.b3}",
            f"-K^3  = {inv.minus_K_cubed}",
            f"genus = {inv.genus}",
        ]
    )
    _emit(data, args.format, human)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fano


def cmd_fano_list(args) -> int:
    recs = _db(args)
    rows = [
        (r.name, r.b2, r.b3, r.minus_K_cubed, r.genus, r.kahler_square, str(r.torsion_free_H3).lower())
        for r in recs
    ]
    head = ("name", "b2", "b3", "-K^3", "genus", "kappa^2", "H3_torsion_free")
    widths = [max(len(str(x)) for x in col) for col in zip(head, *rows)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(row, widths)).rstrip() for row in [head, *rows]]
    _emit([r.to_json() for r in recs], args.format, "\n".join(lines))
    return EXIT_OK


def cmd_fano_show(args) -> int:
    rec = fano.lookup(args.name, _db(args))
    d = rec.to_json()
    d["genus"] = rec.genus
    d["kahler_square"] = rec.kahler_square
    human = "\n".join(f"{k:18} {json.dumps(v)}" for k, v in d.items())
    _emit(d, args.format, human)
    return EXIT_OK


def cmd_fano_validate(args) -> int:
    source = Path(args.db) if args.db else None
    if source is None:
        recs = fano.builtin()
    else:
        recs = fano.load(source)
    reports = [fano.validate(r) for r in recs]
    lines = [f"{rep.name}: {'ok' if rep.ok else 'FAIL'} ({len(rep.checks)} checks)" for rep in reports]
    _emit([rep.to_json() for rep in reports], args.format, "\n".join(lines))
    return EXIT_OK if all(rep.ok for rep in reports) else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# matching and invariants


def cmd_match_build(args) -> int:
    db = _db(args)
    rec1 = fano.lookup(args.fano1, db)
    rec2 = fano.lookup(args.fano2, db)
    kw = dict(radius=args.radius, max_support=args.max_support, target_span_rank=args.span_rank)
    if args.hints:
        cfg = matching.MatchingConfig.from_hint_file(json.loads(Path(args.hints).read_text()), **kw)
    else:
        cfg = matching.MatchingConfig(**kw)
    cert = matching.build_matching(rec1, rec2, cfg)
    text = cert.dumps()
    if args.out:
        Path(args.out).write_text(text)
        print(
            f"certificate for ({cert.fano1}, {cert.fano2}) written to {args.out}: "
            f"kappa1 = {cert.kappa1}, kappa2 = {cert.kappa2}, kappaK = {cert.kappaK}, "
            f"span rank {cert.span_rank}"
        )
        if cert.waived_checks:
            print(f"waived checks: {', '.join(cert.waived_checks)}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_cert(path) -> matching.MatchingCertificate:
    return matching.MatchingCertificate.loads(Path(path).read_text())


def cmd_match_verify(args) -> int:
    cert = _load_cert(args.cert)
    report = matching.verify_certificate(cert)
    lines = [f"{report.status(c):6} {c.name}: {c.detail}" for c in report.checks]
    lines.append("certificate OK" if report.ok else "certificate FAILED")
    _emit(report.to_json(), args.format, "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_CHECK


def cmd_invariants(args) -> int:
    cert = _load_cert(args.cert)
    db = _db(args)
    inv = invariants.invariants_of_M(cert, fano.lookup(cert.fano1, db), fano.lookup(cert.fano2, db))
    d = {"fano1": cert.fano1, "fano2": cert.fano2, **inv.to_json()}
    human = "\n".join(
        [
            f"pair             ({cert.fano1}, {cert.fano2})",
            f"span rank r      {inv.span_rank_used}",
            f"b1               {inv.b1}",
            f"b2               {inv.b2}   (derived formula b2(V1) + b2(V2) - r)",
            f"b3               {inv.b3}",
            f"pi1 trivial      {str(inv.pi1_trivial).lower()}",
            f"H2 torsion-free  {inv.torsion_free_H2}",
        ]
        + [f"caveat: {c}" for c in inv.caveats[1:]]
    )
    _emit(d, args.format, human)
    return EXIT_OK


def cmd_geography(args) -> int:
    cfg = invariants.GeographyConfig(
        radius=args.radius,
        max_support=args.max_support,
        span_ranks=args.span_ranks,
        cert_dir=Path(args.cert_dir) if args.cert_dir else None,
    )
    rows = invariants.geography(_db(args), cfg)
    text = invariants.geography_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
        done = [r for r in rows if r.ok]
        if done:
            print(
                f"{len(rows)} rows ({len(rows) - len(done)} without certificate), "
                f"b3 range {min(r.b3 for r in done)}..{max(r.b3 for r in done)}; written to {args.out}"
            )
        else:
            print(f"{len(rows)} rows, none certified; written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tcsum", description="Twisted connected sum lattice and topology toolkit")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def fmt(sp):
        sp.add_argument("--format", choices=("text", "json"), default="text")

    def db(sp):
        sp.add_argument("--db", help="Fano database JSON (default: built-in records)")

    lat = sub.add_parser("lattice", help="standard lattices")
    lsub = lat.add_subparsers(dest="action", metavar="action")
    lsub.required = True
    for name, fn, helptext in (
        ("show", cmd_lattice_show, "rank, parity, determinant, signature"),
        ("signature", cmd_lattice_signature, "signature (positive,negative)"),
    ):
        sp = lsub.add_parser(name, help=helptext)
        sp.add_argument("--name", default="K3", choices=lattice.STANDARD_NAMES)
        fmt(sp)
        sp.set_defaults(func=fn)
    sp = lsub.add_parser("complement", help="orthogonal complement in K3 of the given vectors")
    sp.add_argument("vectors", nargs="+", help="K3 vectors such as \"e1+2e1'\"")
    fmt(sp)
    sp.set_defaults(func=cmd_lattice_complement)

    ch = sub.add_parser("chern", help="Chern class of a complete-intersection 3-fold")
    ch.add_argument("--ambient", type=int, required=True, help="n for P^n")
    ch.add_argument("--degrees", type=_int_list, required=True, help="comma-separated degrees")
    ch.add_argument("--b2", type=int, default=1)
    fmt(ch)
    ch.set_defaults(func=cmd_chern)

    fa = sub.add_parser("fano", help="Fano database")
    fsub = fa.add_subparsers(dest="action", metavar="action")
    fsub.required = True
    sp = fsub.add_parser("list", help="list classes")
    db(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_fano_list)
    sp = fsub.add_parser("show", help="show one class")
    sp.add_argument("name")
    db(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_fano_show)
    sp = fsub.add_parser("validate", help="validate a database file")
    db(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_fano_validate)

    ma = sub.add_parser("match", help="build or verify matching certificates")
    msub = ma.add_subparsers(dest="action", metavar="action")
    msub.required = True
    sp = msub.add_parser("build", help="build a certificate")
    sp.add_argument("--fano1", required=True)
    sp.add_argument("--fano2", required=True)
    sp.add_argument("--span-rank", type=int, default=None)
    sp.add_argument("--radius", type=int, default=8)
    sp.add_argument("--max-support", type=int, default=4)
    sp.add_argument("--hints", help="JSON file with embedding hints")
    sp.add_argument("--out", help="write the certificate here instead of stdout")
    db(sp)
    sp.set_defaults(func=cmd_match_build)
    sp = msub.add_parser("verify", help="replay every check of a certificate")
    sp.add_argument("cert")
    fmt(sp)
    sp.set_defaults(func=cmd_match_verify)

    inv = sub.add_parser("invariants", help="b2, b3, pi1 of M from a certificate")
    inv.add_argument("--cert", required=True)
    db(inv)
    fmt(inv)
    inv.set_defaults(func=cmd_invariants)

    ge = sub.add_parser("geography", help="sweep all pairs of a database")
    db(ge)
    ge.add_argument("--radius", type=int, default=8)
    ge.add_argument("--max-support", type=int, default=4)
    ge.add_argument("--span-ranks", type=_int_list, default=None, help="comma-separated ranks to try")
    ge.add_argument("--out", help="CSV output path (default stdout)")
    ge.add_argument("--cert-dir", help="write one certificate per row here")
    ge.set_defaults(func=cmd_geography)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (fano.FanoSchemaError, fano.FanoValidationError, fano.FanoDuplicateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except matching.SearchExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (matching.CheckFailed, invariants.InvariantsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
