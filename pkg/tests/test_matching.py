import json
import random
from dataclasses import replace

import pytest

from helpers import random_eichler_pair
from tcsum.lattice import (
    EichlerTransform,
    inner_product,
    is_primitive_sublattice,
    parse_k3_vector,
    span,
    span_rank,
    standard_lattice,
)
from tcsum.matching import (
    CheckFailed,
    Embedding,
    MatchingCertificate,
    MatchingConfig,
    MatchingError,
    SearchExhausted,
    build_matching,
    embed_polarization,
    embed_rank1,
    embedding_from_hint,
    find_orthogonal_positive,
    verify_certificate,
)


def v(text):
    return parse_k3_vector(text)


def test_embed_rank1():
    assert embed_rank1(8) == v("e1+4e1'")
    assert embed_rank1(4) == v("e1+2e1'")
    assert embed_rank1(2) == v("e1+e1'")
    assert embed_rank1(6, 3) == v("e3+3e3'")
    for sq in (4, 8, 22):
        assert embed_rank1(sq).square() == sq
    for bad in (0, -2, 3):
        with pytest.raises(MatchingError):
            embed_rank1(bad)


def test_find_orthogonal_positive(K3):
    assert find_orthogonal_positive(span(K3, [v("e1+2e1'"), v("e2+2e2'")]), 2) == v("e3+e3'")
    w = find_orthogonal_positive(span(K3, [v("e1")]), 2)
    assert w == v("e2+e2'") and inner_product(w, v("e1")) == 0
    full = span(K3, [K3.basis_vector(i) for i in range(22)])
    with pytest.raises(MatchingError, match="complement has no positive part"):
        find_orthogonal_positive(full, 2)
    with pytest.raises(SearchExhausted, match="within radius 1"):
        find_orthogonal_positive(span(K3, [v("e1+2e1'")]), 40, radius=1)


def test_embed_polarization_rank1_and_rank2(db):
    emb = embed_polarization(db["P3"])
    assert emb.images() == [v("e1+2e1'")]
    emb2 = embed_polarization(db["P2xP1"])
    assert emb2.source.gram == ((0, 3), (3, 2))
    assert all(c.ok for c in emb2.checks())
    assert emb2.apply(db["P2xP1"].kahler_vector) == v("e1+4e1'")
    reserved = embed_polarization(db["P3"], reserved={1})
    assert reserved.images() == [v("e2+2e2'")]


def test_hint_from_rigid_example(db, rank3_hints):
    emb = embedding_from_hint(db["P2xP1"], rank3_hints["fano1"])
    f1, f2 = emb.apply((1, 1)), emb.apply((1, 0))
    assert f1 == v("e1+4e1'") and f2 == v("e1-e1'+e2-e2'+e3+2e3'")
    gram = [[inner_product(a, b) for b in (f1, f2)] for a in (f1, f2)]
    assert gram == [[8, 3], [3, 0]]


def test_bad_hints(db):
    hint = {"basis": [[1, 1], [1, 0]], "images": ["e1+4e1'", "2e2"]}
    with pytest.raises(MatchingError, match="primitive"):
        embedding_from_hint(db["P2xP1"], hint)
    hint = {"basis": [[1, 1], [1, 0]], "images": ["e1+4e1'", "e2"]}
    with pytest.raises(MatchingError, match=r"Gram entry \(0,1\)"):
        embedding_from_hint(db["P2xP1"], hint)
    with pytest.raises(MatchingError, match="not a basis"):
        embedding_from_hint(db["P2xP1"], {"basis": [[1, 1], [1, -1]], "images": ["e1", "e2"]})


def test_higher_rank_needs_hint(db):
    from tcsum.fano import PolarizedFanoClass
    from tcsum.lattice import GramLattice

    rec = replace(
        db["P2xP1"],
        name="R3",
        b2=3,
        polarization=GramLattice("S(R3)", ((2, 1, 0), (1, 0, 0), (0, 0, -2))),
        kahler_vector=(1, 0, 0),
    )
    assert isinstance(rec, PolarizedFanoClass)
    with pytest.raises(MatchingError, match="hint"):
        embed_polarization(rec)


def test_p3_p3(db):
    cert = build_matching(db["P3"], db["P3"])
    assert cert.kappa1 == v("e1+2e1'")
    assert cert.kappa2 == v("e2+2e2'")
    assert cert.kappaK == v("e3+e3'")
    assert cert.span_rank == 2
    assert all(c.ok for c in cert.checks)
    assert verify_certificate(cert).ok


def test_p2xp1_target_rank4(db):
    cert = build_matching(db["P2xP1"], db["P2xP1"], MatchingConfig(target_span_rank=4))
    assert cert.span_rank == 4
    assert span_rank(cert.kappa1.ambient, cert.emb1.images() + cert.emb2.images()) == 4
    assert verify_certificate(cert).ok


def test_rank3_is_unreachable_under_strict_orthogonality(db):
    with pytest.raises(SearchExhausted, match="radius 4"):
        build_matching(db["P2xP1"], db["P2xP1"], MatchingConfig(target_span_rank=3, radius=4))


def test_rank3_hints_with_waiver(db, rank3_hints):
    cfg = MatchingConfig.from_hint_file(rank3_hints)
    cert = build_matching(db["P2xP1"], db["P2xP1"], cfg)
    assert cert.span_rank == 3
    assert cert.kappa1 == v("e1+4e1'") and cert.kappa2 == v("e2+4e2'")
    rep = verify_certificate(cert)
    assert rep.ok
    assert {c.name for c in rep.waived_failures} == {"kappa2_perp_image1", "kappa1_perp_image2"}
    # the other requirements still hold
    for name in ("kappa_orthogonal", "kappa_pair_primitive", "kappaK_perp_image1", "kappaK_perp_image2"):
        assert rep.get(name).ok
    strict = MatchingConfig(hints={k: rank3_hints[k] for k in ("fano1", "fano2")})
    with pytest.raises(CheckFailed, match="kappa2_perp_image1"):
        build_matching(db["P2xP1"], db["P2xP1"], strict)


def test_unknown_waiver_rejected():
    with pytest.raises(MatchingError, match="unknown check"):
        MatchingConfig(waive={"nope"})


def test_tampered_certificates(db):
    cert = build_matching(db["P3"], db["P3"])
    doubled = replace(cert, kappa2=2 * cert.kappa2)
    rep = verify_certificate(doubled)
    assert not rep.ok and not rep.get("kappa2_primitive").ok
    swapped = replace(cert, kappaK=cert.kappa1)
    rep = verify_certificate(swapped)
    assert not rep.get("kappaK_perp_image1").ok
    wrong_rank = replace(cert, span_rank=3)
    assert not verify_certificate(wrong_rank).get("span_rank").ok


def test_json_roundtrip_and_determinism(db):
    a = build_matching(db["P3"], db["P2xP1"])
    b = build_matching(db["P3"], db["P2xP1"])
    assert a.dumps() == b.dumps()
    back = MatchingCertificate.loads(a.dumps())
    assert back == a and verify_certificate(back).ok
    doc = json.loads(a.dumps())
    doc["kappa1"] = doc["kappa1"][:5]
    with pytest.raises(MatchingError, match="schema"):
        MatchingCertificate.from_json(doc)


@pytest.mark.parametrize("pair", [("P3", "P3"), ("P3", "P2xP1"), ("X22", "X8")])
def test_certificate_invariants(db, pair):
    r1, r2 = db[pair[0]], db[pair[1]]
    cert = build_matching(r1, r2)
    assert inner_product(cert.kappa1, cert.kappa2) == 0
    assert inner_product(cert.kappa1, cert.kappaK) == 0 == inner_product(cert.kappa2, cert.kappaK)
    assert cert.squares[:2] == (r1.kahler_square, r2.kahler_square)
    assert cert.squares[2] > 0
    assert cert.span_rank >= max(r1.b2, r2.b2) + 1
    assert all(lam * s == cert.squares[2] for lam, s in zip(cert.scaling_ratios, cert.squares))
    assert is_primitive_sublattice(span(cert.kappa1.ambient, [cert.kappa1, cert.kappa2]))
    if r1.b2 == r2.b2 == 1:
        assert cert.span_rank == 2


def test_isometry_preserves_certificates(db, rank3_hints):
    rng = random.Random(11)
    K3 = standard_lattice("K3")
    certs = [
        build_matching(db["P3"], db["P3"]),
        build_matching(db["P2xP1"], db["P2xP1"], MatchingConfig(target_span_rank=4)),
        build_matching(db["P2xP1"], db["P2xP1"], MatchingConfig.from_hint_file(rank3_hints)),
    ]
    for cert in certs:
        for _ in range(5):
            T = EichlerTransform(*random_eichler_pair(K3, rng))
            moved = cert.transformed(T)
            rep = verify_certificate(moved)
            assert rep.ok
            assert [c.ok for c in rep.checks] == [c.ok for c in verify_certificate(cert).checks]


def test_embedding_validation(K3):
    from tcsum.lattice import GramLattice

    S = GramLattice("S", ((4,),))
    with pytest.raises(Exception):
        Embedding(S, K3, ((1,),))
    emb = Embedding.from_images(S, [v("e1+2e1'")])
    assert Embedding.from_json(emb.to_json()) == emb
