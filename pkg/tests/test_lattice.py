import random
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import congruent, minors_gcd, random_eichler_pair, random_unimodular, random_vector
from tcsum.lattice import (
    E8_CARTAN,
    EichlerTransform,
    GramLattice,
    LatticeError,
    Sublattice,
    direct_sum,
    eichler_transform,
    format_k3_vector,
    inner_product,
    is_primitive_sublattice,
    is_primitive_vector,
    move_into_rank2,
    orthogonal_complement,
    parse_k3_vector,
    reduced_basis,
    saturation,
    signature,
    span,
    span_rank,
    standard_lattice,
)


def v(text):
    return parse_k3_vector(text)


def test_k3_lattice(K3):
    assert K3.rank == 22
    assert K3.is_even and K3.is_unimodular
    assert K3.determinant == -1
    assert tuple(signature(K3)) == (3, 19, 0)


def test_standard_lattices():
    assert tuple(standard_lattice("L0").signature()) == (2, 18, 0)
    assert tuple(standard_lattice("H").signature()) == (1, 1, 0)
    E8 = standard_lattice("E8")
    assert E8.determinant == 1 and tuple(E8.signature()) == (8, 0, 0)
    assert tuple(standard_lattice("minusE8").signature()) == (0, 8, 0)
    with pytest.raises(LatticeError, match="valid names"):
        standard_lattice("E7")


def test_e8_cartan_is_bourbaki():
    # node 2 hangs off node 4; the chain is 1-3-4-5-6-7-8
    edges = {(i + 1, j + 1) for i in range(8) for j in range(i + 1, 8) if E8_CARTAN[i][j]}
    assert edges == {(1, 3), (3, 4), (2, 4), (4, 5), (5, 6), (6, 7), (7, 8)}


def test_gram_lattice_validation():
    with pytest.raises(LatticeError):
        GramLattice("bad", ((0, 1), (2, 0)))
    with pytest.raises(LatticeError):
        GramLattice("bad", ((1, 2),))
    odd = GramLattice("odd", ((1,),))
    assert not odd.is_even and odd.is_unimodular
    deg = GramLattice("deg", ((0, 0), (0, 2)))
    assert tuple(signature(deg)) == (1, 0, 1)


def test_signature_with_zero_diagonal():
    assert tuple(signature(((0, 1, 0), (1, 0, 0), (0, 0, -2)))) == (1, 2, 0)
    assert tuple(signature(((0, 3), (3, 2)))) == (1, 1, 0)


def test_rigid_example_pairings():
    k1 = v("e1+4e1'")
    f2 = v("e1-e1'+e2-e2'+e3+2e3'")
    assert k1.square() == 8
    assert inner_product(k1, f2) == 3
    assert f2.square() == 0
    assert inner_product(v("e1+4e'1"), v("e1-e'1+e2-e'2+e3+2e'3")) == 3


def test_parse_and_format_roundtrip(K3):
    for text in ("e1+4e'1", "a1-2b8+e'3", "-e2+3e'3", "2a4+e1"):
        assert format_k3_vector(parse_k3_vector(text)) == text
    assert parse_k3_vector("e1'") == parse_k3_vector("e'1")
    assert format_k3_vector(K3.zero()) == "0"
    for bad in ("", "e4", "x1", "e1e2", "3"):
        with pytest.raises(LatticeError):
            parse_k3_vector(bad)


def test_vector_arithmetic_and_ambient_checks(K3):
    a, b = v("e1"), v("e1'")
    assert (a + b).square() == 2
    assert (a - b).square() == -2
    assert (3 * a).coords[16] == 3 and (-a).coords[16] == -1
    H = standard_lattice("H")
    with pytest.raises(LatticeError):
        inner_product(a, H.vector((1, 0)))
    with pytest.raises(LatticeError):
        K3.vector((1, 2))


def test_primitivity():
    assert is_primitive_vector(v("e1+2e1'"))
    assert not is_primitive_vector(v("2e1+4e1'"))
    with pytest.raises(LatticeError):
        is_primitive_vector(standard_lattice("K3").zero())


def test_sublattice_primitivity_exhaustive_against_minors():
    L = direct_sum("HH", ((0, 1), (1, 0)), ((0, 1), (1, 0)))
    box = range(-2, 3)
    vecs = [c for c in product(box, repeat=4) if any(c)]
    rng = random.Random(7)
    for c in vecs:
        assert is_primitive_sublattice(Sublattice.from_rows(L, [c])) == (minors_gcd([c]) == 1)
    for _ in range(400):
        a, b = rng.sample(vecs, 2)
        if span_rank(L, [L.vector(a), L.vector(b)]) < 2:
            continue
        S = Sublattice.from_rows(L, [a, b])
        g = minors_gcd([a, b])
        assert is_primitive_sublattice(S) == (g == 1)
        sat = saturation(S)
        assert sat.rank == 2 and minors_gcd(sat.matrix) == 1
        assert all(sat.contains(w) for w in S.basis)
        # index of S in its saturation is the gcd of maximal minors
        assert g == minors_gcd(S.matrix) // minors_gcd(sat.matrix)


def test_span_and_dependent_basis(K3):
    S = span(K3, [v("e1"), v("e1'"), v("e1+e1'")])
    assert S.rank == 2
    with pytest.raises(LatticeError):
        Sublattice(K3, (v("e1"), v("2e1")))
    assert S.contains(v("3e1-e1'")) and not S.contains(v("e2"))


def test_orthogonal_complement(K3):
    C = orthogonal_complement(span(K3, [v("e1+2e1'")]))
    assert C.rank == 21
    assert all(inner_product(w, v("e1+2e1'")) == 0 for w in C.basis)
    assert is_primitive_sublattice(C)
    assert [format_k3_vector(w) for w in C.basis][:4] == ["e2", "e'2", "e3", "e'3"]
    assert tuple(signature(C.as_lattice())) == (2, 19, 0)
    full = orthogonal_complement(Sublattice.from_rows(K3, [[int(i == j) for j in range(22)] for i in range(22)]))
    assert full.rank == 0
    deg = GramLattice("deg", ((0, 0), (0, 2)))
    with pytest.raises(LatticeError):
        orthogonal_complement(Sublattice.from_rows(deg, [[0, 1]]))


def test_reduced_basis_is_deterministic(K3):
    rows = [[1, 2, 0], [0, 1, 1], [1, 0, 1]]
    L = GramLattice("Z3", ((2, 0, 0), (0, 2, 0), (0, 0, 2)))
    r1 = reduced_basis(L, rows)
    assert r1 == reduced_basis(L, list(reversed(rows)))
    assert Sublattice.from_rows(L, r1).same_span(Sublattice.from_rows(L, rows))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_eichler_is_isometry(seed):
    rng = random.Random(seed)
    L = standard_lattice(rng.choice(["K3", "L0", "H"]))
    f, x = random_eichler_pair(L, rng)
    T = EichlerTransform(f, x)
    for _ in range(5):
        a, b = random_vector(L, rng), random_vector(L, rng)
        assert inner_product(T(a), T(b)) == inner_product(a, b)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_eichler_fixes_orthogonal_vectors(seed):
    rng = random.Random(seed)
    L = standard_lattice("K3")
    f, x = random_eichler_pair(L, rng)
    w = random_vector(L, rng)
    # project w into the integer complement of {f, x}
    C = orthogonal_complement(span(L, [f, x]))
    u = L.zero()
    for b in C.basis[:4]:
        u = u + rng.randint(-3, 3) * b
    assert eichler_transform(f, x, u) == u
    assert EichlerTransform(f, x).fixes(u)
    assert inner_product(eichler_transform(f, x, w), eichler_transform(f, x, w)) == w.square()


def test_eichler_preconditions():
    with pytest.raises(LatticeError, match="isotropic"):
        EichlerTransform(v("a1"), v("e1+e1'"))
    with pytest.raises(LatticeError, match=r"\(f,x\) = 0"):
        EichlerTransform(v("e1'"), v("e1"))
    with pytest.raises(LatticeError, match="primitive"):
        EichlerTransform(v("a1"), v("2e1"))
    odd = GramLattice("odd", ((1, 0, 0), (0, 0, 1), (0, 1, 0)))
    with pytest.raises(LatticeError, match="even"):
        EichlerTransform(odd.vector((1, 0, 0)), odd.vector((0, 1, 0)))


def test_move_into_rank2():
    x, xp = v("e1"), v("e1'")
    S2 = Sublattice(x.ambient, (x, xp))
    f = v("a1+e2")
    e = 5 * x + 2 * xp + 2 * f
    image, T = move_into_rank2(e, S2, f)
    assert S2.contains(image)
    assert image.square() == e.square()
    # closed form a + (x,x') b (f,f)/2 ... with (x,x') = 1
    assert image == (5 + 2 * f.square() // 2) * x + 2 * xp
    assert T(e) == image
    with pytest.raises(LatticeError):
        move_into_rank2(e + v("a3"), S2, f)
    with pytest.raises(LatticeError):
        move_into_rank2(e, S2, v("e1"))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_signature_invariant_under_basis_change(seed):
    rng = random.Random(seed)
    L = standard_lattice(rng.choice(["K3", "L0", "H", "E8"]))
    U = random_unimodular(L.rank, rng, steps=15)
    assert tuple(signature(congruent(L, U))) == tuple(signature(L))


def test_json_roundtrip(K3):
    assert GramLattice.from_json(K3.to_json()) == K3
    assert v("e1+4e1'").to_json()["coords"][17] == 4
