"""Random lattice data and independent oracles shared by the test modules."""

import math
import random
from itertools import combinations

from sympy import Matrix

from tcsum import normal_forms as nf
from tcsum.lattice import GramLattice, hyperbolic_index, inner_product


def random_vector(L: GramLattice, rng: random.Random, bound: int = 4):
    return L.vector([rng.randint(-bound, bound) for _ in range(L.rank)])


def random_eichler_pair(L: GramLattice, rng: random.Random, bound: int = 3):
    """Primitive isotropic x and f orthogonal to it, in a lattice with an H summand.

    x = e + m e' + y with y in the definite part, y^2 = -2m, so (x, x) = 0 and
    the e-coordinate 1 makes x primitive.  The H summand is the first one.
    """
    e, ep = _first_hyperbolic_pair(L)
    while True:
        y = [0] * L.rank
        for i in range(L.rank):
            if i not in (e, ep) and L.gram[i][i] != 0:
                y[i] = rng.randint(-bound, bound)
        y2 = inner_product(L.vector(y), L.vector(y))
        if y2 <= 0 and y2 % 2 == 0:
            break
    x = list(y)
    x[e] += 1
    x[ep] += -y2 // 2
    x = L.vector(x)
    v = random_vector(L, rng, bound)
    unit = [0] * L.rank
    unit[ep] = 1
    f = v - inner_product(v, x) * L.vector(unit)
    return f, x


def _first_hyperbolic_pair(L):
    for i in range(L.rank - 1):
        if L.gram[i][i] == 0 and L.gram[i + 1][i + 1] == 0 and L.gram[i][i + 1] == 1:
            return i, i + 1
    raise ValueError("no hyperbolic plane in the basis")


def minors_gcd(rows):
    """gcd of maximal minors; equals 1 exactly for primitive full-rank sets."""
    k = len(rows)
    n = len(rows[0])
    g = 0
    for cols in combinations(range(n), k):
        g = math.gcd(g, int(Matrix([[r[c] for c in cols] for r in rows]).det()))
    return g


def random_unimodular(n, rng, steps=30):
    U = nf.identity(n)
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        q = rng.choice((-2, -1, 1, 2))
        U[i] = [a + q * b for a, b in zip(U[i], U[j])]
        if rng.random() < 0.2:
            U[i], U[j] = U[j], U[i]
    return U


def congruent(L: GramLattice, U):
    G = [list(r) for r in L.gram]
    return GramLattice(L.label + "'", tuple(map(tuple, nf.matmul(nf.matmul(U, G), nf.transpose(U)))))
