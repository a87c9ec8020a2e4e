"""Integer normal forms with explicit unimodular transforms.

Matrices are plain lists of lists of Python ints.  Every routine returns
fresh lists and leaves its input alone.

Pivot rule everywhere: smallest nonzero absolute value, ties broken by the
lowest row index (then lowest column index).
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

Matrix = List[List[int]]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def copy_matrix(M: Sequence[Sequence[int]]) -> Matrix:
    return [[int(a) for a in row] for row in M]


def transpose(M: Sequence[Sequence[int]], ncols: int | None = None) -> Matrix:
    if not M:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*M)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Matrix:
    if not A:
        return []
    Bt = list(zip(*B)) if B else []
    inner = len(B)
    if inner == 0:
        return [[0] * 0 for _ in A]
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, x, y) with x*a + y*b == g == gcd(a, b) >= 0."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _swap_rows(M: Matrix, i: int, j: int) -> None:
    M[i], M[j] = M[j], M[i]


def _swap_cols(M: Matrix, i: int, j: int) -> None:
    for row in M:
        row[i], row[j] = row[j], row[i]


def _add_row(M: Matrix, dst: int, src: int, q: int) -> None:
    # row_dst += q * row_src
    if q:
        rs = M[src]
        rd = M[dst]
        for k in range(len(rd)):
            rd[k] += q * rs[k]


def _add_col(M: Matrix, dst: int, src: int, q: int) -> None:
    if q:
        for row in M:
            row[dst] += q * row[src]


def smith_normal_form(M: Sequence[Sequence[int]]) -> Tuple[Matrix, Matrix, Matrix]:
    """Smith normal form ``D = U * M * V`` with ``U``, ``V`` unimodular.

    The diagonal of ``D`` is non-negative and each entry divides the next.
    """
    A = copy_matrix(M)
    m = len(A)
    n = len(A[0]) if m else 0
    U = identity(m)
    V = identity(n)
    t = 0
    while t < min(m, n):
        pivot = _smallest_entry(A, t, range(t, m), range(t, n))
        if pivot is None:
            break
        i, j = pivot
        if i != t:
            _swap_rows(A, i, t)
            _swap_rows(U, i, t)
        if j != t:
            _swap_cols(A, j, t)
            _swap_cols(V, j, t)
        while True:
            done = True
            p = A[t][t]
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // p
                    _add_row(A, i, t, -q)
                    _add_row(U, i, t, -q)
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // p
                    _add_col(A, j, t, -q)
                    _add_col(V, j, t, -q)
                    if A[t][j]:
                        done = False
            if not done:
                # a smaller remainder sits in row t or column t; bring it to the pivot
                cands = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
                cands += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cands)
                if i != t:
                    _swap_rows(A, i, t)
                    _swap_rows(U, i, t)
                if j != t:
                    _swap_cols(A, j, t)
                    _swap_cols(V, j, t)
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            _add_row(A, t, bad, 1)
            _add_row(U, t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    return A, U, V


def _smallest_entry(A: Matrix, t, rows, cols):
    best = None
    for i in rows:
        row = A[i]
        for j in cols:
            a = row[j]
            if a and (best is None or abs(a) < best[0]):
                best = (abs(a), i, j)
    return None if best is None else (best[1], best[2])


def invariant_factors(M: Sequence[Sequence[int]]) -> List[int]:
    """Nonzero diagonal entries of the Smith normal form."""
    D, _, _ = smith_normal_form(M)
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0)) if D[i][i]]


def hermite_normal_form(M: Sequence[Sequence[int]]) -> Tuple[Matrix, Matrix]:
    """Row-style Hermite normal form ``H = U * M``.

    ``H`` is in row echelon form with positive pivots, entries above each
    pivot reduced into ``[0, pivot)``; zero rows come last.
    """
    A = copy_matrix(M)
    m = len(A)
    n = len(A[0]) if m else 0
    U = identity(m)
    r = 0
    pivots = []
    for c in range(n):
        if r >= m:
            break
        while True:
            nz = [(abs(A[i][c]), i) for i in range(r, m) if A[i][c]]
            if not nz:
                break
            _, i = min(nz)
            if i != r:
                _swap_rows(A, i, r)
                _swap_rows(U, i, r)
            p = A[r][c]
            clean = True
            for i in range(r + 1, m):
                if A[i][c]:
                    q = A[i][c] // p
                    _add_row(A, i, r, -q)
                    _add_row(U, i, r, -q)
                    if A[i][c]:
                        clean = False
            if clean:
                break
        if not any(A[i][c] for i in range(r, m)):
            continue
        if A[r][c] < 0:
            A[r] = [-a for a in A[r]]
            U[r] = [-a for a in U[r]]
        p = A[r][c]
        for i in range(r):
            q = A[i][c] // p
            _add_row(A, i, r, -q)
            _add_row(U, i, r, -q)
        pivots.append(c)
        r += 1
    return A, U


def rank(M: Sequence[Sequence[int]]) -> int:
    H, _ = hermite_normal_form(M)
    return sum(1 for row in H if any(row))


def integer_kernel(M: Sequence[Sequence[int]], ncols: int | None = None) -> Matrix:
    """Basis (as rows) of ``{x in Z^n : M x = 0}``.

    The returned lattice is saturated in ``Z^n`` since it comes from rows of
    a unimodular transform.
    """
    n = ncols if ncols is not None else (len(M[0]) if M else 0)
    if not M:
        return identity(n)
    Mt = transpose(M)
    H, U = hermite_normal_form(Mt)
    return [U[i] for i in range(n) if not any(H[i])]


def unimodular_inverse(U: Sequence[Sequence[int]]) -> Matrix:
    """Inverse of a unimodular integer matrix (exact)."""
    # the reduced HNF of a unimodular matrix is the identity, so T = U^{-1}
    H, T = hermite_normal_form(U)
    if H != identity(len(U)):
        raise ValueError("matrix is not unimodular")
    return T


def complete_to_basis(v: Sequence[int]) -> Matrix:
    """Unimodular matrix whose first row is the primitive vector ``v``."""
    D, U, V = smith_normal_form([list(v)])
    if not D or D[0][0] != 1:
        raise ValueError(f"vector {tuple(v)} is not primitive")
    B = unimodular_inverse(V)
    if U[0][0] == -1:
        B[0] = [-a for a in B[0]]
    assert tuple(B[0]) == tuple(v)
    return B


def determinant(M: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant via fraction-free (Bareiss) elimination."""
    A = copy_matrix(M)
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k]), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]
