"""Deterministic bounded enumeration of lattice vectors.

Candidates are ``offset + sum c_i b_i`` over a basis ``b_i``.  Coefficient
vectors are visited shell by shell in increasing L1 norm ``|c|_1`` (up to
``radius``), and inside a shell by support size, then support (lexicographic
index tuple), then magnitudes (lexicographic), then signs (``+`` before
``-``).  When the predicate is invariant under ``v -> -v`` and there is no
offset, only coefficient vectors whose first nonzero entry is positive are
visited.  The first accepted candidate is therefore reproducible.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

BATCH_ROWS = 1 << 16


def compositions(total: int, parts: int) -> list:
    """Ordered tuples of ``parts`` positive ints summing to ``total`` (lex order)."""
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def coefficient_batches(
    dim: int, radius: int, max_support: int, symmetric: bool, include_zero: bool
) -> Iterator[tuple]:
    """Yield ``(shell, idx, vals)``: row ``r`` is ``sum vals[r,a] e_{idx[r,a]}``.

    Both arrays are (N, k) int64 for the support size ``k`` of the batch.
    """
    if include_zero:
        yield 0, np.zeros((1, 0), dtype=np.int64), np.zeros((1, 0), dtype=np.int64)
    for s in range(1, radius + 1):
        for k in range(1, min(s, max_support, dim) + 1):
            comps = np.array(compositions(s, k), dtype=np.int64)
            if symmetric:
                signs = np.array([(1,) + t for t in product((1, -1), repeat=k - 1)], dtype=np.int64)
            else:
                signs = np.array(list(product((1, -1), repeat=k)), dtype=np.int64)
            vals = (comps[:, None, :] * signs[None, :, :]).reshape(-1, k)
            per_support = len(vals)
            chunk = max(1, BATCH_ROWS // per_support)
            supports = combinations(range(dim), k)
            while True:
                block = list(_take(supports, chunk))
                if not block:
                    break
                idx = np.repeat(np.array(block, dtype=np.int64), per_support, axis=0)
                yield s, idx, np.tile(vals, (len(block), 1))


def _take(it, n):
    for _ in range(n):
        try:
            yield next(it)
        except StopIteration:
            return


def first_match(
    basis: Sequence[Sequence[int]],
    gram: Sequence[Sequence[int]],
    square: int,
    exact: Callable[[tuple], bool],
    radius: int,
    max_support: int = 4,
    offset: Optional[Sequence[int]] = None,
    symmetric: bool = True,
):
    """Return ``(vector, shell)`` for the first accepted candidate, else ``None``.

    Candidates are first filtered by ``(v, v) = square`` under ``gram``,
    evaluated on the sparse coefficient form; ``exact`` then gets the
    survivors one at a time, in enumeration order.
    """
    off = None if offset is None else np.array(offset, dtype=np.int64)
    if len(basis) == 0:
        if off is not None:
            v = tuple(int(a) for a in off)
            if int(off @ np.array(gram, dtype=np.int64) @ off) == square and exact(v):
                return v, 0
        return None
    B = np.array(basis, dtype=np.int64)
    G = np.array(gram, dtype=np.int64)
    Q = B @ G @ B.T
    lin = np.zeros(len(B), dtype=np.int64) if off is None else 2 * (B @ G @ off)
    const = 0 if off is None else int(off @ G @ off)
    for shell, idx, vals in coefficient_batches(
        len(B), radius, max_support, symmetric and off is None, off is not None
    ):
        k = idx.shape[1]
        sq = np.full(len(idx), const, dtype=np.int64)
        for a in range(k):
            sq += vals[:, a] * lin[idx[:, a]]
            for b in range(k):
                sq += vals[:, a] * vals[:, b] * Q[idx[:, a], idx[:, b]]
        for r in np.flatnonzero(sq == square):
            vec = vals[r] @ B[idx[r]] if k else np.zeros(B.shape[1], dtype=np.int64)
            if off is not None:
                vec = vec + off
            v = tuple(int(a) for a in vec)
            if exact(v):
                return v, shell
    return None


def babai_reduce(v: Sequence[int], basis: Sequence[Sequence[int]]) -> list:
    """Shorten ``v`` modulo the lattice spanned by ``basis`` (nearest plane)."""
    if not basis:
        return list(v)
    gs = []
    for b in basis:
        w = [Fraction(a) for a in b]
        for g, gg in gs:
            mu = sum(x * y for x, y in zip(b, g)) / gg
            w = [x - mu * y for x, y in zip(w, g)]
        gs.append((w, sum(x * x for x in w)))
    out = [int(a) for a in v]
    for b, (g, gg) in zip(reversed(basis), reversed(gs)):
        c = round(sum(x * y for x, y in zip(out, g)) / gg)
        if c:
            out = [x - c * y for x, y in zip(out, b)]
    return out
