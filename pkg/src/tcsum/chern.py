"""Chern-class arithmetic for Fano 3-folds.

Total Chern classes of complete intersections live in the truncated ring
``Z[x]/(x^{d+1})`` where ``x`` is the hyperplane class; products of projective
spaces use the two-variable ring in :class:`BivariateSeries`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Sequence


class ChernError(ValueError):
    pass


@dataclass(frozen=True)
class TruncatedSeries:
    """Polynomial ``c0 + c1 x + ... + cd x^d`` modulo ``x^(d+1)``."""

    coeffs: tuple
    degree: int = 3

    def __post_init__(self):
        c = list(self.coeffs)[: self.degree + 1]
        c += [0] * (self.degree + 1 - len(c))
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def linear(cls, a: int, b: int, degree: int = 3) -> "TruncatedSeries":
        """The series ``a + b x``."""
        return cls((a, b), degree)

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            if other.degree != self.degree:
                raise ChernError("truncation degrees differ")
            return other
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries((other,), self.degree)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TruncatedSeries(tuple(a + b for a, b in zip(self.coeffs, o.coeffs)), self.degree)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(tuple(-a for a in self.coeffs), self.degree)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self.degree
        out = [0] * (d + 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j in range(d + 1 - i):
                    out[i + j] += a * o.coeffs[j]
        return TruncatedSeries(tuple(out), d)

    __rmul__ = __mul__

    def inverse(self) -> "TruncatedSeries":
        c0 = self.coeffs[0]
        if isinstance(c0, int) and c0 not in (1, -1):
            raise ChernError(f"series with constant term {c0} is not invertible over Z")
        if c0 == 0:
            raise ChernError("series with zero constant term is not invertible")
        inv0 = c0 if c0 in (1, -1) else Fraction(1) / c0
        out = [inv0]
        for k in range(1, self.degree + 1):
            s = sum(self.coeffs[i] * out[k - i] for i in range(1, k + 1))
            out.append(-s * inv0)
        return TruncatedSeries(tuple(out), self.degree)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = TruncatedSeries((1,), self.degree)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __getitem__(self, k: int):
        return self.coeffs[k]

    def __str__(self):
        terms = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            mono = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
            mag = abs(c)
            body = f"{mag}{mono}" if (mag != 1 or not mono) else mono
            terms.append(("-" if c < 0 else "+", body))
        if not terms:
            return "0"
        s = " ".join(f"{sgn} {b}" for sgn, b in terms)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


@dataclass(frozen=True)
class ThreefoldInvariants:
    chi: int
    b2: int
    b3: int
    minus_K_cubed: int
    genus: int


def genus_from_degree(minus_K_cubed: int) -> int:
    """Genus ``-K^3/2 + 1``; the anticanonical degree must be even and positive."""
    if minus_K_cubed <= 0:
        raise ChernError(f"-K^3 = {minus_K_cubed} is not positive")
    if minus_K_cubed % 2:
        raise ChernError(f"-K^3 = {minus_K_cubed} is odd: genus not an integer")
    return minus_K_cubed // 2 + 1


def complete_intersection_series(ambient_dim: int, degrees: Sequence[int], dim: int) -> TruncatedSeries:
    """Total Chern class ``(1+x)^(n+1) / prod (1 + d_i x)`` truncated at ``dim``."""
    if ambient_dim - len(degrees) != dim:
        raise ChernError(
            f"P^{ambient_dim} cut by {len(degrees)} hypersurfaces has dimension "
            f"{ambient_dim - len(degrees)}, expected {dim}"
        )
    if any(d < 1 for d in degrees):
        raise ChernError("hypersurface degrees must be positive")
    c = TruncatedSeries.linear(1, 1, dim) ** (ambient_dim + 1)
    for d in degrees:
        c = c * TruncatedSeries.linear(1, d, dim).inverse()
    return c


def chern_complete_intersection(ambient_dim: int, degrees: Sequence[int]):
    """Chern class and degree of a complete-intersection 3-fold in P^n."""
    series = complete_intersection_series(ambient_dim, degrees, 3)
    return series, prod(degrees)


def complete_intersection_euler(ambient_dim: int, degrees: Sequence[int]) -> int:
    dim = ambient_dim - len(degrees)
    series = complete_intersection_series(ambient_dim, degrees, dim)
    return series[dim] * prod(degrees)


def euler_and_betti(series: TruncatedSeries, degree: int, b2: int) -> ThreefoldInvariants:
    chi = series[3] * degree
    mk3 = series[1] ** 3 * degree
    return ThreefoldInvariants(
        chi=chi,
        b2=b2,
        b3=2 + 2 * b2 - chi,
        minus_K_cubed=mk3,
        genus=genus_from_degree(mk3),
    )


def curve_euler(ambient_dim: int, degrees: Sequence[int]) -> int:
    """Euler characteristic of a complete-intersection curve."""
    series = complete_intersection_series(ambient_dim, degrees, 1)
    return series[1] * prod(degrees)


def blowup_invariants(b2: int, b3: int, genus: int):
    """Betti numbers after blowing up a genus-``genus`` curve."""
    if genus < 2:
        raise ChernError(f"genus {genus} < 2 cannot come from a Fano 3-fold")
    return b2 + 1, b3 + 2 * genus


def double_cover_invariants(chi_base: int, chi_branch: int, b2: int) -> ThreefoldInvariants:
    """Double cover branched along a divisor; only ``chi``, ``b2``, ``b3`` are set.

    ``minus_K_cubed`` and ``genus`` are left at 0 since they need the branch
    degree (see :func:`double_cover_anticanonical_degree`).
    """
    chi = 2 * chi_base - chi_branch
    return ThreefoldInvariants(chi=chi, b2=b2, b3=2 + 2 * b2 - chi, minus_K_cubed=0, genus=0)


def double_cover_anticanonical_degree(base_dim: int, branch_degree: int) -> int:
    """``-K^3`` of a double cover of P^3 branched in a surface of even degree.

    ``-K = p^*((n+1) H - B/2)`` and ``(p^*H)^3 = 2``.
    """
    if base_dim != 3 or branch_degree % 2:
        raise ChernError("only double covers of P^3 branched in even degree are supported")
    k = base_dim + 1 - branch_degree // 2
    return 2 * k ** 3


@dataclass(frozen=True)
class BivariateSeries:
    """Element of ``Z[x, y] / (x^(a+1), y^(b+1))``; defaults model P^2 x P^1.

    ``terms`` maps exponent pairs ``(i, j)`` to coefficients.  The top
    monomial ``x^a y^b`` integrates to 1.
    """

    terms: tuple
    bounds: tuple = (2, 1)

    def __post_init__(self):
        a, b = self.bounds
        clean = {}
        for (i, j), c in dict(self.terms).items():
            if c and i <= a and j <= b:
                clean[(i, j)] = clean.get((i, j), 0) + c
        object.__setattr__(self, "terms", tuple(sorted((k, v) for k, v in clean.items() if v)))

    @classmethod
    def of(cls, mapping: dict, bounds=(2, 1)) -> "BivariateSeries":
        return cls(tuple(mapping.items()), bounds)

    @classmethod
    def x(cls, bounds=(2, 1)):
        return cls.of({(1, 0): 1}, bounds)

    @classmethod
    def y(cls, bounds=(2, 1)):
        return cls.of({(0, 1): 1}, bounds)

    def _coerce(self, other):
        if isinstance(other, BivariateSeries):
            return other
        if isinstance(other, int):
            return BivariateSeries.of({(0, 0): other}, self.bounds)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = dict(self.terms)
        for k, v in o.terms:
            d[k] = d.get(k, 0) + v
        return BivariateSeries.of(d, self.bounds)

    __radd__ = __add__

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = {}
        for (i, j), u in self.terms:
            for (k, l), v in o.terms:
                d[(i + k, j + l)] = d.get((i + k, j + l), 0) + u * v
        return BivariateSeries.of(d, self.bounds)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = BivariateSeries.of({(0, 0): 1}, self.bounds)
        for _ in range(n):
            out = out * self
        return out

    def degree_part(self, k: int) -> "BivariateSeries":
        return BivariateSeries.of({e: c for e, c in self.terms if sum(e) == k}, self.bounds)

    def integrate(self) -> int:
        """Coefficient of the top monomial ``x^a y^b``."""
        return dict(self.terms).get(tuple(self.bounds), 0)


def product_chern_class(n1: int = 2, n2: int = 1) -> BivariateSeries:
    """Total Chern class ``(1+x)^(n1+1) (1+y)^(n2+1)`` of ``P^n1 x P^n2``."""
    b = (n1, n2)
    one = BivariateSeries.of({(0, 0): 1}, b)
    return (one + BivariateSeries.x(b)) ** (n1 + 1) * (one + BivariateSeries.y(b)) ** (n2 + 1)


def product_invariants(n1: int = 2, n2: int = 1) -> ThreefoldInvariants:
    """Invariants of the 3-fold ``P^n1 x P^n2`` (n1 + n2 = 3)."""
    if n1 + n2 != 3:
        raise ChernError("product is not a 3-fold")
    c = product_chern_class(n1, n2)
    c1 = c.degree_part(1)
    chi = c.degree_part(3).integrate()
    mk3 = (c1 ** 3).integrate()
    b2 = 2
    return ThreefoldInvariants(chi, b2, 2 + 2 * b2 - chi, mk3, genus_from_degree(mk3))


def restricted_gram(divisor: BivariateSeries, classes: Sequence[BivariateSeries]):
    """Intersection form ``(a . b . D)`` of divisor classes restricted to ``D``."""
    return tuple(tuple((a * b * divisor).integrate() for b in classes) for a in classes)
