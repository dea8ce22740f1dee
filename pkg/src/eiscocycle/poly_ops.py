"""Homogeneous polynomials in n variables with generic coefficients.

Coefficients can be exact (int, Fraction, FElem) or numeric (complex,
mpmath.mpc); the algebra only uses +, * and equality with zero.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath


def compositions(g: int, n: int) -> list[tuple[int, ...]]:
    """All exponent vectors of length n summing to g, graded-lex descending."""
    if n == 1:
        return [(g,)]
    out = []
    for first in range(g, -1, -1):
        for rest in compositions(g - first, n - 1):
            out.append((first,) + rest)
    return out


def _is_zero(c) -> bool:
    if hasattr(c, "is_zero"):
        return c.is_zero()
    return c == 0


@dataclass
class HomogPoly:
    n: int
    degree: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.coeffs:
            if len(r) != self.n or sum(r) != self.degree:
                raise ValueError(f"multi-index {r} does not match n={self.n}, degree={self.degree}")

    @classmethod
    def constant(cls, n: int, c=1) -> "HomogPoly":
        return cls(n, 0, {(0,) * n: c})

    @classmethod
    def monomial(cls, r: Sequence[int], c=1) -> "HomogPoly":
        r = tuple(r)
        return cls(len(r), sum(r), {r: c})

    @classmethod
    def linear_form(cls, coeffs: Sequence) -> "HomogPoly":
        n = len(coeffs)
        out = {}
        for j, c in enumerate(coeffs):
            if not _is_zero(c):
                e = [0] * n
                e[j] = 1
                out[tuple(e)] = c
        return cls(n, 1, out)

    @classmethod
    def divided_power(cls, g: Sequence[int]) -> "HomogPoly":
        """x_1^(g_1) ... x_n^(g_n) with x^(k) = x^k / k!."""
        c = mpmath.mpf(1)
        for gi in g:
            c /= math.factorial(gi)
        return cls.monomial(g, c)

    def items(self):
        return sorted(self.coeffs.items(), key=lambda kv: kv[0], reverse=True)

    def pruned(self) -> "HomogPoly":
        return HomogPoly(self.n, self.degree, {r: c for r, c in self.coeffs.items() if not _is_zero(c)})

    def __add__(self, other: "HomogPoly") -> "HomogPoly":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        if not self.coeffs:
            return other
        if not other.coeffs:
            return self
        if other.degree != self.degree:
            raise ValueError("sum of homogeneous polynomials of different degrees")
        out = dict(self.coeffs)
        for r, c in other.coeffs.items():
            out[r] = out[r] + c if r in out else c
        return HomogPoly(self.n, self.degree, out)

    def scale(self, c) -> "HomogPoly":
        return HomogPoly(self.n, self.degree, {r: v * c for r, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, HomogPoly):
            return self.scale(other)
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        out: dict = {}
        for r1, c1 in self.coeffs.items():
            for r2, c2 in other.coeffs.items():
                r = tuple(a + b for a, b in zip(r1, r2))
                v = c1 * c2
                out[r] = out[r] + v if r in out else v
        return HomogPoly(self.n, self.degree + other.degree, out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "HomogPoly":
        if e < 0:
            raise ValueError("negative power")
        out = HomogPoly.constant(self.n, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __call__(self, x: Sequence):
        total = 0
        for r, c in self.coeffs.items():
            term = c
            for xj, rj in zip(x, r):
                if rj:
                    term = term * xj ** rj
            total = total + term
        return total

    def map_coeffs(self, fn) -> "HomogPoly":
        return HomogPoly(self.n, self.degree, {r: fn(c) for r, c in self.coeffs.items()})

    def max_abs_diff(self, other: "HomogPoly"):
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(_num(self.coeffs.get(k, 0)) - _num(other.coeffs.get(k, 0))) for k in keys), default=0.0)

    def to_record(self) -> dict:
        return {"n": self.n, "degree": self.degree,
                "coeffs": [[list(r), [float(mpmath.re(c)), float(mpmath.im(c))]] for r, c in self.items()]}


def _num(c):
    """Exact coefficients to mpmath at the working precision."""
    if hasattr(c, "to_mpc"):
        return c.to_mpc()
    if isinstance(c, Fraction):
        return mpmath.mpf(c.numerator) / c.denominator
    return mpmath.mpmathify(c)


def _column(A, j, n):
    return [A[i][j] if isinstance(A, (list, tuple)) else A[i, j] for i in range(n)]


def act(A, P: HomogPoly) -> HomogPoly:
    """The polynomial x -> P(xA) for a square matrix A (nested lists or mpmath matrix)."""
    n = P.n
    # (xA)_j = sum_i x_i A_ij : the j-th variable becomes the linear form of column j
    forms = [HomogPoly.linear_form(_column(A, j, n)) for j in range(n)]
    powers = [{0: HomogPoly.constant(n, 1)} for _ in range(n)]

    def form_power(j, e):
        if e not in powers[j]:
            powers[j][e] = form_power(j, e - 1) * forms[j]
        return powers[j][e]

    out = HomogPoly(n, P.degree, {})
    for r, c in P.coeffs.items():
        term = HomogPoly.constant(n, c)
        for j, e in enumerate(r):
            if e:
                term = term * form_power(j, e)
        out = out + term
    return out


def transpose(A, n):
    return [[A[j][i] if isinstance(A, (list, tuple)) else A[j, i] for j in range(n)] for i in range(n)]


def expand_Pr(P: HomogPoly, sigma) -> dict:
    """Coefficients P_r(sigma) of P(y sigma^T) in the variables y."""
    return act(transpose(sigma, P.n), P).coeffs


def norm_form_poly(M, variant: str = "Q", power: int = 1) -> HomogPoly:
    """(prod_i <x, column_i>)^power, columns of M (variant Q) or of M^{-T} (variant P)."""
    if isinstance(M, (list, tuple)):
        M = mpmath.matrix(M)
    n = M.rows
    if variant == "P":
        if abs(mpmath.det(M)) == 0:
            raise ZeroDivisionError("singular matrix in norm form")
        C = (M ** -1).T
    elif variant == "Q":
        C = M
    else:
        raise ValueError("variant must be 'P' or 'Q'")
    base = HomogPoly.constant(n, 1)
    for i in range(n):
        base = base * HomogPoly.linear_form([C[j, i] for j in range(n)])
    return base ** power


def divided_power_expansion(g: Sequence[int], sigma) -> dict:
    """P_r(sigma) for P = x_1^(g_1)...x_n^(g_n) by the multi-decomposition sum.

    Row i of sigma distributes g_i among the y_j as a composition (r_i1..r_in);
    each decomposition contributes prod_ij sigma_ij^{r_ij} / r_ij! and lands on
    r_j = sum_i r_ij.
    """
    n = len(g)
    out: dict = {}
    per_row = [compositions(gi, n) for gi in g]
    for choice in itertools.product(*per_row):
        term = mpmath.mpf(1)
        for i, ri in enumerate(choice):
            for j, e in enumerate(ri):
                if e:
                    s = sigma[i][j] if isinstance(sigma, (list, tuple)) else sigma[i, j]
                    term = term * s ** e / math.factorial(e)
        r = tuple(sum(choice[i][j] for i in range(n)) for j in range(n))
        out[r] = out[r] + term if r in out else term
    return out


def random_poly(n: int, degree: int, rng, scale: float = 1.0) -> HomogPoly:
    """Random complex coefficients, uniform in the square of side 2*scale."""
    out = {}
    for r in compositions(degree, n):
        out[r] = mpmath.mpc(rng.uniform(-scale, scale), rng.uniform(-scale, scale))
    return HomogPoly(n, degree, out)


def monomials(n: int, degree: int) -> Iterable[tuple[int, ...]]:
    return compositions(degree, n)
