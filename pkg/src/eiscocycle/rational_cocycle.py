"""The rational function f(sigma)(P, x) and the homogeneous cocycle psi with
the smallest-index column selection rule.

f(sigma)(P, x) = det(sigma) * sum_r P_r(sigma) * prod_j r_j! / <x, sigma_j>^(1 + r_j)

where P(y sigma^T) = sum_r P_r(sigma) y^r.  This is P(-d/dx) applied to
det(sigma) / prod_j <x, sigma_j>.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp

from .exact_field import FElem, f_det, f_solve, fone, fzero, mpq
from .poly_ops import HomogPoly, expand_Pr, transpose


# ---------------------------------------------------------------------------
# exact matrices over F

@dataclass(frozen=True)
class FMatrix:
    rows: tuple

    @classmethod
    def of(cls, rows, D: int) -> "FMatrix":
        return cls(tuple(tuple(FElem.of(v, D) for v in r) for r in rows))

    @classmethod
    def identity(cls, n: int, D: int) -> "FMatrix":
        return cls(tuple(tuple(fone(D) if i == j else fzero(D) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def D(self) -> int:
        return self.rows[0][0].D

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    @property
    def T(self) -> "FMatrix":
        return FMatrix(tuple(self.col(j) for j in range(self.n)))

    def __matmul__(self, other: "FMatrix") -> "FMatrix":
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = fzero(self.D)
                for t in range(n):
                    acc = acc + self.rows[i][t] * other.rows[t][j]
                row.append(acc)
            out.append(tuple(row))
        return FMatrix(tuple(out))

    def det(self) -> FElem:
        return f_det(self.rows, self.D)

    def inverse(self) -> "FMatrix":
        n = self.n
        cols = []
        for j in range(n):
            e = [fone(self.D) if i == j else fzero(self.D) for i in range(n)]
            cols.append(f_solve(self.rows, e, self.D))
        return FMatrix(tuple(tuple(cols[j][i] for j in range(n)) for i in range(n)))

    def __pow__(self, e: int) -> "FMatrix":
        if e < 0:
            return self.inverse() ** (-e)
        out = FMatrix.identity(self.n, self.D)
        base = self
        while e:
            if e & 1:
                out = out @ base
            base = base @ base
            e >>= 1
        return out

    def to_mpmath(self, prec: int = 128) -> mpmath.matrix:
        with mp.workprec(prec + 10):
            return mpmath.matrix([[v.to_mpc() for v in r] for r in self.rows])

    def to_numpy(self) -> np.ndarray:
        return np.array([[complex(v) for v in r] for r in self.rows])

    def height(self) -> int:
        return max(v.height() for r in self.rows for v in r)

    def to_json(self):
        return [[v.to_json() for v in r] for r in self.rows]


def row_times(x: Sequence[FElem], A: FMatrix) -> list[FElem]:
    """Row vector x times A, exactly."""
    n = A.n
    out = []
    for j in range(n):
        acc = fzero(A.D)
        for i in range(n):
            acc = acc + x[i] * A.rows[i][j]
        out.append(acc)
    return out


def pairing(x: Sequence, col: Sequence):
    acc = 0
    for a, b in zip(x, col):
        acc = acc + a * b
    return acc


# ---------------------------------------------------------------------------
# generic helpers

def _is_exact(v) -> bool:
    return isinstance(v, (FElem, Fraction, int))


def _num(v):
    if isinstance(v, FElem):
        return v.to_mpc()
    if isinstance(v, Fraction):
        return mpq(v)
    if isinstance(v, (int, float)):
        return mpmath.mpf(v)
    if isinstance(v, complex):
        return mpmath.mpc(v)
    return v


def _leibniz_det(A, n):
    total = 0
    for perm in itertools.permutations(range(n)):
        sgn = _perm_sign(perm)
        term = 1
        for i, j in enumerate(perm):
            term = term * A[i][j]
        total = total + term if sgn > 0 else total - term
    return total


def _perm_sign(perm) -> int:
    perm = list(perm)
    sgn = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sgn = -sgn
    return sgn


def _as_rows(sigma, n):
    if isinstance(sigma, FMatrix):
        return [list(r) for r in sigma.rows]
    if isinstance(sigma, (list, tuple)):
        return [list(r) for r in sigma]
    return [[sigma[i, j] for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# f and psi

def eval_f(sigma, P: HomogPoly, x: Sequence, prec: int = 128):
    """f(sigma)(P, x).  Exact when sigma, x and the coefficients of P are exact,
    otherwise evaluated with mpmath at `prec` bits (pairings and det are still
    formed exactly when their inputs are)."""
    n = len(x)
    rows = _as_rows(sigma, n)
    exact_inputs = all(_is_exact(v) for r in rows for v in r) and all(_is_exact(v) for v in x)
    exact_P = all(_is_exact(c) for c in P.coeffs.values())

    if exact_inputs:
        det = _leibniz_det(rows, n)
        L = [pairing(x, [rows[i][j] for i in range(n)]) for j in range(n)]
        if (det.is_zero() if isinstance(det, FElem) else det == 0):
            return det if exact_P else mpmath.mpc(0)
        for j, Lj in enumerate(L):
            if (Lj.is_zero() if isinstance(Lj, FElem) else Lj == 0):
                raise ZeroDivisionError(f"pairing <x, sigma_{j + 1}> vanishes")
        if exact_P:
            Pr = expand_Pr(P, rows)
            total = 0
            for r, c in Pr.items():
                term = c * math.prod(math.factorial(e) for e in r)
                for Lj, e in zip(L, r):
                    term = term / Lj ** (1 + e)
                total = total + term
            return det * total
        with mp.workprec(prec + 20):
            det_n = _num(det)
            L_n = [_num(v) for v in L]
            rows_n = [[_num(v) for v in r] for r in rows]
            return _sum_Pr(P, rows_n, det_n, L_n)

    with mp.workprec(prec + 20):
        rows_n = [[_num(v) for v in r] for r in rows]
        x_n = [_num(v) for v in x]
        det_n = mpmath.det(mpmath.matrix(rows_n)) if n > 0 else mpmath.mpf(1)
        L_n = [pairing(x_n, [rows_n[i][j] for i in range(n)]) for j in range(n)]
        scale = max(abs(v) for v in x_n) * max(abs(v) for r in rows_n for v in r)
        tol = mpmath.mpf(2) ** (8 - prec) * scale
        for j, Lj in enumerate(L_n):
            if abs(Lj) <= tol:
                raise ZeroDivisionError(f"pairing <x, sigma_{j + 1}> vanishes numerically")
        return _sum_Pr(P, rows_n, det_n, L_n)


def _sum_Pr(P, rows_n, det_n, L_n):
    if det_n == 0:
        return mpmath.mpc(0)
    Pr = expand_Pr(P.map_coeffs(_num), rows_n)
    total = mpmath.mpc(0)
    for r, c in Pr.items():
        term = c * math.prod(math.factorial(e) for e in r)
        for Lj, e in zip(L_n, r):
            term = term / Lj ** (1 + e)
        total += term
    return +(det_n * total)


def select_columns(tup: Sequence[FMatrix], x: Sequence[FElem]):
    """For each A_k the smallest column j_k with <x, A_{k, j_k}> != 0 (exact).

    Returns (sigma, d) with sigma the FMatrix whose k-th column is A_{k, j_k}
    and d the 1-based index vector (j_1, ..., j_n)."""
    n = len(x)
    d = []
    cols = []
    for A in tup:
        for j in range(n):
            c = A.col(j)
            if not pairing(x, c).is_zero():
                d.append(j + 1)
                cols.append(c)
                break
        else:
            raise ValueError("no column of A pairs nonzero with x (A singular or x = 0)")
    sigma = FMatrix(tuple(tuple(cols[k][i] for k in range(n)) for i in range(n)))
    return sigma, tuple(d)


def decompose_X(tup: Sequence[FMatrix], x: Sequence[FElem]) -> tuple:
    """The d-vector with x in X(d): <x, A_ij> = 0 for j < d_i, != 0 at j = d_i."""
    n = len(x)
    d = []
    for A in tup:
        dj = None
        for j in range(n):
            if not pairing(x, A.col(j)).is_zero():
                dj = j + 1
                break
        if dj is None:
            raise ValueError("x = 0 or singular matrix")
        d.append(dj)
    return tuple(d)


def eval_psi(tup: Sequence[FMatrix], P: HomogPoly, x: Sequence[FElem], prec: int = 128):
    """psi(A_1, ..., A_n)(P, x); zero at x = 0."""
    if all(v.is_zero() for v in x):
        return mpmath.mpc(0)
    sigma, _ = select_columns(tup, x)
    return eval_f(sigma, P, x, prec)


def cocycle_residual(tup: Sequence[FMatrix], P: HomogPoly, x: Sequence[FElem], prec: int = 128):
    """(|alternating sum|, max |term|) for an (n+1)-tuple."""
    terms = []
    for i in range(len(tup)):
        face = tuple(tup[:i]) + tuple(tup[i + 1:])
        terms.append(eval_psi(face, P, x, prec))
    with mp.workprec(prec + 20):
        alt = mpmath.mpc(0)
        for i, t in enumerate(terms):
            alt += t if i % 2 == 0 else -t
        return abs(alt), max(abs(t) for t in terms)


# ---------------------------------------------------------------------------
# vectorized plan for lattice sums

@dataclass
class SigmaPlan:
    """Precomputed data for one d-vector: f = sum_c coef_c * prod_j L_j^-(1+e_cj)."""
    d: tuple
    sigma: FMatrix
    cols: np.ndarray          # complex n x n, column k is sigma_k
    exps: np.ndarray          # (terms, n) ints
    coef: np.ndarray          # (terms,) complex, includes det and prod r_j!
    singular: bool


def plan_tuple(tup: Sequence[FMatrix], P: HomogPoly, prec: int = 53) -> dict:
    """For every d in {1..n}^n, the exact sigma and the expanded coefficients."""
    n = tup[0].n
    plans = {}
    with mp.workprec(max(prec, 53) + 20):
        Pn = P.map_coeffs(_num)
        for d in itertools.product(range(1, n + 1), repeat=n):
            cols = [tup[k].col(d[k] - 1) for k in range(n)]
            sigma = FMatrix(tuple(tuple(cols[k][i] for k in range(n)) for i in range(n)))
            det = sigma.det()
            cnum = np.array([[complex(v) for v in r] for r in sigma.rows])
            if det.is_zero():
                plans[d] = SigmaPlan(d, sigma, cnum, np.zeros((0, n), int), np.zeros(0, complex), True)
                continue
            rows_n = [[v.to_mpc() for v in r] for r in sigma.rows]
            Pr = expand_Pr(Pn, rows_n)
            detn = det.to_mpc()
            exps, coefs = [], []
            for r, c in sorted(Pr.items(), reverse=True):
                val = detn * c * math.prod(math.factorial(e) for e in r)
                exps.append(r)
                coefs.append(complex(val))
            plans[d] = SigmaPlan(d, sigma, cnum, np.array(exps, int).reshape(-1, n), np.array(coefs, complex), False)
    return plans


# ---------------------------------------------------------------------------
# random data for property tests

def units_of_OF(D: int) -> list[FElem]:
    h = Fraction(1, 2)
    if D == 1:
        return [FElem.of(v, 1) for v in ([1, 0], [-1, 0], [0, 1], [0, -1])]
    if D == 3:
        return [FElem.of(v, 3) for v in ([1, 0], [-1, 0], [h, h], [-h, -h], [h, -h], [-h, h])]
    return [FElem.of(1, D), FElem.of(-1, D)]


def _small_integer(D: int, rng: random.Random, bound: int = 1) -> FElem:
    a = rng.randint(-bound, bound)
    b = rng.randint(-bound, bound)
    if D % 4 == 3:
        # a + b * (1 + sqrt(-D)) / 2
        return FElem(Fraction(a) + Fraction(b, 2), Fraction(b, 2), D)
    return FElem(Fraction(a), Fraction(b), D)


def random_gl(n: int, D: int, rng: random.Random, height: int = 3, steps: int | None = None) -> FMatrix:
    """Random element of GL_n(O_F) with entry height <= `height`, built from
    elementary operations so the determinant is a unit."""
    units = units_of_OF(D)
    A = [list(r) for r in FMatrix.identity(n, D).rows]
    steps = rng.randint(2, 4 * n) if steps is None else steps
    done = 0
    tries = 0
    while done < steps and tries < 50 * steps:
        tries += 1
        kind = rng.random()
        B = [list(r) for r in A]
        if kind < 0.7:
            i, j = rng.sample(range(n), 2)
            c = _small_integer(D, rng)
            if c.is_zero():
                continue
            B[i] = [B[i][t] + c * B[j][t] for t in range(n)]
        elif kind < 0.85:
            i, j = rng.sample(range(n), 2)
            B[i], B[j] = B[j], B[i]
        else:
            i = rng.randrange(n)
            e = rng.choice(units)
            B[i] = [e * v for v in B[i]]
        if max(v.height() for r in B for v in r) <= height:
            A = B
            done += 1
    if rng.random() < 0.5:
        A = [[A[j][i] for j in range(n)] for i in range(n)]
    return FMatrix(tuple(tuple(r) for r in A))


def random_F(D: int, rng: random.Random, height: int = 5) -> FElem:
    a = Fraction(rng.randint(-height, height), rng.randint(1, height))
    b = Fraction(rng.randint(-height, height), rng.randint(1, height))
    return FElem(a, b, D)


def random_x(n: int, D: int, rng: random.Random, height: int = 5, p_zero: float = 0.15) -> list[FElem]:
    while True:
        x = [fzero(D) if rng.random() < p_zero else random_F(D, rng, height) for _ in range(n)]
        if any(not v.is_zero() for v in x):
            return x
