"""The representation varrho of K^x on F^n, the regulator with its sign, the
bar-notation unit cycle E and the pairing of cochains with chains."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
from mpmath import mp

from .exact_field import FieldInstance, KElem, build_M, f_solve
from .rational_cocycle import FMatrix, _perm_sign


def varrho(eta: KElem, inst: FieldInstance) -> FMatrix:
    """Exact matrix of multiplication by eta in the basis m, transposed.

    Row j holds the m-coordinates of eta*m_j, so x varrho(eta) gives the
    coordinates of xi*eta when x gives those of xi."""
    rows = [tuple(inst.to_m_coords(eta * mj)) for mj in inst.m]
    return FMatrix(tuple(rows))


def varrho_numeric(eta: KElem, inst: FieldInstance, prec: int = 128) -> mpmath.matrix:
    """M delta(eta) M^{-1} at `prec` bits (cross-check of the exact path)."""
    with mp.workprec(prec + 20):
        M = build_M(inst, prec)
        n = inst.n
        delta = mpmath.diag([inst.K.embed(eta, i + 1, prec) for i in range(n)])
        return M * delta * M ** -1


def log_vector(x: KElem, inst: FieldInstance, prec: int = 128) -> list:
    """(2 log|rho_i(x)|)_i for i = 1..n."""
    with mp.workprec(prec + 20):
        return [2 * mpmath.log(abs(inst.K.embed(x, i + 1, prec))) for i in range(inst.n)]


def log_matrix(inst: FieldInstance, units: Sequence[KElem], prec: int = 128) -> mpmath.matrix:
    """L_ij = 2 log|rho_i(eps_j)| for 1 <= i, j <= n-1."""
    n = inst.n
    with mp.workprec(prec + 20):
        L = mpmath.matrix(n - 1, n - 1)
        for j, e in enumerate(units):
            lv = log_vector(e, inst, prec)
            for i in range(n - 1):
                L[i, j] = lv[i]
        return L


@dataclass
class RegulatorData:
    L: mpmath.matrix
    R: mpmath.mpf
    sign: int

    def as_record(self):
        return {"regulator": float(self.R), "orientation_sign": self.sign}


def regulator(inst: FieldInstance, prec: int = 128, units: Sequence[KElem] | None = None) -> RegulatorData:
    units = list(inst.units if units is None else units)
    n = inst.n
    if n < 2:
        raise ValueError("regulator needs n >= 2")
    if len(units) != n - 1:
        raise ValueError(f"need {n - 1} unit generators, got {len(units)}")
    with mp.workprec(prec + 20):
        L = log_matrix(inst, units, prec)
        R = mpmath.det(L)
        if abs(R) <= mpmath.mpf(2) ** (16 - prec):
            raise ValueError("degenerate regulator: units are not independent")
        sign = (-1) ** (n - 1) * (1 if R > 0 else -1)
    return RegulatorData(L, R, sign)


@dataclass
class BarChain:
    terms: list = field(default_factory=list)     # (integer coefficient, tuple of FMatrix)

    def __post_init__(self):
        ns = {len(t) for _, t in self.terms}
        if len(ns) > 1:
            raise ValueError("all tuples in a chain must have the same length")
        if any(c == 0 for c, _ in self.terms):
            raise ValueError("chain coefficients must be nonzero")

    def to_records(self):
        return [{"coeff": c, "matrices": [A.to_json() for A in t]} for c, t in self.terms]


def bar_tuple(mats: Sequence[FMatrix]) -> tuple:
    """[A_1|...|A_{n-1}] -> (1, A_1, A_1 A_2, ..., A_1 ... A_{n-1})."""
    n = mats[0].n if mats else 1
    D = mats[0].D if mats else None
    cur = FMatrix.identity(n, D)
    out = [cur]
    for A in mats:
        cur = cur @ A
        out.append(cur)
    return tuple(out)


def build_cycle(inst: FieldInstance, generators: Sequence[KElem] | None = None, prec: int = 128,
                validate: bool = True) -> BarChain:
    """E = rho * sum_pi sign(pi) [A_pi(1) | ... | A_pi(n-1)],  A_j = varrho(eps_j)."""
    gens = list(inst.units if generators is None else generators)
    if validate:
        one = inst.K.one().coords[0]
        for e in gens:
            if e.rel_norm() != one:
                raise ValueError(f"generator {e.to_json()} does not have relative norm 1")
    reg = regulator(inst, prec, gens)
    mats = [varrho(e, inst) for e in gens]
    terms = []
    for perm in itertools.permutations(range(len(gens))):
        coeff = reg.sign * _perm_sign(perm)
        terms.append((coeff, bar_tuple([mats[p] for p in perm])))
    if not gens:
        terms = [(reg.sign, bar_tuple([]))]
    return BarChain(terms)


def orientation_signs(inst: FieldInstance, generators: Sequence[KElem] | None = None, prec: int = 128):
    """For each permutation: sign of det(e, v_2 - v_1, ..., v_n - v_1) for the
    simplex of log-vectors v_1 = 0, v_{k+1} = log of eps_pi(1)...eps_pi(k)."""
    gens = list(inst.units if generators is None else generators)
    n = inst.n
    out = []
    with mp.workprec(prec + 20):
        logs = [log_vector(e, inst, prec) for e in gens]
        for perm in itertools.permutations(range(len(gens))):
            verts = [[mpmath.mpf(0)] * n]
            cur = [mpmath.mpf(0)] * n
            for p in perm:
                cur = [a + b for a, b in zip(cur, logs[p])]
                verts.append(list(cur))
            cols = [[mpmath.mpf(1)] * n] + [[v[i] - verts[0][i] for i in range(n)] for v in verts[1:]]
            A = mpmath.matrix([[cols[j][i] for j in range(n)] for i in range(n)])
            d = mpmath.det(A)
            out.append((perm, 1 if d > 0 else -1, float(d)))
    return out


def pair(chain: BarChain, evaluator: Callable, *args, **kwargs):
    """sum_i c_i * evaluator(tuple_i, *args)."""
    total = 0
    for c, tup in chain.terms:
        total = total + c * evaluator(tup, *args, **kwargs)
    return total
