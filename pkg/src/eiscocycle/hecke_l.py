"""Partial and full Hecke L-values by direct summation over field elements.

Two independent evaluators are provided:

* `partial_L` walks the pseudo-basis coset with the sup-norm enumerator and
  keeps one point per V_f-orbit through the log-coordinate fundamental domain.
* `direct_orbit_sum` walks a rectangular box in a user-supplied Z-basis and
  keeps the point of smallest trace form in each orbit of the full unit group
  given to it (torsion times free generators).

Norms are exact in both: N_{K/F} is evaluated as an integer polynomial.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp

from .eisenstein_sum import LatticeCoset, _fincke_pohst, _real_rows, iter_coset
from .exact_field import FElem, FieldInstance, KElem, KField, ZLattice, build_M, fone, fzero, mpq, q_solve
from .poly_ops import HomogPoly
from .unit_homology import log_matrix, log_vector


# ---------------------------------------------------------------------------
# the character

def lambda_char(a: KElem, k: int, l: int, prec: int = 128):
    """conj(nu)^k * nu^(-l) with nu = N_{K/F}(a) embedded."""
    if a.is_zero():
        raise ZeroDivisionError("lambda of zero")
    with mp.workprec(prec + 20):
        nu = a.rel_norm().to_mpc()
        return +(mpmath.conj(nu) ** k * nu ** (-l))


def lambda_exact(a: KElem, k: int, l: int) -> FElem:
    nu = a.rel_norm()
    return nu.conj() ** k * nu ** (-l)


def check_lambda_trivial(inst: FieldInstance, k: int, l: int, full: bool = False) -> list[tuple]:
    """Generators of U_f (or of the full unit group) on which lambda is not 1."""
    gens = list(inst.torsion) + list(inst.uf_free) + list(inst.units)
    if full:
        gens = list(inst.full_torsion or []) + list(inst.full_free or [])
    one = fone(inst.D)
    return [(g.to_json(), lambda_exact(g, k, l).to_json()) for g in gens if lambda_exact(g, k, l) != one]


@dataclass
class HeckeCharData:
    k: int
    l: int
    phi: Sequence[complex] | None = None      # overrides the instance residue table if given

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        if self.l <= 0:
            raise ValueError("l must be positive")


@dataclass
class LValue:
    value: complex
    B: float
    terms: int
    tail_estimate: float
    orbit_sum: complex = 0j          # sum over V-orbits before dividing by the index

    def as_record(self) -> dict:
        return {"value_re": float(np.real(self.value)), "value_im": float(np.imag(self.value)),
                "B": self.B, "terms": self.terms, "tail_estimate": self.tail_estimate}


# ---------------------------------------------------------------------------
# exact integer norm forms on affine Z-parametrizations

class AffineNormForm:
    """xi(z) = base + sum_k z_k gens_k; evaluates N_{K/F}(xi(z)) exactly as
    (A + B sqrt(-D)) / den with integer A, B."""

    def __init__(self, base: KElem, gens: Sequence[KElem]):
        K = base.field
        self.K = K
        n = K.n
        m = len(gens)
        # homogenize with z_0 = 1 for the base point
        allg = [base] + list(gens)
        mats = [g.mult_matrix() for g in allg]
        entries = [[HomogPoly.linear_form([mats[t][i][j] for t in range(m + 1)]) for j in range(n)] for i in range(n)]
        det = None
        for perm in itertools.permutations(range(n)):
            sgn = _sign(perm)
            term = HomogPoly.constant(m + 1, fone(K.D))
            for i, j in enumerate(perm):
                term = term * entries[i][j]
            term = term if sgn > 0 else term.scale(FElem.of(-1, K.D))
            det = term if det is None else det + term
        self.monos = []
        den = 1
        for r, c in det.coeffs.items():
            if c.is_zero():
                continue
            self.monos.append((r, c))
            for q in (c.a, c.b):
                den = den * q.denominator // math.gcd(den, q.denominator)
        self.den = den
        self.exps = np.array([r for r, _ in self.monos], dtype=np.int64).reshape(-1, m + 1)
        self.ca = np.array([int(c.a * den) for _, c in self.monos], dtype=object)
        self.cb = np.array([int(c.b * den) for _, c in self.monos], dtype=object)

    def __call__(self, Z: np.ndarray):
        """(A, B) exact integer arrays; int64 when provably overflow-free, else Python ints."""
        Zh = np.concatenate([np.ones((len(Z), 1), dtype=np.int64), Z], axis=1)
        zmax = int(np.abs(Zh).max()) if len(Z) else 1
        cmax = max([abs(int(v)) for v in self.ca] + [abs(int(v)) for v in self.cb] + [1])
        deg = int(self.exps.sum(axis=1).max()) if len(self.exps) else 0
        safe = cmax * zmax ** deg * max(len(self.exps), 1) < 2 ** 30
        dtype = np.int64 if safe else object
        A = np.zeros(len(Z), dtype=dtype)
        Bv = np.zeros(len(Z), dtype=dtype)
        Zw = Zh if safe else Zh.astype(object)
        for e, ca, cb in zip(self.exps, self.ca, self.cb):
            mono = np.ones(len(Z), dtype=dtype)
            for j, ej in enumerate(e):
                if ej:
                    mono = mono * Zw[:, j] ** int(ej)
            A = A + int(ca) * mono
            Bv = Bv + int(cb) * mono
        return A, Bv

    def rel_and_abs(self, Z: np.ndarray):
        """complex N_{K/F}, float N_{K/Q}, and the exact numerators (A, B)."""
        A, Bv = self(Z)
        D = self.K.D
        den = self.den
        Af = np.asarray(A, dtype=float)
        Bf = np.asarray(Bv, dtype=float)
        rel = (Af + 1j * Bf * math.sqrt(D)) / den
        absN = (Af * Af + D * Bf * Bf) / (den * den)
        return rel, absN, (A, Bv)


def _sign(perm):
    perm = list(perm)
    s = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            s = -s
    return s


class IdealMembership:
    """Vectorized exact test xi(z) in I for a Z-lattice I."""

    def __init__(self, ideal_basis: Sequence[KElem], base: KElem, gens: Sequence[KElem]):
        lat = ZLattice(ideal_basis)
        c0 = lat.coordinates(base)
        cg = [lat.coordinates(g) for g in gens]
        vals = list(c0) + [v for c in cg for v in c]
        den = 1
        for v in vals:
            den = den * v.denominator // math.gcd(den, v.denominator)
        self.den = den
        self.c0 = np.array([int(v * den) for v in c0], dtype=np.int64)
        self.C = np.array([[int(v * den) for v in c] for c in cg], dtype=np.int64)

    def contains(self, Z: np.ndarray) -> np.ndarray:
        coords = Z @ self.C + self.c0
        return np.all(coords % self.den == 0, axis=1)


def _lambda_and_norm_terms(rel: np.ndarray, absN: np.ndarray, k: int, l: int, s: complex) -> np.ndarray:
    lam = np.conj(rel) ** k / rel ** l
    return lam * np.exp(-s * np.log(absN))


# ---------------------------------------------------------------------------
# reduction modulo V_f

def log_coordinates(x: KElem, inst: FieldInstance, units=None, prec: int = 128):
    """c with l(x) = (log N/n) e + sum_j c_j l(eps_j)."""
    units = inst.units if units is None else units
    n = inst.n
    with mp.workprec(prec + 20):
        lv = log_vector(x, inst, prec)
        mean = sum(lv) / n
        L = log_matrix(inst, units, prec)
        rhs = mpmath.matrix([lv[i] - mean for i in range(n - 1)])
        return list(mpmath.lu_solve(L, rhs))


def reduce_mod_units(xi: KElem, inst: FieldInstance, units=None, prec: int = 128, delta: float = 1e-9) -> KElem:
    """The element of xi * <units> whose log coordinates lie in [-delta, 1 - delta)^(n-1)."""
    if xi.is_zero():
        raise ZeroDivisionError("zero has no unit orbit")
    units = list(inst.units if units is None else units)
    c = log_coordinates(xi, inst, units, prec)
    out = xi
    for cj, e in zip(c, units):
        t = int(mpmath.floor(cj + delta))
        if t:
            out = out * e ** (-t)
    return out


# ---------------------------------------------------------------------------
# partial L via the pseudo-basis coset and the V_f fundamental domain

def _fd_radius(inst: FieldInstance, B: float, units, prec: int = 64) -> float:
    n = inst.n
    logs = [[float(v) for v in log_vector(e, inst, prec)] for e in units]
    best = 0.0
    for i in range(n):
        pos = sum(max(lv[i], 0.0) + 1e-8 * abs(lv[i]) for lv in logs)
        best = max(best, math.log(B) / n + pos)
    return math.exp(best / 2) * (1 + 1e-9)


def _m_basis_forms(inst: FieldInstance):
    """KElem parametrization of the coset: base = r, gens = lambda * m_i."""
    gens = []
    for (l1, l2), mi in zip(inst.lattices, inst.m):
        gens.append(mi * l1)
        gens.append(mi * l2)
    return inst.from_m_coords(inst.u), gens


def _check_hecke_inputs(inst: FieldInstance, k: int, l: int):
    if k < 0:
        raise ValueError("k must be nonnegative for the Hecke character")
    bad = check_lambda_trivial(inst, k, l)
    if bad:
        raise ValueError(f"lambda is not trivial on U_f for (k, l) = ({k}, {l}): {bad}")


def partial_L(inst: FieldInstance, s, k: int, l: int, B: float, units=None, index: int | None = None,
              chunk: int = 1 << 20) -> LValue:
    """L(b, r, s) = [U_f:V]^{-1} sum over xi in (f b^{-1} + r)/V, (xi) prime to f, N(xi) <= B."""
    _check_hecke_inputs(inst, k, l)
    units = list(inst.units if units is None else units)
    index = inst.index if index is None else index
    if index is None:
        raise ValueError("the index [U_f:V_f] is not configured for this instance")
    n = inst.n
    s = complex(s)
    M = build_M(inst, 64)
    Mn = np.array([[complex(M[i, j]) for j in range(n)] for i in range(n)])
    coset = LatticeCoset.from_instance(inst)
    base, gens = _m_basis_forms(inst)
    norm = AffineNormForm(base, gens)
    primes = [IdealMembership(p, base, gens) for p in inst.conductor_primes]
    with mp.workprec(80):
        Lm = log_matrix(inst, units, 64)
        Linv = np.array((Lm ** -1).tolist(), dtype=float) if n > 1 else np.zeros((0, 0))
    Rb = _fd_radius(inst, B, units)
    delta = 1e-9
    total = 0j
    d_in = d_out = 0j
    count = 0
    for Z, w, _ in iter_coset(coset, Mn, Rb, chunk):
        absw2 = np.abs(w) ** 2
        nz = np.all(absw2 > 0, axis=1)
        Z, w, absw2 = Z[nz], w[nz], absw2[nz]
        if len(Z) == 0:
            continue
        approxN = np.prod(absw2, axis=1)
        keep = approxN <= B * (1 + 1e-6)
        lv = np.log(absw2[keep])
        if n > 1:
            proj = lv[:, : n - 1] - lv.mean(axis=1, keepdims=True)
            c = proj @ Linv.T
            keep_fd = np.all((c >= -delta) & (c < 1 - delta), axis=1)
        else:
            keep_fd = np.ones(len(lv), bool)
        idx = np.nonzero(keep)[0][keep_fd]
        if len(idx) == 0:
            continue
        Zs = Z[idx]
        for pm in primes:
            ok = ~pm.contains(Zs)
            Zs = Zs[ok]
        if len(Zs) == 0:
            continue
        rel, absN, _ = norm.rel_and_abs(Zs)
        ok = absN <= B
        rel, absN = rel[ok], absN[ok]
        terms = _lambda_and_norm_terms(rel, absN, k, l, s)
        total += terms.sum()
        count += len(terms)
        d_in += terms[(absN > B / 4) & (absN <= B / 2)].sum()
        d_out += terms[absN > B / 2].sum()
    tail = _geometric_tail(d_in, d_out)
    return LValue(total / index, B, count, tail / index, total)


def _geometric_tail(inner: complex, outer: complex) -> float:
    a1, a2 = abs(inner), abs(outer)
    if a2 == 0:
        return 0.0
    if a1 == 0 or a2 >= a1:
        return float("inf")
    q = a2 / a1
    return a2 * q / (1 - q)


def with_residue(inst: FieldInstance, rep: KElem) -> FieldInstance:
    """Same data with r replaced by `rep` (u recomputed in the basis m)."""
    u = inst.to_m_coords(rep)
    return replace(inst, u=u, r=rep)


def full_L(insts: Sequence[FieldInstance], char: HeckeCharData, s, B: float) -> LValue:
    """sum_b chi(b) N(b)^-s sum_(r) phi(r) L(b, r, s) over configured class and
    residue representatives."""
    s = complex(s)
    total = 0j
    tail = 0.0
    terms = 0
    for inst in insts:
        phis = list(char.phi) if char.phi is not None else [res.phi for res in inst.residues]
        if len(phis) != len(inst.residues):
            raise ValueError("phi table does not match the residue list")
        weight = inst.chi_b * complex(mpmath.power(mpq(inst.b_norm), -s))
        for res, ph in zip(inst.residues, phis):
            Lv = partial_L(with_residue(inst, res.rep), s, char.k, char.l, B)
            total += weight * ph * Lv.value
            tail += abs(weight * ph) * Lv.tail_estimate
            terms += Lv.terms
    return LValue(total, B, terms, tail)


# ---------------------------------------------------------------------------
# independent oracle: rectangular box and trace-form orbit minimization

def _unit_action(unit: KElem, base: KElem, gens: Sequence[KElem]):
    """Integer affine map z -> z U + t with xi(z U + t) = unit * xi(z)."""
    m = len(gens)
    rows = [[v for v in g.q_coords()] for g in gens]       # m x m rational (m = 2n)
    cols = [[rows[k][i] for k in range(m)] for i in range(m)]

    def coords(x: KElem):
        c = q_solve(cols, x.q_coords())
        if c is None or any(v.denominator != 1 for v in c):
            raise ValueError("unit does not preserve the parametrized coset")
        return [int(v) for v in c]

    U = np.array([coords(unit * g) for g in gens], dtype=np.int64)
    t = np.array(coords(unit * base - base), dtype=np.int64)
    return U, t


def _lex_less(A: np.ndarray, Bm: np.ndarray) -> np.ndarray:
    """Row-wise lexicographic A < B."""
    less = np.zeros(len(A), bool)
    decided = np.zeros(len(A), bool)
    for j in range(A.shape[1]):
        lt = (A[:, j] < Bm[:, j]) & ~decided
        gt = (A[:, j] > Bm[:, j]) & ~decided
        less |= lt
        decided |= lt | gt
    return less


def direct_orbit_sum(K: KField, zbasis: Sequence[KElem], base: KElem, torsion: Sequence[KElem],
                     free: Sequence[KElem], k: int, l: int, s, B: float, prec: int = 64,
                     exclude_primes: Sequence[Sequence[KElem]] = (), chunk: int = 1 << 20) -> LValue:
    """sum over orbits of <torsion, free> on {base + Z-span(zbasis)} of lambda * N^-s,
    one representative per orbit (smallest trace form, ties broken by coordinates).

    Uses a rectangular box in the Z-basis coordinates, exact integer norms and
    exact integer unit actions.  Only free generators sets with n - 1 = 1 give a
    provably complete local-minimum test; larger ranks also test products of
    pairs of generators."""
    n = K.n
    s = complex(s)
    m = 2 * n
    gens = list(zbasis)
    norm = AffineNormForm(base, gens)
    primes = [IdealMembership(p, base, gens) for p in exclude_primes]
    # embeddings of the parametrization
    with mp.workprec(prec + 20):
        emb_base = np.array([complex(K.embed(base, i + 1, prec)) for i in range(n)])
        emb_gens = np.array([[complex(K.embed(g, i + 1, prec)) for i in range(n)] for g in gens])
        logs = [[float(2 * mpmath.log(abs(K.embed(u, i + 1, prec)))) for i in range(n)] for u in free]
    # a minimal-trace representative has log coordinates within 1/2 (n = 2) or 1 of the centre
    reach = 0.5 if n == 2 else 1.0
    Rb = 0.0
    for i in range(n):
        Rb = max(Rb, math.log(B) / n + reach * sum(abs(lv[i]) for lv in logs))
    Rb = math.exp(Rb / 2) * (1 + 1e-6)
    G = _real_rows(emb_gens)                   # m x m : row k real image of generator k
    Ginv = np.linalg.inv(G)
    c0 = _real_rows(emb_base)
    # |z_k| bound from |y_j - c0_j| <= Rb + |c0_j| with y = c0 + z G
    half = np.abs(Ginv).T @ (np.full(m, Rb) + np.abs(c0))
    zmax = np.floor(half + 1e-9).astype(int)

    # unit moves: free generators and inverses (and pairwise products when rank > 1)
    moves = []
    for u in free:
        moves.append(u)
        moves.append(u.inverse())
    if len(free) > 1:
        for a, b in itertools.combinations(free, 2):
            for ea, eb in itertools.product((1, -1), repeat=2):
                moves.append(a ** ea * b ** eb)
    move_maps = [_unit_action(u, base, gens) for u in moves]
    tors_maps = [_unit_action(t, base, gens) for t in torsion if not (t == K.one())]

    def trace(Zb):
        w = emb_base + Zb @ emb_gens
        return np.sum(np.abs(w) ** 2, axis=1)

    total = 0j
    d_in = d_out = 0j
    count = 0
    ranges = [np.arange(-zm, zm + 1) for zm in zmax]
    inner_grid = np.array(list(itertools.product(*ranges[1:])), dtype=np.int64)
    for z0 in ranges[0]:
        Z = np.concatenate([np.full((len(inner_grid), 1), z0, dtype=np.int64), inner_grid], axis=1)
        w = emb_base + Z @ emb_gens
        absw = np.abs(w)
        ok = np.all(absw <= Rb, axis=1) & np.all(absw > 0, axis=1)
        ok &= np.prod(absw ** 2, axis=1) <= B * (1 + 1e-6)
        Z = Z[ok]
        if len(Z) == 0:
            continue
        for pm in primes:
            Z = Z[~pm.contains(Z)]
        if len(Z) == 0:
            continue
        rel, absN, _ = norm.rel_and_abs(Z)
        keep = (absN <= B) & (absN > 0)
        Z, rel, absN = Z[keep], rel[keep], absN[keep]
        if len(Z) == 0:
            continue
        T = trace(Z)
        canon = np.ones(len(Z), bool)
        tied = []
        for U, t in move_maps:
            Zm = Z @ U + t
            Tm = trace(Zm)
            canon &= Tm >= T * (1 - 1e-10)
            tie = np.abs(Tm - T) <= 1e-10 * T
            tied.append((Zm, tie))
        # tie-breaking by coordinates among torsion multiples of the tied set
        cands = [(Z, np.ones(len(Z), bool))] + tied
        for Zc, active in list(cands):
            for U, t in tors_maps:
                cands.append((Zc @ U + t, active))
        for Zc, active in cands[1:]:
            canon &= ~(active & _lex_less(Zc, Z))
        Z, rel, absN = Z[canon], rel[canon], absN[canon]
        terms = _lambda_and_norm_terms(rel, absN, k, l, s)
        total += terms.sum()
        count += len(terms)
        d_in += terms[(absN > B / 4) & (absN <= B / 2)].sum()
        d_out += terms[absN > B / 2].sum()
    return LValue(total, B, count, _geometric_tail(d_in, d_out), total)


def direct_partial_L(inst: FieldInstance, s, k: int, l: int, B: float) -> LValue:
    """L(b, r, s) from a rectangular box in the supplied Z-basis of f b^{-1},
    one representative per U_f-orbit (no index needed)."""
    _check_hecke_inputs(inst, k, l)
    return direct_orbit_sum(inst.K, inst.fb_inv_zbasis, inst.r, inst.torsion, inst.uf_free, k, l, s, B,
                            exclude_primes=inst.conductor_primes)


def direct_full_L(inst: FieldInstance, ok_zbasis: Sequence[KElem], k: int, l: int, s, B: float) -> LValue:
    """Class-number-one check: sum over nonzero principal ideals prime to f of
    lambda(a) N(a)^-s with trivial phi, enumerating elements of O_K modulo all units."""
    if inst.full_torsion is None or inst.full_free is None:
        raise ValueError("the full unit group is not configured")
    bad = check_lambda_trivial(inst, k, l, full=True)
    if bad:
        raise ValueError(f"lambda is not trivial on all units: {bad}")
    return direct_orbit_sum(inst.K, ok_zbasis, inst.K.zero(), inst.full_torsion, inst.full_free, k, l, s, B,
                            exclude_primes=inst.conductor_primes)


# ---------------------------------------------------------------------------
# the n = 2 elliptic sums

def eval_Ekl(u: complex, lattice: Sequence[complex], k: int, l: int, s, R: float, chunk: int = 1 << 20) -> complex:
    """sum over w in Lambda + u, 0 < |w| <= R, of conj(w)^k / (w^l |w|^(2s))."""
    if l < 1:
        raise ValueError("l must be at least 1")
    w1, w2 = complex(lattice[0]), complex(lattice[1])
    if abs((w1.conjugate() * w2).imag) == 0:
        raise ValueError("lattice basis is degenerate")
    Bm = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
    Qm, Rm = np.linalg.qr(Bm)
    t = Qm.T @ np.array([u.real, u.imag]) if isinstance(u, complex) else Qm.T @ np.array([float(u), 0.0])
    u = complex(u)
    s = complex(s)
    total = 0j
    for Z in _fincke_pohst(Rm, t, R * R * (1 + 1e-12), chunk):
        w = u + Z[:, 0] * w1 + Z[:, 1] * w2
        a = np.abs(w)
        sel = (a > 0) & (a <= R * (1 + 1e-12))
        w, a = w[sel], a[sel]
        total += np.sum(np.conj(w) ** k / w ** l * np.exp(-s * np.log(a * a)))
    return complex(total)
