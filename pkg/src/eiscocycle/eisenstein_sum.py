"""Lattice-coset sums of psi times the convergence factor Omega_s^k.

The heavy sums run in numpy float64.  Column selection stays exact: every
pairing <x, column> is an integer affine function of the integer lattice
coordinates z, so its vanishing is decided in int64 arithmetic.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import mpmath
import numpy as np
from mpmath import mp

from .exact_field import FElem, fzero
from .poly_ops import HomogPoly
from .rational_cocycle import FMatrix, eval_psi, plan_tuple


# ---------------------------------------------------------------------------
# cosets

@dataclass
class LatticeCoset:
    """x = u + sum_k z_k g_k with z in Z^{2n}; g_{2i}, g_{2i+1} span Lambda_i in slot i."""

    lattices: list
    u: list
    D: int = field(init=False)

    def __post_init__(self):
        self.D = self.u[0].D
        if len(self.lattices) != len(self.u):
            raise ValueError("need one lattice per coordinate")
        for i, (a, b) in enumerate(self.lattices):
            if a.a * b.b - a.b * b.a == 0:
                raise ValueError(f"Lambda_{i + 1} basis is degenerate")

    @classmethod
    def from_instance(cls, inst) -> "LatticeCoset":
        return cls(list(inst.lattices), list(inst.u))

    @property
    def n(self) -> int:
        return len(self.u)

    def generators(self) -> list[list[FElem]]:
        n = self.n
        out = []
        for i, (a, b) in enumerate(self.lattices):
            for lam in (a, b):
                g = [fzero(self.D)] * n
                g[i] = lam
                out.append(g)
        return out

    def point(self, z: Sequence[int]) -> list[FElem]:
        x = list(self.u)
        for zk, g in zip(z, self.generators()):
            if zk:
                x = [xi + gi * int(zk) for xi, gi in zip(x, g)]
        return x

    def contains(self, x: Sequence[FElem]) -> bool:
        """Exact membership of x in Lambda + u."""
        for i, ((a, b), ui) in enumerate(zip(self.lattices, self.u)):
            d = x[i] - ui
            det = a.a * b.b - a.b * b.a
            # solve d = p a + q b over Q
            p = (d.a * b.b - d.b * b.a) / det
            q = (a.a * d.b - a.b * d.a) / det
            if p.denominator != 1 or q.denominator != 1:
                return False
        return True

    def complex_data(self, M: np.ndarray):
        """(offset w0, generator images Wg) with w = w0 + z @ Wg, and x likewise."""
        gens = self.generators()
        Xg = np.array([[complex(v) for v in g] for g in gens])
        x0 = np.array([complex(v) for v in self.u])
        return x0 @ M, Xg @ M, x0, Xg

    def int_form(self, col: Sequence[FElem]):
        """<x, col> as integer affine forms (c_re, v_re, c_im, v_im, denom): the
        rational and sqrt(-D) parts equal (c + z @ v) / denom."""
        const = fzero(self.D)
        for ui, ci in zip(self.u, col):
            const = const + ui * ci
        coefs = []
        for g in self.generators():
            acc = fzero(self.D)
            for gi, ci in zip(g, col):
                acc = acc + gi * ci
            coefs.append(acc)
        vals = [const.a, const.b] + [c.a for c in coefs] + [c.b for c in coefs]
        den = 1
        for v in vals:
            den = den * v.denominator // math.gcd(den, v.denominator)
        ci = lambda q: int(q * den)
        return (ci(const.a), np.array([ci(c.a) for c in coefs], dtype=np.int64),
                ci(const.b), np.array([ci(c.b) for c in coefs], dtype=np.int64), den)


def _nonzero(form, Z: np.ndarray) -> np.ndarray:
    c_re, v_re, c_im, v_im, _ = form
    return (Z @ v_re + c_re != 0) | (Z @ v_im + c_im != 0)


# ---------------------------------------------------------------------------
# enumeration

def _as_numpy(M) -> np.ndarray:
    if isinstance(M, np.ndarray):
        return M.astype(complex)
    if isinstance(M, mpmath.matrix):
        return np.array([[complex(M[i, j]) for j in range(M.cols)] for i in range(M.rows)])
    return np.array(M, dtype=complex)


def _real_rows(W: np.ndarray) -> np.ndarray:
    out = np.empty(W.shape[:-1] + (2 * W.shape[-1],))
    out[..., 0::2] = W.real
    out[..., 1::2] = W.imag
    return out


def _fincke_pohst(Rm: np.ndarray, t: np.ndarray, rho2: float, chunk: int) -> Iterator[np.ndarray]:
    """All integer z with ||t + Rm z||^2 <= rho2, Rm upper triangular.
    Breadth-first and vectorized, processed in pieces of about `chunk` rows."""
    m = len(t)
    stack = [(m - 1, np.zeros((1, m), dtype=np.int64), np.zeros(1), t[None, :].copy())]
    diag = np.abs(np.diag(Rm))
    while stack:
        level, Z, part, V = stack.pop()
        center = -V[:, level] / Rm[level, level]
        hw = np.sqrt(np.maximum(rho2 - part, 0.0)) / diag[level]
        lo = np.ceil(center - hw).astype(np.int64)
        hi = np.floor(center + hw).astype(np.int64)
        cnt = np.maximum(hi - lo + 1, 0)
        keep = cnt > 0
        if not keep.all():
            Z, part, V, lo, cnt = Z[keep], part[keep], V[keep], lo[keep], cnt[keep]
        if len(cnt) == 0:
            continue
        cum = np.cumsum(cnt)
        cuts = np.searchsorted(cum, np.arange(chunk, cum[-1], chunk), side="left") + 1
        bounds = [0] + [int(c) for c in cuts if 0 < c < len(cnt)] + [len(cnt)]
        bounds = sorted(set(bounds))
        pieces = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            c = cnt[a:b]
            tot = int(c.sum())
            idx = np.repeat(np.arange(a, b), c)
            starts = np.repeat(np.cumsum(c) - c, c)
            zl = lo[idx] + (np.arange(tot) - starts)
            Z2 = Z[idx]
            Z2[:, level] = zl
            V2 = V[idx] + zl[:, None] * Rm[:, level][None, :]
            part2 = part[idx] + V2[:, level] ** 2
            pieces.append((Z2, part2, V2))
        if level == 0:
            for Z2, _, _ in pieces:
                yield Z2
        else:
            for Z2, part2, V2 in reversed(pieces):
                stack.append((level - 1, Z2, part2, V2))


def iter_coset(coset: LatticeCoset, M, R: float, chunk: int = 1 << 20, slack: float = 1e-12):
    """Stream (Z, w, xc) chunks: integer coordinates, w = xM and complex x, for all
    coset points with max_i |w_i| <= R."""
    Mn = _as_numpy(M)
    w0, Wg, x0, Xg = coset.complex_data(Mn)
    B = _real_rows(Wg).T                  # column k = real image of generator k
    t0 = _real_rows(w0)
    Qm, Rm = np.linalg.qr(B)
    t = Qm.T @ t0
    n = coset.n
    Rlim = R * (1 + slack)
    rho2 = n * Rlim * Rlim * (1 + 1e-9) + 1e-9
    for Z in _fincke_pohst(Rm, t, rho2, chunk):
        w = w0 + Z @ Wg
        ok = np.max(np.abs(w), axis=1) <= Rlim
        if ok.any():
            Z = Z[ok]
            yield Z, w[ok], x0 + Z @ Xg


def enumerate_coset(coset: LatticeCoset, M, R: float, shell_width: float = 1.0):
    """Exact coset points x with max_i |(xM)_i| <= R, ordered by shell
    (ceil(sup-norm / shell_width)) then lexicographically in z."""
    Zs, sups = [], []
    for Z, w, _ in iter_coset(coset, M, R):
        Zs.append(Z)
        sups.append(np.max(np.abs(w), axis=1))
    if not Zs:
        return []
    Z = np.concatenate(Zs)
    sup = np.concatenate(sups)
    shell = np.ceil(sup / shell_width - 1e-12).astype(np.int64)
    order = np.lexsort(tuple(Z[:, k] for k in reversed(range(Z.shape[1]))) + (shell,))
    return [coset.point(Z[i].tolist()) for i in order]


# ---------------------------------------------------------------------------
# the convergence factor

def omega(x: Sequence, M, s, k: int, prec: int = 128):
    """Omega_s^k(x, M) = prod_i conj(w_i)^k exp(-s log|w_i|^2), w = xM."""
    with mp.workprec(prec + 20):
        if not isinstance(M, mpmath.matrix):
            M = mpmath.matrix(M)
        n = M.rows
        xs = [v.to_mpc() if isinstance(v, FElem) else mpmath.mpmathify(v) for v in x]
        s = mpmath.mpmathify(s)
        out = mpmath.mpc(1)
        for i in range(n):
            w = mpmath.fsum(xs[j] * M[j, i] for j in range(n))
            a2 = abs(w) ** 2
            if a2 == 0:
                raise ZeroDivisionError("vanishing pairing x M_i")
            out *= mpmath.conj(w) ** k * mpmath.exp(-s * mpmath.log(a2))
        return +out


def omega_np(w: np.ndarray, s: complex, k: int) -> np.ndarray:
    la = np.log(np.abs(w) ** 2).sum(axis=1)
    out = np.exp(-s * la)
    if k:
        out = out * np.prod(np.conj(w) ** k, axis=1)
    return out


# ---------------------------------------------------------------------------
# the Eisenstein cocycle sum

@dataclass
class PsiValue:
    value: complex
    terms_summed: int
    tail_estimate: float
    R: float
    s: complex
    k: int
    precision: int
    shell_edges: list = field(default_factory=list)
    shell_sums: list = field(default_factory=list)
    shell_abs: list = field(default_factory=list)
    exponent: float = float("nan")
    converged: bool = True
    in_half_plane: bool = True

    def as_record(self) -> dict:
        return {"value_re": float(np.real(self.value)), "value_im": float(np.imag(self.value)),
                "R": self.R, "s": [float(np.real(self.s)), float(np.imag(self.s))], "k": self.k,
                "terms": self.terms_summed, "tail_estimate": self.tail_estimate,
                "precision": self.precision, "shell_exponent": self.exponent,
                "converged": self.converged, "in_half_plane": self.in_half_plane}


def _chain_terms(arg):
    if hasattr(arg, "terms"):
        return [(c, tuple(t)) for c, t in arg.terms]
    return [(1, tuple(arg))]


class _PsiEvaluator:
    """Vectorized psi for a fixed chain, polynomial and coset."""

    def __init__(self, chain, P: HomogPoly, coset: LatticeCoset):
        self.terms = _chain_terms(chain)
        self.n = coset.n
        self.plans = []
        for coeff, tup in self.terms:
            plans = plan_tuple(tup, P)
            forms = [[coset.int_form(A.col(j)) for j in range(self.n)] for A in tup]
            self.plans.append((coeff, plans, forms))
        self.xforms = []
        for i in range(self.n):
            e = [fzero(coset.D)] * self.n
            e[i] = FElem.of(1, coset.D)
            self.xforms.append(coset.int_form(e))

    def nonzero_x(self, Z):
        nz = np.zeros(len(Z), bool)
        for f in self.xforms:
            nz |= _nonzero(f, Z)
        return nz

    def __call__(self, Z: np.ndarray, xc: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros(len(Z), complex)
        for coeff, plans, forms in self.plans:
            key = np.zeros(len(Z), np.int64)
            for kk in range(n):
                d = np.full(len(Z), n, np.int64)       # sentinel n means none found
                for j in reversed(range(n)):
                    d = np.where(_nonzero(forms[kk][j], Z), j, d)
                if (d == n).any():
                    raise ValueError("no nonzero column pairing at a nonzero point")
                key = key * n + d
            for kval in np.unique(key):
                dd = []
                kv = int(kval)
                for _ in range(n):
                    dd.append(kv % n + 1)
                    kv //= n
                plan = plans[tuple(reversed(dd))]
                if plan.singular:
                    continue
                sel = key == kval
                L = xc[sel] @ plan.cols
                inv = 1.0 / L
                acc = np.zeros(int(sel.sum()), complex)
                for e, c in zip(plan.exps, plan.coef):
                    acc += c * np.prod(inv ** (1 + e)[None, :], axis=1)
                out[sel] += coeff * acc
        return out


def _tail_and_exponent(R, edges, abs_sums, dy_inner, dy_outer, width):
    """Dyadic geometric tail of the signed sums and the power-law exponent beta of
    the absolute shell density, |A|(R/2, R] / |A|(R/4, R/2] = 2^(beta + 1).

    The two-point dyadic estimate is used instead of a regression over single
    shells because sparse unit orbits make individual shells very spiky."""
    a1, a2 = abs(dy_inner), abs(dy_outer)
    if a2 == 0:
        tail = 0.0
    elif a1 == 0 or a2 >= a1:
        tail = float("inf")
    else:
        q = a2 / a1
        tail = a2 * q / (1 - q)
    mids = 0.5 * (edges[:-1] + edges[1:])
    b1 = float(abs_sums[(mids > R / 4) & (mids <= R / 2)].sum())
    b2 = float(abs_sums[mids > R / 2].sum())
    if b1 > 0 and b2 > 0:
        beta = math.log2(b2 / b1) - 1.0
    else:
        beta = float("nan")
    return tail, beta


def eval_Psi(chain, P: HomogPoly, coset: LatticeCoset, M, s, k: int, R: float,
             shell_width: float | None = None, prec: int = 53, chunk: int = 1 << 20):
    """Truncated Psi_s(chain)(P, u, M) over coset points with sup-norm of xM at most R.

    `chain` is a tuple of FMatrix or anything with a `terms` list of
    (coefficient, tuple).  `s` may be a single value or a list; a list returns a
    list of PsiValue sharing one enumeration."""
    s_list = list(s) if isinstance(s, (list, tuple)) else [s]
    width = shell_width or R / 20.0
    nsh = int(math.ceil(R / width))
    edges = np.arange(nsh + 1) * width
    for sv in s_list:
        if not complex(sv).real > 1 + k / 2:
            warnings.warn(f"Re(s)={complex(sv).real} outside the absolute-convergence half-plane Re(s) > 1 + k/2")

    if prec > 53:
        return _eval_Psi_mp(chain, P, coset, M, s_list, k, R, edges, width, prec, single=not isinstance(s, (list, tuple)))

    ev = _PsiEvaluator(chain, P, coset)
    S = len(s_list)
    total = np.zeros(S, complex)
    sh_re = np.zeros((S, nsh + 1))
    sh_im = np.zeros((S, nsh + 1))
    sh_abs = np.zeros((S, nsh + 1))
    dy = np.zeros((S, 2), complex)
    count = 0
    for Z, w, xc in iter_coset(coset, M, R, chunk):
        nz = ev.nonzero_x(Z)
        if not nz.all():
            Z, w, xc = Z[nz], w[nz], xc[nz]
        if len(Z) == 0:
            continue
        if np.any(w == 0):
            raise ZeroDivisionError("vanishing pairing x M_i at a nonzero coset point")
        psi = ev(Z, xc)
        sup = np.max(np.abs(w), axis=1)
        shell = np.clip(np.ceil(sup / width - 1e-12).astype(np.int64), 0, nsh)
        inner = (sup > R / 4) & (sup <= R / 2)
        outer = sup > R / 2
        count += len(Z)
        for i, sv in enumerate(s_list):
            term = psi * omega_np(w, complex(sv), k)
            total[i] += term.sum()
            sh_re[i] += np.bincount(shell, weights=term.real, minlength=nsh + 1)
            sh_im[i] += np.bincount(shell, weights=term.imag, minlength=nsh + 1)
            sh_abs[i] += np.bincount(shell, weights=np.abs(term), minlength=nsh + 1)
            dy[i, 0] += term[inner].sum()
            dy[i, 1] += term[outer].sum()
    out = []
    for i, sv in enumerate(s_list):
        sums = sh_re[i, 1:] + 1j * sh_im[i, 1:]
        abs_s = sh_abs[i, 1:]
        abs_s[0] += sh_abs[i, 0]
        tail, beta = _tail_and_exponent(R, edges, abs_s, dy[i, 0], dy[i, 1], width)
        conv = bool(np.isfinite(beta) and beta < -1.0)
        out.append(PsiValue(complex(total[i]), count, tail, R, complex(sv), k, 53,
                            edges.tolist(), sums.tolist(), abs_s.tolist(), beta, conv,
                            complex(sv).real > 1 + k / 2))
    return out if isinstance(s, (list, tuple)) else out[0]


def _eval_Psi_mp(chain, P, coset, M, s_list, k, R, edges, width, prec, single):
    """Per-point mpmath evaluation; meant for small R and cross-checks."""
    terms = _chain_terms(chain)
    nsh = len(edges) - 1
    with mp.workprec(prec + 20):
        Mm = M if isinstance(M, mpmath.matrix) else mpmath.matrix(M.tolist())
        S = len(s_list)
        total = [mpmath.mpc(0)] * S
        shells = [[mpmath.mpc(0)] * nsh for _ in range(S)]
        abs_sh = [[mpmath.mpf(0)] * nsh for _ in range(S)]
        dy = [[mpmath.mpc(0), mpmath.mpc(0)] for _ in range(S)]
        count = 0
        for Z, w, _ in iter_coset(coset, _as_numpy(Mm), R):
            for zrow, wrow in zip(Z, w):
                x = coset.point(zrow.tolist())
                if all(v.is_zero() for v in x):
                    continue
                psi = mpmath.mpc(0)
                for coeff, tup in terms:
                    psi += coeff * eval_psi(tup, P, x, prec)
                sup = float(np.max(np.abs(wrow)))
                sh = min(max(int(math.ceil(sup / width - 1e-12)), 1), nsh) - 1
                count += 1
                for i, sv in enumerate(s_list):
                    t = psi * omega(x, Mm, sv, k, prec)
                    total[i] += t
                    shells[i][sh] += t
                    abs_sh[i][sh] += abs(t)
                    if R / 4 < sup <= R / 2:
                        dy[i][0] += t
                    elif sup > R / 2:
                        dy[i][1] += t
        out = []
        for i, sv in enumerate(s_list):
            abs_s = np.array([float(a) for a in abs_sh[i]])
            tail, beta = _tail_and_exponent(R, edges, abs_s, complex(dy[i][0]), complex(dy[i][1]), width)
            conv = bool(np.isfinite(beta) and beta < -1.0)
            out.append(PsiValue(complex(total[i]), count, tail, R, complex(sv), k, prec,
                                edges.tolist(), [complex(v) for v in shells[i]], abs_s.tolist(), beta, conv,
                                complex(sv).real > 1 + k / 2))
    return out[0] if single else out
