"""Verification suites.  Each returns a list of Check records; a failed check
always carries a witness so a report can be acted on without rerunning."""
from __future__ import annotations

import math
import random
import warnings
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp

from .eisenstein_sum import LatticeCoset, eval_Psi, iter_coset, omega
from .exact_field import Check, FElem, FieldInstance, KElem, ZLattice, build_M, fone, validate_instance
from .hecke_l import (AffineNormForm, HeckeCharData, _m_basis_forms, check_lambda_trivial, direct_full_L,
                      full_L, partial_L)
from .poly_ops import act, divided_power_expansion, expand_Pr, norm_form_poly, random_poly
from .rational_cocycle import (FMatrix, cocycle_residual, eval_psi, random_gl, random_x, row_times)
from .unit_homology import build_cycle, varrho


def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _mat_witness(tup) -> list:
    return [A.to_json() for A in tup]


# ---------------------------------------------------------------------------
# cocycle relation, homogeneity and the factor identity

def check_cocycle(n: int, trials: int = 1000, seed: int = 0, prec: int = 128, D: int = 1,
                  max_degree: int = 2, rel_tol_bits: int = 96) -> list[Check]:
    """Alternating sum of psi over (n+1)-tuples from GL_n(O_F).

    Every tenth trial duplicates one matrix of the tuple so that faces with
    shared columns (det sigma = 0 terms) are exercised too."""
    rng = random.Random(f"cocycle/{n}/{D}/{seed}")
    tol = 2.0 ** -rel_tol_bits
    worst = 0.0
    worst_trial = None
    failures = []
    for t in range(trials):
        tup = [random_gl(n, D, rng, height=3) for _ in range(n + 1)]
        if t % 10 == 9:
            i, j = rng.sample(range(n + 1), 2)
            tup[i] = tup[j]
        x = random_x(n, D, rng, height=5)
        P = random_poly(n, rng.randint(0, max_degree), rng)
        resid, scale = cocycle_residual(tup, P, x, prec)
        ratio = float(resid / scale) if scale else 0.0
        if ratio > worst:
            worst, worst_trial = ratio, t
        if ratio > tol and len(failures) < 3:
            failures.append({"trial": t, "ratio": ratio, "x": [v.to_json() for v in x],
                             "tuple": _mat_witness(tup), "degree": P.degree})
    ok = not failures
    return [Check(f"cocycle relation n={n}", ok, failures or None, measured=worst, expected=0.0,
                  tolerance=tol, params={"n": n, "D": D, "trials": trials, "seed": seed, "precision": prec,
                                         "max_degree": max_degree, "worst_trial": worst_trial})]


def check_homogeneity(n: int, trials: int = 1000, seed: int = 0, prec: int = 128, D: int = 1,
                      max_degree: int = 2, rel_tol_bits: int = 96) -> list[Check]:
    """psi(A tuple)(P, x) = det(A) psi(tuple)(A^T P, x A)."""
    rng = random.Random(f"homogeneity/{n}/{D}/{seed}")
    tol = 2.0 ** -rel_tol_bits
    worst = 0.0
    failures = []
    for t in range(trials):
        A = random_gl(n, D, rng, height=3)
        tup = [random_gl(n, D, rng, height=3) for _ in range(n)]
        x = random_x(n, D, rng, height=5)
        P = random_poly(n, rng.randint(0, max_degree), rng)
        with mp.workprec(prec + 20):
            lhs = eval_psi([A @ T for T in tup], P, x, prec)
            PA = act(A.T.to_mpmath(prec), P)
            rhs = A.det().to_mpc() * eval_psi(tup, PA, row_times(x, A), prec)
            scale = max(abs(lhs), abs(rhs))
            ratio = float(abs(lhs - rhs) / scale) if scale else 0.0
        worst = max(worst, ratio)
        if ratio > tol and len(failures) < 3:
            failures.append({"trial": t, "ratio": ratio, "A": A.to_json(), "x": [v.to_json() for v in x]})
    return [Check(f"homogeneity n={n}", not failures, failures or None, measured=worst, expected=0.0,
                  tolerance=tol, params={"n": n, "D": D, "trials": trials, "seed": seed, "precision": prec})]


def check_factor(inst: FieldInstance, trials: int = 1000, seed: int = 0, prec: int = 128,
                 rel_tol_bits: int = 96) -> list[Check]:
    """Omega_s^k(x sigma, M) = Omega_s^k(x, sigma M) for random sigma in GL_n(O_F)."""
    rng = random.Random(f"factor/{inst.name}/{seed}")
    n, D = inst.n, inst.D
    tol = 2.0 ** -rel_tol_bits
    worst = 0.0
    failures = []
    with mp.workprec(prec + 20):
        M = build_M(inst, prec)
        for t in range(trials):
            sigma = random_gl(n, D, rng, height=3)
            x = random_x(n, D, rng, height=5, p_zero=0.0)
            k = rng.randint(0, 3)
            s = mpmath.mpc(1 + k / 2 + rng.uniform(0.05, 3), rng.uniform(-3, 3))
            xs = row_times(x, sigma)
            try:
                lhs = omega(xs, M, s, k, prec)
            except ZeroDivisionError:
                continue
            rhs = omega(x, sigma.to_mpmath(prec) * M, s, k, prec)
            ratio = float(abs(lhs - rhs) / abs(lhs))
            worst = max(worst, ratio)
            if ratio > tol and len(failures) < 3:
                failures.append({"trial": t, "ratio": ratio, "sigma": sigma.to_json(), "s": _cplx(s), "k": k})
    return [Check(f"factor identity ({inst.name})", not failures, failures or None, measured=worst,
                  expected=0.0, tolerance=tol, params={"trials": trials, "seed": seed, "precision": prec})]


# ---------------------------------------------------------------------------
# polynomial properties

def check_poly_properties(inst: FieldInstance, trials: int = 50, seed: int = 0, prec: int = 128) -> list[Check]:
    rng = random.Random(f"poly/{inst.name}/{seed}")
    n, D = inst.n, inst.D
    tol = 2.0 ** (8 - prec)
    out = []
    worst = 0.0
    witness = None
    with mp.workprec(prec + 20):
        for t in range(trials):
            sigma = mpmath.matrix([[mpmath.mpc(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(n)]
                                   for _ in range(n)])
            g = [rng.randint(0, 2) for _ in range(n)]
            via_act = expand_Pr(_divided(g), sigma)
            via_sum = divided_power_expansion(g, sigma)
            keys = set(via_act) | set(via_sum)
            err = max((abs(via_act.get(r, 0) - via_sum.get(r, 0)) for r in keys), default=0)
            scale = max((abs(v) for v in via_act.values()), default=1) or 1
            ratio = float(err / scale)
            if ratio > worst:
                worst = ratio
                if ratio > tol:
                    witness = {"trial": t, "g": g, "ratio": ratio}
        out.append(Check(f"divided-power expansion matches substitution ({inst.name})", witness is None, witness,
                         measured=worst, expected=0.0, tolerance=tol,
                         params={"trials": trials, "seed": seed, "precision": prec}))

        M = build_M(inst, prec)
        P1 = norm_form_poly(M, "P", 1)
        Q1 = norm_form_poly(M, "Q", 1)
        units = [u for u in list(inst.units) + list(inst.uf_free or []) if u.rel_norm() == fone(D)]
        worst = 0.0
        witness = None
        for u in units:
            A = varrho(u, inst).to_mpmath(prec)
            eP = act(A.T, P1).max_abs_diff(P1)
            eQ = act(A, Q1).max_abs_diff(Q1)
            e = float(max(eP, eQ))
            worst = max(worst, e)
            if e > tol * 64 and witness is None:
                witness = {"unit": u.to_json(), "err_P": float(eP), "err_Q": float(eQ)}
        out.append(Check(f"norm forms invariant under relative-norm-1 units ({inst.name})", witness is None, witness,
                         measured=worst, expected=0.0, tolerance=tol * 64,
                         params={"units": len(units), "precision": prec}))
    return out


def _divided(g):
    from .poly_ops import HomogPoly
    return HomogPoly.divided_power(g)


# ---------------------------------------------------------------------------
# norm-form link and coset bijection

def _exact_x_parts(coset: LatticeCoset, Z: np.ndarray):
    """Integer numerators (re, im-coefficient) and denominators of each x_i."""
    n = coset.n
    out = []
    for i in range(n):
        e = [fone(coset.D) * (1 if j == i else 0) for j in range(n)]
        c_re, v_re, c_im, v_im, den = coset.int_form(e)
        re = [int(v) for v in (Z.astype(object) @ v_re.astype(object) + c_re)]
        im = [int(v) for v in (Z.astype(object) @ v_im.astype(object) + c_im)]
        out.append((re, im, den))
    return out


def check_norm_form(inst: FieldInstance, R: float = 20.0, prec: int = 128, rel_tol_bits: int = 96) -> list[Check]:
    """Q(x) = N_{K/F}(xi) and |Q(x)|^2 = N_{K/Q}(xi) for every coset point with
    sup-norm <= R; Q is evaluated from its polynomial coefficients at `prec` bits
    and compared with the exact integer norm of xi = sum x_i m_i."""
    tol = 2.0 ** -rel_tol_bits
    n = inst.n
    coset = LatticeCoset.from_instance(inst)
    base, gens = _m_basis_forms(inst)
    norm = AffineNormForm(base, gens)
    sqrtD = None
    worst_rel = worst_abs = 0.0
    witness = None
    count = 0
    with mp.workprec(prec + 20):
        M = build_M(inst, prec)
        Q = norm_form_poly(M, "Q", 1)
        Qterms = list(Q.items())
        sqrtD = mpmath.sqrt(inst.D) * 1j
        Mn = np.array([[complex(M[i, j]) for j in range(n)] for i in range(n)])
        for Z, _, _ in iter_coset(coset, Mn, R):
            parts = _exact_x_parts(coset, Z)
            A, B = norm(Z)
            den = norm.den
            for p in range(len(Z)):
                x = [(mpmath.mpf(re[p]) + mpmath.mpf(im[p]) * sqrtD) / d for re, im, d in parts]
                if all(v == 0 for v in x):
                    continue
                count += 1
                q = mpmath.mpc(0)
                for r, c in Qterms:
                    term = c
                    for xi, e in zip(x, r):
                        if e:
                            term *= xi ** e
                    q += term
                exact_rel = (mpmath.mpf(int(A[p])) + mpmath.mpf(int(B[p])) * sqrtD) / den
                exact_abs = (mpmath.mpf(int(A[p])) ** 2 + inst.D * mpmath.mpf(int(B[p])) ** 2) / den ** 2
                e1 = float(abs(q - exact_rel) / abs(exact_rel))
                e2 = float(abs(abs(q) ** 2 - exact_abs) / exact_abs)
                worst_rel = max(worst_rel, e1)
                worst_abs = max(worst_abs, e2)
                if (e1 > tol or e2 > tol) and witness is None:
                    witness = {"z": Z[p].tolist(), "Q": _cplx(q), "N_rel": _cplx(exact_rel), "err_rel": e1, "err_abs": e2}
    params = {"R": R, "points": count, "precision": prec}
    return [Check(f"Q(x) = N_K/F(xi) ({inst.name})", worst_rel <= tol, witness if worst_rel > tol else None,
                  measured=worst_rel, expected=0.0, tolerance=tol, params=params),
            Check(f"|Q(x)|^2 = N_K/Q(xi) ({inst.name})", worst_abs <= tol, witness if worst_abs > tol else None,
                  measured=worst_abs, expected=0.0, tolerance=tol, params=params)]


def check_coset_bijection(inst: FieldInstance, R: float = 6.0) -> list[Check]:
    """x in Lambda + u with sup|xM| <= R maps onto xi in f b^-1 + r with
    max|rho_i(xi)| <= R.  The right-hand set is enumerated independently by an
    integer box in the supplied Z-basis of f b^-1."""
    n = inst.n
    K = inst.K
    coset = LatticeCoset.from_instance(inst)
    M = build_M(inst, 64)
    Mn = np.array([[complex(M[i, j]) for j in range(n)] for i in range(n)])

    zb = list(inst.fb_inv_zbasis)
    allq = [c for b in zb + [inst.r] + list(inst.m) for c in b.q_coords()]
    den = 1
    for c in allq:
        den = den * c.denominator // math.gcd(den, c.denominator)

    left = set()
    bad_membership = None
    base, gens = _m_basis_forms(inst)
    base_q = base.q_coords()
    gens_q = np.array([[int(c * den) for c in g.q_coords()] for g in gens], dtype=object)
    lat = ZLattice(zb)
    for Z, _, _ in iter_coset(coset, Mn, R):
        Q = Z.astype(object) @ gens_q + np.array([int(c * den) for c in base_q], dtype=object)
        for row in Q:
            left.add(tuple(int(v) for v in row))
    for key in list(left)[:200]:
        xi = _k_from_q(K, key, den)
        if not lat.contains(xi - inst.r) and bad_membership is None:
            bad_membership = list(key)

    # independent enumeration over the Z-basis of f b^-1
    embed = np.array([[complex(K.embed(b, i + 1, 64)) for i in range(n)] for b in zb])
    r_emb = np.array([complex(K.embed(inst.r, i + 1, 64)) for i in range(n)])
    G = np.concatenate([embed.real, embed.imag], axis=1)          # (2n, 2n): row k = basis element k
    t = np.concatenate([r_emb.real, r_emb.imag])
    Ginv = np.linalg.inv(G)
    # xi = t + z G, so z = (y - t) Ginv with |y_j| <= R
    bound = np.abs(Ginv).sum(axis=0) * R + np.abs(t @ Ginv) + 1
    ranges = [np.arange(-math.ceil(b), math.ceil(b) + 1) for b in bound]
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, 2 * n)
    y = t + grid @ G
    emb = y[:, :n] + 1j * y[:, n:]
    keep = np.max(np.abs(emb), axis=1) <= R * (1 + 1e-12)
    zq = np.array([[int(c * den) for c in b.q_coords()] for b in zb], dtype=object)
    rq = np.array([int(c * den) for c in inst.r.q_coords()], dtype=object)
    right = set()
    for row in grid[keep].astype(object) @ zq + rq:
        right.add(tuple(int(v) for v in row))
    ok = left == right and bad_membership is None
    witness = None
    if not ok:
        witness = {"only_eisenstein_side": [list(v) for v in sorted(left - right)[:5]],
                   "only_ideal_side": [list(v) for v in sorted(right - left)[:5]],
                   "not_in_coset": bad_membership}
    return [Check(f"coset bijection x <-> xi ({inst.name})", ok, witness, measured=[len(left), len(right)],
                  params={"R": R})]


def _k_from_q(K, key, den) -> KElem:
    """Inverse of q_coords after scaling by den."""
    n = len(key) // 2
    return KElem(K, tuple(FElem(Fraction(key[2 * j], den), Fraction(key[2 * j + 1], den), K.D) for j in range(n)))


# ---------------------------------------------------------------------------
# the main identity and its variants

def psi_side(inst: FieldInstance, s_list, R: float, k: int, l: int, generators=None, prec: int = 53):
    """Psi_s(E)(P^(l-1)) on the instance's coset, summed to sup-norm R."""
    with mp.workprec(128):
        M = build_M(inst, 128)
        P = norm_form_poly(M, "P", l - 1)
    E = build_cycle(inst, generators)
    coset = LatticeCoset.from_instance(inst)
    return eval_Psi(E, P, coset, M, list(s_list), k, R, prec=prec)


def main_constant(inst: FieldInstance, l: int, index) -> complex:
    """det(M) ((l-1)!)^n [U_f:V]."""
    with mp.workprec(128):
        detM = mpmath.det(build_M(inst, 128))
    return complex(detM) * math.factorial(l - 1) ** inst.n * index


def check_parametrization(inst: FieldInstance, s_list, R_grid, k: int = 0, l: int = 2, rel_tol: float = 1e-6,
                          prec: int = 53) -> tuple[list[Check], list[dict]]:
    """Psi side against det(M) ((l-1)!)^n [U_f:V] L(b, r, s) on matched grids B = R^2."""
    if inst.index is None:
        return [Check(f"parametrization ({inst.name})", False, "index [U_f:V_f] not configured")], []
    bad = check_lambda_trivial(inst, k, l)
    if bad:
        return [Check(f"parametrization ({inst.name})", False, {"lambda_not_trivial_on": bad})], []
    const = main_constant(inst, l, inst.index)
    rows = []
    diffs = {complex(s): [] for s in s_list}
    for R in R_grid:
        B = float(R) ** 2
        psis = psi_side(inst, s_list, R, k, l, prec=prec)
        for s, pv in zip(s_list, psis):
            Lv = partial_L(inst, s, k, l, B)
            rhs = const * Lv.value
            rel = abs(pv.value - rhs) / abs(rhs)
            diffs[complex(s)].append(rel)
            rows.append({"record": "grid", "instance": inst.name, "s": _cplx(s), "k": k, "l": l, "R": R, "B": B,
                         "psi_re": pv.value.real, "psi_im": pv.value.imag,
                         "rhs_re": rhs.real, "rhs_im": rhs.imag, "rel_diff": rel,
                         "psi_tail": pv.tail_estimate, "L_tail": Lv.tail_estimate,
                         "psi_terms": pv.terms_summed, "L_terms": Lv.terms})
    checks = []
    for s, ds in diffs.items():
        monotone = all(b < a for a, b in zip(ds, ds[1:]))
        final_ok = ds[-1] <= rel_tol
        ok = monotone and final_ok
        witness = None if ok else {"rel_diffs": ds, "monotone": monotone, "final_below_tolerance": final_ok}
        checks.append(Check(f"parametrization s={_fmt(s)} ({inst.name})", ok, witness, measured=ds[-1],
                            expected=0.0, tolerance=rel_tol,
                            params={"R_grid": list(R_grid), "B_grid": [float(R) ** 2 for R in R_grid],
                                    "k": k, "l": l, "rel_diffs": ds}))
    return checks, rows


def _fmt(s: complex) -> str:
    s = complex(s)
    return f"{s.real:g}" if s.imag == 0 else f"{s.real:g}{s.imag:+g}i"


def generator_variants(inst: FieldInstance):
    """(label, generators, index) for the base set and its equivalent replacements."""
    gens = list(inst.units)
    out = [("base", gens, inst.index), ("eps1^-1", [gens[0].inverse()] + gens[1:], inst.index)]
    if len(gens) >= 2:
        out.append(("eps1*eps2", [gens[0] * gens[1]] + gens[1:], inst.index))
    if inst.index is not None:
        out.append(("eps1^2", [gens[0] * gens[0]] + gens[1:], 2 * inst.index))
    return out


def check_generator_independence(inst: FieldInstance, s_list, R: float, k: int = 0, l: int = 2,
                                 prec: int = 53) -> tuple[list[Check], list[dict]]:
    """Psi_s(E)(P^(l-1)) / (det M ((l-1)!)^n [U_f:V]) for equivalent generator sets."""
    if inst.index is None:
        return [Check(f"generator independence ({inst.name})", False, "index not configured")], []
    rows = []
    values = {}
    for label, gens, idx in generator_variants(inst):
        const = main_constant(inst, l, idx)
        for s, pv in zip(s_list, psi_side(inst, s_list, R, k, l, generators=gens, prec=prec)):
            val = pv.value / const
            tail = pv.tail_estimate / abs(const)
            values[(label, complex(s))] = (val, tail)
            rows.append({"record": "variant", "instance": inst.name, "variant": label, "index": idx,
                         "s": _cplx(s), "R": R, "value_re": val.real, "value_im": val.imag, "tail_estimate": tail})
    checks = []
    for label, _, _ in generator_variants(inst)[1:]:
        for s in s_list:
            v0, t0 = values[("base", complex(s))]
            v1, t1 = values[(label, complex(s))]
            diff = abs(v1 - v0)
            tol = t0 + t1
            ok = diff <= tol
            checks.append(Check(f"generators {label} vs base s={_fmt(s)} ({inst.name})", ok,
                                None if ok else {"base": _cplx(v0), "variant": _cplx(v1), "diff": diff},
                                measured=diff, expected=0.0, tolerance=tol, params={"R": R, "k": k, "l": l}))
    return checks, rows


def check_assembly(inst: FieldInstance, s, B: float, k: int, l: int, tail_cap: float = 1e-5) -> list[Check]:
    """full_L from residue-class partial sums against the direct sum over principal
    ideals of O_K (class number one, trivial phi)."""
    if inst.full_torsion is None or inst.ok_zbasis is None:
        return []
    a = full_L([inst], HeckeCharData(k, l), s, B)
    b = direct_full_L(inst, inst.ok_zbasis, k, l, s, B)
    diff = abs(a.value - b.value)
    tails = a.tail_estimate + b.tail_estimate
    # summation rounding in double precision, one ulp per term
    rounding = (a.terms + b.terms) * 2.0 ** -53 * max(abs(a.value), abs(b.value))
    ok = diff <= tails + rounding and tails <= tail_cap
    return [Check(f"full L = direct ideal sum s={_fmt(s)} ({inst.name})", ok,
                  None if ok else {"full_L": _cplx(a.value), "direct": _cplx(b.value), "tails": tails},
                  measured=diff, expected=0.0, tolerance=tails + rounding,
                  params={"B": B, "k": k, "l": l, "s": _cplx(s), "full_L_tail": a.tail_estimate,
                          "direct_tail": b.tail_estimate, "tail_cap": tail_cap,
                          "full_L_re": a.value.real, "full_L_im": a.value.imag,
                          "terms": [a.terms, b.terms]})]


def check_convergence_flag(inst: FieldInstance, R: float = 20.0, s_in: complex = 1.6, s_out: complex = 0.4,
                           k: int = 0) -> list[Check]:
    """Inside Re(s) > 1 + k/2 the absolute shell density decays faster than
    r^-1; outside it the nonconvergence flag must be raised (P = 1)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v_in, v_out = psi_side(inst, [s_in, s_out], R, k, 1)
    ok_in = v_in.converged and v_in.in_half_plane
    ok_out = (not v_out.converged) and (not v_out.in_half_plane)
    return [Check(f"shell sums decay at s={_fmt(s_in)} ({inst.name})", ok_in,
                  None if ok_in else {"exponent": v_in.exponent, "shell_abs": v_in.shell_abs},
                  measured=v_in.exponent, expected="< -1", params={"R": R, "k": k, "l": 1}),
            Check(f"nonconvergence flagged at s={_fmt(s_out)} ({inst.name})", ok_out,
                  None if ok_out else {"exponent": v_out.exponent, "shell_abs": v_out.shell_abs},
                  measured=v_out.exponent, expected=">= -1", params={"R": R, "k": k, "l": 1})]


def check_validation(inst: FieldInstance, prec: int = 128) -> list[Check]:
    checks = validate_instance(inst, prec)
    for c in checks:
        c.name = f"{c.name} ({inst.name})"
    return checks
