"""Command-line harness: evaluations and verification suites emitting one JSON
record per line.  The process exits 0 iff every check passed."""
from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import warnings
from typing import Iterable

import mpmath
import numpy as np
from mpmath import mp

from . import __version__
from . import suites
from .exact_field import FElem, FieldInstance, build_M, load_instance
from .hecke_l import (HeckeCharData, check_lambda_trivial, direct_full_L, direct_partial_L, eval_Ekl, full_L,
                      partial_L)
from .poly_ops import HomogPoly, norm_form_poly
from .rational_cocycle import FMatrix, eval_psi, select_columns
from .unit_homology import build_cycle

DEFAULT_S = "2.5,3,3+2i"
DEFAULT_RADII = "10,20,40"


# ---------------------------------------------------------------------------
# argument parsing helpers

def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("I", "j").replace("i", "j")
    if t.endswith("j") and (t[:-1] in ("", "+", "-") or t[-2] in "+-"):
        t = t[:-1] + "1j"
    return complex(t)


def parse_complex_list(text: str) -> list[complex]:
    vals = [parse_complex(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty grid")
    return vals


def parse_float_list(text: str) -> list[float]:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals or any(not math.isfinite(v) or v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("grid must be nonempty and positive")
    return vals


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        with open(text) as fh:
            return json.load(fh)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.complexfloating):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (mpmath.mpf, mpmath.mpc)):
        return _jsonable(complex(v)) if isinstance(v, mpmath.mpc) else float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return str(v)


class Reporter:
    """Collects records, writes them as JSON lines and tracks failures."""

    def __init__(self, stream):
        self.stream = stream
        self.checks = 0
        self.failed = 0

    def emit(self, record: dict):
        line = json.dumps(_clean(record), default=_jsonable, sort_keys=False)
        self.stream.write(line + "\n")
        self.stream.flush()

    def checks_out(self, checks: Iterable, **extra):
        for c in checks:
            self.checks += 1
            if not c.ok:
                self.failed += 1
            rec = {"record": "check"}
            rec.update(c.as_record())
            rec.update(extra)
            self.emit(rec)

    def summary(self, status: str | None = None) -> int:
        if status is None:
            status = "pass" if self.failed == 0 else "fail"
        self.emit({"record": "summary", "status": status, "checks": self.checks, "failed": self.failed})
        return 0 if self.failed == 0 else 1


def _clean(v):
    """Replace non-finite floats so every line is strict JSON."""
    if isinstance(v, float):
        return v if math.isfinite(v) else str(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating,)):
        return _clean(float(v))
    return v


def environment(args) -> dict:
    return {"record": "environment", "version": __version__, "command": args.command,
            "precision": args.precision, "seed": args.seed, "python": platform.python_version(),
            "numpy": np.__version__, "mpmath": mpmath.__version__,
            "instances": list(args.instance or [])}


def _instances(args) -> list[FieldInstance]:
    return [load_instance(name) for name in (args.instance or [])]


def _char(args, inst: FieldInstance) -> tuple[int, int]:
    k, l = inst.char or (0, 2)
    return (args.k if args.k is not None else k, args.l if args.l is not None else l)


def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args, rep: Reporter):
    for inst in _instances(args):
        rep.checks_out(suites.check_validation(inst, args.precision), instance=inst.name)


def cmd_eval_psi(args, rep: Reporter):
    insts = _instances(args)
    if args.x is None:
        raise SystemExit("eval-psi needs --x")
    for inst in insts or [None]:
        D = inst.D if inst else args.D
        n = inst.n if inst else None
        x = [FElem.of(v, D) for v in _json_arg(args.x)]
        n = n or len(x)
        if args.tuple is not None:
            tuples = [(1, tuple(FMatrix.of(A, D) for A in _json_arg(args.tuple)))]
        elif inst is not None:
            tuples = build_cycle(inst).terms
        else:
            raise SystemExit("eval-psi needs --instance or --tuple")
        l = args.l if args.l is not None else (_char(args, inst)[1] if inst else 1)
        with mp.workprec(args.precision + 20):
            if inst is not None:
                P = norm_form_poly(build_M(inst, args.precision), "P", l - 1)
            else:
                P = HomogPoly.constant(n, 1)
            for coeff, tup in tuples:
                val = eval_psi(tup, P, x, args.precision)
                exact = isinstance(val, FElem)
                if exact:
                    val = val.to_mpc()
                d = None if all(v.is_zero() for v in x) else list(select_columns(tup, x)[1])
                rep.emit({"record": "value", "op": "eval-psi", "instance": inst.name if inst else None,
                          "coeff": coeff, "d": d, "l": l, "value_re": float(mpmath.re(val)),
                          "value_im": float(mpmath.im(val)), "exact": exact, "precision": args.precision})


def cmd_eval_Psi(args, rep: Reporter):
    for inst in _instances(args):
        k, l = _char(args, inst)
        for R in args.radius:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                vals = suites.psi_side(inst, args.s, R, k, l, prec=args.sum_precision)
            for v in vals:
                rec = {"record": "value", "op": "eval-Psi", "instance": inst.name, "l": l}
                rec.update(v.as_record())
                rep.emit(rec)
            for w in caught:
                rep.emit({"record": "warning", "message": str(w.message)})


def cmd_eval_partial_L(args, rep: Reporter):
    for inst in _instances(args):
        k, l = _char(args, inst)
        for B in args.norm_bound:
            for s in args.s:
                Lv = partial_L(inst, s, k, l, B)
                rec = {"record": "value", "op": "eval-partial-L", "instance": inst.name, "s": _cplx(s), "k": k, "l": l}
                rec.update(Lv.as_record())
                rep.emit(rec)
                if args.direct:
                    Dv = direct_partial_L(inst, s, k, l, B)
                    rec = {"record": "value", "op": "direct-partial-L", "instance": inst.name, "s": _cplx(s),
                           "k": k, "l": l}
                    rec.update(Dv.as_record())
                    rep.emit(rec)


def cmd_eval_L(args, rep: Reporter):
    insts = _instances(args)
    if not insts:
        return
    k, l = _char(args, insts[0])
    for B in args.norm_bound:
        for s in args.s:
            Lv = full_L(insts, HeckeCharData(k, l), s, B)
            rec = {"record": "value", "op": "eval-L", "instances": [i.name for i in insts], "s": _cplx(s),
                   "k": k, "l": l}
            rec.update(Lv.as_record())
            rep.emit(rec)
            if args.direct:
                inst = insts[0]
                if inst.ok_zbasis is None:
                    raise SystemExit(f"{inst.name}: no O_K basis configured for the direct sum")
                Dv = direct_full_L(inst, inst.ok_zbasis, k, l, s, B)
                rec = {"record": "value", "op": "direct-L", "instance": inst.name, "s": _cplx(s), "k": k, "l": l}
                rec.update(Dv.as_record())
                rep.emit(rec)


def cmd_eval_Ekl(args, rep: Reporter):
    lattice = [parse_complex(v) for v in args.lattice.split(",")]
    u = parse_complex(args.u)
    k = args.k if args.k is not None else 0
    l = args.l if args.l is not None else 2
    for R in args.radius:
        for s in args.s:
            val = eval_Ekl(u, lattice, k, l, s, R)
            rep.emit({"record": "value", "op": "eval-Ekl", "lattice": [_cplx(w) for w in lattice], "u": _cplx(u),
                      "k": k, "l": l, "s": _cplx(s), "R": R, "value_re": val.real, "value_im": val.imag})


def _cocycle_suites(rep: Reporter, ns, D: int, trials: int, seed: int, prec: int):
    for n in ns:
        rep.checks_out(suites.check_cocycle(n, trials, seed, prec, D))
        rep.checks_out(suites.check_homogeneity(n, trials, seed, prec, D))


def cmd_check_cocycle(args, rep: Reporter):
    insts = _instances(args)
    ns = sorted({i.n for i in insts}) if insts else args.n
    D = insts[0].D if insts else args.D
    _cocycle_suites(rep, ns, D, args.trials, args.seed, args.precision)
    factor_insts = insts or [load_instance({2: "worked_order", 3: "cubic7"}[n]) for n in ns if n in (2, 3)]
    for inst in factor_insts:
        rep.checks_out(suites.check_factor(inst, args.trials, args.seed, args.precision))


def cmd_check_parametrization(args, rep: Reporter):
    for inst in _instances(args):
        k, l = _char(args, inst)
        checks, rows = suites.check_parametrization(inst, args.s, args.radius, k, l, args.tolerance,
                                                    prec=args.sum_precision)
        for row in rows:
            rep.emit(row)
        rep.checks_out(checks)
        if inst.index is not None and args.variants:
            checks, rows = suites.check_generator_independence(inst, args.s, max(args.radius), k, l,
                                                               prec=args.sum_precision)
            for row in rows:
                rep.emit(row)
            rep.checks_out(checks)


def cmd_run_all(args, rep: Reporter):
    insts = _instances(args)
    if not insts:
        return "nothing-run"
    by_field = {}
    for inst in insts:
        by_field.setdefault(inst.D, set()).add(inst.n)
    for D, ns in sorted(by_field.items()):
        _cocycle_suites(rep, sorted(ns), D, args.trials, args.seed, args.precision)
    for inst in insts:
        k, l = _char(args, inst)
        small = inst.n >= 3
        rep.checks_out(suites.check_validation(inst, args.precision))
        rep.checks_out(suites.check_poly_properties(inst, seed=args.seed, prec=args.precision))
        rep.checks_out(suites.check_factor(inst, args.trials, args.seed, args.precision))
        rep.checks_out(suites.check_coset_bijection(inst, 3.0 if small else 6.0))
        rep.checks_out(suites.check_norm_form(inst, 4.0 if small else 20.0, args.precision))
        rep.checks_out(suites.check_convergence_flag(inst, R=6.0 if small else 20.0))
        if inst.index is not None and not check_lambda_trivial(inst, k, l):
            checks, rows = suites.check_parametrization(inst, args.s, args.radius, k, l, args.tolerance,
                                                        prec=args.sum_precision)
            for row in rows:
                rep.emit(row)
            rep.checks_out(checks)
            if args.variants:
                checks, rows = suites.check_generator_independence(inst, args.s, max(args.radius), k, l,
                                                                   prec=args.sum_precision)
                for row in rows:
                    rep.emit(row)
                rep.checks_out(checks)
        elif inst.index is not None:
            rep.emit({"record": "skip", "suite": "parametrization", "instance": inst.name,
                      "reason": f"lambda is not trivial on U_f for (k, l) = ({k}, {l})"})
        if inst.full_torsion is not None and inst.ok_zbasis is not None:
            for s in args.s:
                if complex(s).real > 1:
                    rep.checks_out(suites.check_assembly(inst, s, max(args.norm_bound), k, l))
    return None


COMMANDS = {
    "validate": cmd_validate,
    "eval-psi": cmd_eval_psi,
    "eval-Psi": cmd_eval_Psi,
    "eval-partial-L": cmd_eval_partial_L,
    "eval-L": cmd_eval_L,
    "eval-Ekl": cmd_eval_Ekl,
    "check-cocycle": cmd_check_cocycle,
    "check-parametrization": cmd_check_parametrization,
    "run-all": cmd_run_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", action="append",
                        help="instance JSON file or builtin name (worked_order, zeta8_conductor, cubic7); repeatable")
    common.add_argument("--s", type=parse_complex_list, default=parse_complex_list(DEFAULT_S),
                        help=f"comma-separated complex s values, e.g. '2.5,3+2i' (default {DEFAULT_S})")
    common.add_argument("--radius", type=parse_float_list, default=parse_float_list(DEFAULT_RADII),
                        help=f"comma-separated sup-norm radii R (default {DEFAULT_RADII})")
    common.add_argument("--norm-bound", type=parse_float_list, default=None,
                        help="comma-separated norm bounds B (default R^2 for each radius)")
    common.add_argument("--precision", type=int, default=128, help="bits for exact-input checks (>= 64)")
    common.add_argument("--sum-precision", type=int, default=53,
                        help="bits for lattice sums; 53 uses numpy, larger values use mpmath per point")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write records to this file instead of stdout")
    common.add_argument("--k", type=int, default=None)
    common.add_argument("--l", type=int, default=None)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--n", type=lambda t: [int(v) for v in t.split(",")], default=[2, 3])
    common.add_argument("--D", type=int, default=1, help="F = Q(sqrt(-D)) when no instance is given")
    common.add_argument("--tolerance", type=float, default=1e-6,
                        help="relative tolerance for the parametrization check at the largest radius")
    common.add_argument("--direct", action="store_true", help="also run the direct orbit-sum oracle")
    common.add_argument("--variants", action="store_true", help="also check equivalent unit generator sets")
    common.add_argument("--x", help="JSON row vector for eval-psi, entries 'a' or [a, b] for a + b sqrt(-D)")
    common.add_argument("--tuple", help="JSON list of matrices (inline or file) for eval-psi")
    common.add_argument("--lattice", default="1,i", help="eval-Ekl lattice basis, e.g. '1,i'")
    common.add_argument("--u", default="0", help="eval-Ekl coset offset")

    parser = argparse.ArgumentParser(prog="eiscocycle", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.precision < 64:
        parser.error("--precision must be at least 64")
    if args.norm_bound is None:
        args.norm_bound = [r * r for r in args.radius]
    stream = open(args.out, "w") if args.out else sys.stdout
    try:
        rep = Reporter(stream)
        rep.emit(environment(args))
        with mp.workprec(args.precision):
            status = COMMANDS[args.command](args, rep)
        return rep.summary(status if status and rep.checks == 0 else None)
    finally:
        if args.out:
            stream.close()


if __name__ == "__main__":
    sys.exit(main())
