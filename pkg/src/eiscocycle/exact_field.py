"""Exact arithmetic in an imaginary quadratic field F = Q(sqrt(-D)) and in a
relative extension K = F(theta), plus complex embeddings and instance data.

Elements of F are pairs of Fractions.  Elements of K are coordinate vectors
over F in the power basis 1, theta, ..., theta^(n-1).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

import mpmath
from mpmath import mp


class PrecisionError(ArithmeticError):
    """Raised when a certified bound cannot be met at the working precision."""


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    raise TypeError(f"cannot read exact rational from {v!r}")


def mpq(q: Fraction) -> mpmath.mpf:
    """A Fraction as an mpf at the current working precision."""
    return mpmath.mpf(q.numerator) / q.denominator


def frac_to_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, slots=True)
class FElem:
    """a + b*sqrt(-D) with rational a, b."""

    a: Fraction
    b: Fraction
    D: int

    @classmethod
    def of(cls, v, D: int) -> "FElem":
        if isinstance(v, FElem):
            if v.D != D:
                raise ValueError("mixing different quadratic fields")
            return v
        if isinstance(v, (list, tuple)):
            return cls(_frac(v[0]), _frac(v[1]), D)
        return cls(_frac(v), Fraction(0), D)

    def _coerce(self, other) -> "FElem":
        if isinstance(other, FElem):
            if other.D != self.D:
                raise ValueError("mixing different quadratic fields")
            return other
        if isinstance(other, (int, Fraction)):
            return FElem(Fraction(other), Fraction(0), self.D)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FElem(self.a + o.a, self.b + o.b, self.D)

    __radd__ = __add__

    def __neg__(self):
        return FElem(-self.a, -self.b, self.D)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FElem(self.a - o.a, self.b - o.b, self.D)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FElem(self.a * o.a - self.D * self.b * o.b, self.a * o.b + self.b * o.a, self.D)

    __rmul__ = __mul__

    def conj(self) -> "FElem":
        return FElem(self.a, -self.b, self.D)

    def norm(self) -> Fraction:
        """N_{F/Q}(x) = a^2 + D b^2."""
        return self.a * self.a + self.D * self.b * self.b

    def inverse(self) -> "FElem":
        nrm = self.norm()
        if nrm == 0:
            raise ZeroDivisionError("inverse of zero in F")
        return FElem(self.a / nrm, -self.b / nrm, self.D)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = FElem(Fraction(1), Fraction(0), self.D)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other) if not isinstance(other, FElem) else other
        if o is NotImplemented:
            return False
        return self.a == o.a and self.b == o.b and self.D == o.D

    def __hash__(self):
        return hash((self.a, self.b, self.D))

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __bool__(self):
        return not self.is_zero()

    def height(self) -> int:
        """Max absolute value of numerators and denominators of a, b."""
        return max(abs(self.a.numerator), self.a.denominator, abs(self.b.numerator), self.b.denominator)

    def to_mpc(self, prec: int | None = None) -> mpmath.mpc:
        if prec is None:
            return mpmath.mpc(mpq(self.a), mpq(self.b) * mpmath.sqrt(self.D))
        with mp.workprec(prec + 10):
            v = mpmath.mpc(mpq(self.a), mpq(self.b) * mpmath.sqrt(self.D))
        return v

    def __complex__(self):
        return complex(float(self.a), float(self.b) * self.D ** 0.5)

    def to_json(self):
        return [frac_to_str(self.a), frac_to_str(self.b)]

    def __repr__(self):
        return f"F({frac_to_str(self.a)}{'+' if self.b >= 0 else '-'}{frac_to_str(abs(self.b))}*s)"


def fzero(D: int) -> FElem:
    return FElem(Fraction(0), Fraction(0), D)


def fone(D: int) -> FElem:
    return FElem(Fraction(1), Fraction(0), D)


# ---------------------------------------------------------------------------
# small exact linear algebra over F

def f_det(rows: Sequence[Sequence[FElem]], D: int) -> FElem:
    """Determinant by Gaussian elimination over F (exact)."""
    a = [list(r) for r in rows]
    n = len(a)
    det = fone(D)
    for c in range(n):
        piv = next((r for r in range(c, n) if not a[r][c].is_zero()), None)
        if piv is None:
            return fzero(D)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        p = a[c][c]
        det = det * p
        pinv = p.inverse()
        for r in range(c + 1, n):
            if a[r][c].is_zero():
                continue
            fac = a[r][c] * pinv
            for j in range(c, n):
                a[r][j] = a[r][j] - fac * a[c][j]
    return det


def f_solve(rows: Sequence[Sequence[FElem]], rhs: Sequence[FElem], D: int) -> list[FElem]:
    """Solve A y = rhs exactly over F. Raises ZeroDivisionError if singular."""
    n = len(rows)
    a = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next((r for r in range(c, n) if not a[r][c].is_zero()), None)
        if piv is None:
            raise ZeroDivisionError("singular system over F")
        a[c], a[piv] = a[piv], a[c]
        pinv = a[c][c].inverse()
        a[c] = [v * pinv for v in a[c]]
        for r in range(n):
            if r != c and not a[r][c].is_zero():
                fac = a[r][c]
                a[r] = [vr - fac * vc for vr, vc in zip(a[r], a[c])]
    return [a[i][n] for i in range(n)]


def q_solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction] | None:
    """Solve a square rational system; None if singular."""
    n = len(rows)
    a = [[Fraction(v) for v in r] + [Fraction(rhs[i])] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return None
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [v / p for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                fac = a[r][c]
                a[r] = [vr - fac * vc for vr, vc in zip(a[r], a[c])]
    return [a[i][n] for i in range(n)]


# ---------------------------------------------------------------------------
# the extension K

class KField:
    """K = F(theta), theta a root of the monic polynomial
    X^n + c_{n-1} X^{n-1} + ... + c_0 with c_i in F."""

    def __init__(self, D: int, minpoly: Sequence[FElem]):
        self.D = D
        self.n = len(minpoly)
        self.minpoly = tuple(FElem.of(c, D) for c in minpoly)
        self._build_table()

    def _build_table(self):
        n, D = self.n, self.D
        # powers theta^0 .. theta^(2n-2) as coordinate vectors
        powers = []
        for e in range(2 * n - 1):
            if e < n:
                v = [fzero(D)] * n
                v[e] = fone(D)
            else:
                prev = powers[-1]
                # theta * prev, reducing theta^n = -sum c_i theta^i
                top = prev[n - 1]
                v = [fzero(D)] + list(prev[: n - 1])
                v = [v[i] - top * self.minpoly[i] for i in range(n)]
            powers.append(tuple(v))
        self.table = [[powers[i + j] for j in range(n)] for i in range(n)]

    def elem(self, coords) -> "KElem":
        return KElem(self, tuple(FElem.of(c, self.D) for c in coords))

    def from_F(self, x) -> "KElem":
        c = [fzero(self.D)] * self.n
        c[0] = FElem.of(x, self.D)
        return KElem(self, tuple(c))

    def one(self) -> "KElem":
        return self.from_F(1)

    def zero(self) -> "KElem":
        return self.from_F(0)

    def theta(self) -> "KElem":
        c = [fzero(self.D)] * self.n
        c[1 % self.n] = fone(self.D)
        return KElem(self, tuple(c))

    def __eq__(self, other):
        return isinstance(other, KField) and self.D == other.D and self.minpoly == other.minpoly

    def __hash__(self):
        return hash((self.D, self.minpoly))

    # embeddings ------------------------------------------------------------

    def theta_images(self, prec: int = 128) -> list[mpmath.mpc]:
        """Roots of the minimal polynomial at `prec` bits, sorted in
        descending lexicographic order of (real, imag)."""
        return _theta_images_cached(self.D, self.minpoly, prec)

    def embed(self, x: "KElem", i: int, prec: int = 128) -> mpmath.mpc:
        """rho_i(x), 1-based embedding index."""
        if not 1 <= i <= self.n:
            raise IndexError("embedding index out of range")
        th = self.theta_images(prec)[i - 1]
        with mp.workprec(prec + 20):
            acc = mpmath.mpc(0)
            for c in reversed(x.coords):
                acc = acc * th + c.to_mpc()
        return acc

    def embed_all(self, x: "KElem", prec: int = 128) -> list[mpmath.mpc]:
        return [self.embed(x, i, prec) for i in range(1, self.n + 1)]


def _theta_images_cached(D, minpoly, prec, _cache={}):
    key = (D, minpoly, prec)
    if key in _cache:
        return _cache[key]
    n = len(minpoly)
    with mp.workprec(prec + 40):
        coeffs = [mpmath.mpc(1)] + [minpoly[i].to_mpc() for i in reversed(range(n))]
        if n == 1:
            roots = [-coeffs[1]]
            err = mpmath.mpf(0)
        else:
            roots, err = mpmath.polyroots(coeffs, maxsteps=200, extraprec=2 * prec + 40, error=True)
        roots = sorted(roots, key=lambda z: (mpmath.re(z), mpmath.im(z)), reverse=True)
        sep = min((abs(roots[i] - roots[j]) for i in range(n) for j in range(i + 1, n)), default=mpmath.inf)
        if sep <= mpmath.mpf(2) ** (-prec // 2):
            raise PrecisionError(f"embedding images not separated at {prec} bits")
        if err > mpmath.mpf(2) ** (-prec - 4):
            raise PrecisionError(f"root error {err} exceeds 2^-{prec}")
    _cache[key] = roots
    return roots


@dataclass(frozen=True)
class KElem:
    field: KField = field(compare=False, repr=False)
    coords: tuple

    def _coerce(self, other) -> "KElem":
        if isinstance(other, KElem):
            return other
        if isinstance(other, (int, Fraction, FElem)):
            return self.field.from_F(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return KElem(self.field, tuple(a + b for a, b in zip(self.coords, o.coords)))

    __radd__ = __add__

    def __neg__(self):
        return KElem(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        K = self.field
        n, D = K.n, K.D
        out = [fzero(D)] * n
        for i, a in enumerate(self.coords):
            if a.is_zero():
                continue
            for j, b in enumerate(o.coords):
                if b.is_zero():
                    continue
                ab = a * b
                row = K.table[i][j]
                out = [out[t] + ab * row[t] for t in range(n)]
        return KElem(K, tuple(out))

    __rmul__ = __mul__

    def mult_matrix(self) -> list[list[FElem]]:
        """Matrix of y -> self*y in the power basis (columns are images of basis vectors)."""
        K = self.field
        cols = []
        for j in range(K.n):
            e = [fzero(K.D)] * K.n
            e[j] = fone(K.D)
            cols.append((self * KElem(K, tuple(e))).coords)
        return [[cols[j][i] for j in range(K.n)] for i in range(K.n)]

    def rel_norm(self) -> FElem:
        """N_{K/F}(x) as the determinant of multiplication by x."""
        return f_det(self.mult_matrix(), self.field.D)

    def abs_norm(self) -> Fraction:
        """N_{K/Q}(x) = N_{F/Q}(N_{K/F}(x))."""
        return self.rel_norm().norm()

    def inverse(self) -> "KElem":
        K = self.field
        rhs = [fone(K.D)] + [fzero(K.D)] * (K.n - 1)
        return KElem(K, tuple(f_solve(self.mult_matrix(), rhs, K.D)))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = self.field.one()
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coords)

    def __eq__(self, other):
        return isinstance(other, KElem) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def q_coords(self) -> list[Fraction]:
        """Coordinates over Q in the basis theta^j, sqrt(-D) theta^j."""
        out = []
        for c in self.coords:
            out.extend([c.a, c.b])
        return out

    def embed(self, i: int, prec: int = 128):
        return self.field.embed(self, i, prec)

    def to_json(self):
        return [c.to_json() for c in self.coords]

    def __repr__(self):
        return "K(" + ", ".join(repr(c) for c in self.coords) + ")"


# ---------------------------------------------------------------------------
# Z-lattices inside K (for ideal membership)

class ZLattice:
    """Full-rank Z-lattice in K given by 2n generators (a Z-basis)."""

    def __init__(self, basis: Sequence[KElem]):
        self.basis = list(basis)
        K = self.basis[0].field
        if len(self.basis) != 2 * K.n:
            raise ValueError("a Z-basis of a full lattice in K needs 2n elements")
        self._cols = [b.q_coords() for b in self.basis]
        self._rows = [[self._cols[j][i] for j in range(2 * K.n)] for i in range(2 * K.n)]

    def coordinates(self, x: KElem) -> list[Fraction] | None:
        return q_solve(self._rows, x.q_coords())

    def contains(self, x: KElem) -> bool:
        c = self.coordinates(x)
        if c is None:
            raise ValueError("lattice basis is degenerate")
        return all(v.denominator == 1 for v in c)

    def contains_lattice(self, other: "ZLattice") -> bool:
        return all(self.contains(b) for b in other.basis)

    def equals(self, other: "ZLattice") -> bool:
        return self.contains_lattice(other) and other.contains_lattice(self)


# ---------------------------------------------------------------------------
# instance data

@dataclass(frozen=True)
class Residue:
    rep: KElem
    phi: complex


@dataclass
class FieldInstance:
    """All arithmetic data for one (F, K, f, b, r, units, character) configuration.

    lattices[i] is a Z-basis (two F-elements) of the rank-2 lattice Lambda_i,
    so that f b^{-1} = Lambda_1 m_1 + ... + Lambda_n m_n.
    """

    name: str
    K: KField
    m: list[KElem]
    lattices: list[tuple[FElem, FElem]]
    u: list[FElem]
    r: KElem
    units: list[KElem]
    index: int | None
    torsion: list[KElem]
    uf_free: list[KElem]
    fb_inv_zbasis: list[KElem]
    f_zbasis: list[KElem] | None
    conductor_primes: list[list[KElem]]
    residues: list[Residue]
    full_torsion: list[KElem] | None = None
    full_free: list[KElem] | None = None
    ok_zbasis: list[KElem] | None = None
    b_norm: Fraction = Fraction(1)
    chi_b: complex = 1.0
    description: str = ""
    char: tuple[int, int] | None = None        # default (k, l) for checks on this instance

    @property
    def D(self) -> int:
        return self.K.D

    @property
    def n(self) -> int:
        return self.K.n

    @cached_property
    def m_matrix(self) -> list[list[FElem]]:
        """Rows are the power-basis coordinates of m_1..m_n."""
        return [list(mj.coords) for mj in self.m]

    def to_m_coords(self, x: KElem) -> list[FElem]:
        """Coordinates of x in the F-basis m (exact)."""
        cols = [[self.m[j].coords[i] for j in range(self.n)] for i in range(self.n)]
        return f_solve(cols, list(x.coords), self.D)

    def from_m_coords(self, xs: Sequence[FElem]) -> KElem:
        acc = self.K.zero()
        for xi, mi in zip(xs, self.m):
            acc = acc + mi * xi
        return acc

    def is_prime_to_f(self, x: KElem) -> bool:
        return not any(ZLattice(p).contains(x) for p in self.conductor_primes)

    def build_M(self, prec: int = 128):
        return build_M(self, prec)


def build_M(inst: FieldInstance, prec: int = 128) -> mpmath.matrix:
    """M with M[j, i] = rho_i(m_j); certified nonsingular with nonzero entries."""
    n = inst.n
    with mp.workprec(prec + 20):
        M = mpmath.matrix(n, n)
        for j in range(n):
            for i in range(n):
                M[j, i] = inst.K.embed(inst.m[j], i + 1, prec)
        tol = mpmath.mpf(2) ** (8 - prec)
        scale = max(abs(M[j, i]) for j in range(n) for i in range(n))
        for j in range(n):
            for i in range(n):
                if abs(M[j, i]) <= tol * scale:
                    raise ValueError(f"entry M[{j},{i}] vanishes; m must avoid zero coefficients")
        d = mpmath.det(M)
        if abs(d) <= tol * scale ** n:
            raise PrecisionError("M is numerically singular")
    return M


def _read_F(v, D):
    return FElem.of(v, D)


def _read_K(K: KField, v) -> KElem:
    return K.elem([_read_F(c, K.D) for c in v])


def load_instance(path_or_name: str | Path) -> FieldInstance:
    p = Path(path_or_name)
    if not p.exists():
        here = Path(__file__).parent / "instances" / f"{path_or_name}.json"
        if not here.exists():
            raise FileNotFoundError(f"no instance file or builtin named {path_or_name!r}")
        p = here
    data = json.loads(p.read_text())
    return instance_from_dict(data)


def instance_from_dict(data: dict) -> FieldInstance:
    D = int(data["D"])
    K = KField(D, [_read_F(c, D) for c in data["minpoly"]])
    if int(data.get("n", K.n)) != K.n:
        raise ValueError("declared n does not match the minimal polynomial degree")
    rk = lambda v: _read_K(K, v)
    residues = [Residue(rk(r["rep"]), complex(*r.get("phi", [1, 0]))) for r in data.get("residues", [{"rep": [[1, 0]] + [[0, 0]] * (K.n - 1)}])]
    idx = data.get("index")
    return FieldInstance(
        name=data.get("name", "instance"),
        K=K,
        m=[rk(v) for v in data["m"]],
        lattices=[(_read_F(a, D), _read_F(b, D)) for a, b in data["lattices"]],
        u=[_read_F(v, D) for v in data["u"]],
        r=rk(data["r"]),
        units=[rk(v) for v in data["units"]],
        index=int(idx) if idx is not None else None,
        torsion=[rk(v) for v in data.get("torsion", [[[1, 0]] + [[0, 0]] * (K.n - 1)])],
        uf_free=[rk(v) for v in data.get("uf_free", data["units"])],
        fb_inv_zbasis=[rk(v) for v in data["fb_inv_zbasis"]],
        f_zbasis=[rk(v) for v in data["f_zbasis"]] if data.get("f_zbasis") else None,
        conductor_primes=[[rk(v) for v in pr] for pr in data.get("conductor_primes", [])],
        residues=residues,
        full_torsion=[rk(v) for v in data["full_torsion"]] if data.get("full_torsion") else None,
        full_free=[rk(v) for v in data["full_free"]] if data.get("full_free") else None,
        ok_zbasis=[rk(v) for v in data["ok_zbasis"]] if data.get("ok_zbasis") else None,
        b_norm=_frac(data.get("b_norm", 1)),
        chi_b=complex(*data.get("chi_b", [1, 0])),
        description=data.get("description", ""),
        char=tuple(int(v) for v in data["char"]) if data.get("char") else None,
    )


# ---------------------------------------------------------------------------
# validation

@dataclass
class Check:
    name: str
    ok: bool
    witness: object = None
    measured: object = None
    expected: object = None
    tolerance: object = None
    params: dict | None = None

    def as_record(self) -> dict:
        rec = {"name": self.name, "status": "pass" if self.ok else "fail"}
        for key in ("measured", "expected", "tolerance", "params", "witness"):
            val = getattr(self, key)
            if val is not None:
                rec[key] = val
        return rec


def _lattice_from_pseudo_basis(inst: FieldInstance) -> ZLattice:
    gens = []
    for (l1, l2), mi in zip(inst.lattices, inst.m):
        gens.append(mi * l1)
        gens.append(mi * l2)
    return ZLattice(gens)


def validate_instance(inst: FieldInstance, prec: int = 128) -> list[Check]:
    """Check every invariant of the instance; failures carry a witness."""
    checks: list[Check] = []
    K = inst.K
    n = inst.n

    # m is an F-basis of K
    try:
        det_m = f_det(inst.m_matrix, inst.D)
        checks.append(Check("m is an F-basis", not det_m.is_zero(), None if not det_m.is_zero() else "det=0"))
    except Exception as exc:  # pragma: no cover - defensive
        checks.append(Check("m is an F-basis", False, str(exc)))

    # lattices have rank 2
    bad = []
    for i, (l1, l2) in enumerate(inst.lattices):
        if (l1.a * l2.b - l1.b * l2.a) == 0:
            bad.append(i)
    checks.append(Check("Lambda_i have rank 2", not bad, bad or None))

    # f b^-1 = sum Lambda_i m_i
    try:
        ok = _lattice_from_pseudo_basis(inst).equals(ZLattice(inst.fb_inv_zbasis))
        checks.append(Check("pseudo-basis spans f b^-1", ok, None if ok else "lattices differ"))
    except ValueError as exc:
        checks.append(Check("pseudo-basis spans f b^-1", False, str(exc)))

    # r = sum u_i m_i
    diff = inst.r - inst.from_m_coords(inst.u)
    checks.append(Check("r equals sum u_i m_i", diff.is_zero(), None if diff.is_zero() else diff.to_json()))

    # units: relative norm 1 and congruent to 1 mod f
    for j, eps in enumerate(inst.units):
        nu = eps.rel_norm()
        ok = nu == fone(inst.D)
        checks.append(Check(f"rel_norm(eps_{j + 1}) = 1", ok, None if ok else {"rel_norm": nu.to_json()}))
        if inst.f_zbasis is not None:
            ok2 = ZLattice(inst.f_zbasis).contains(eps - 1)
            checks.append(Check(f"eps_{j + 1} = 1 mod f", ok2, None if ok2 else "eps-1 not in f"))

    # torsion elements are roots of unity in U_f
    for t in inst.torsion:
        order = _root_of_unity_order(t, 24)
        ok = order is not None
        if ok and inst.f_zbasis is not None:
            ok = ZLattice(inst.f_zbasis).contains(t - 1)
        why = None
        if not ok:
            why = "not a root of unity of order <= 24" if order is None else "t - 1 not in f"
        checks.append(Check(f"torsion element {t.to_json()} in U_f", ok, why))

    # M nonsingular with nonzero entries
    try:
        build_M(inst, prec)
        checks.append(Check("M nonsingular, entries nonzero", True))
    except (ValueError, PrecisionError) as exc:
        checks.append(Check("M nonsingular, entries nonzero", False, str(exc)))

    # regulator nonzero and index consistent with the log lattice
    if n >= 2 and len(inst.units) == n - 1:
        from .unit_homology import log_matrix
        with mp.workprec(prec):
            Lv = log_matrix(inst, inst.units, prec)
            Rv = mpmath.det(Lv) if n > 1 else mpmath.mpf(1)
            okR = abs(Rv) > mpmath.mpf(2) ** (16 - prec)
            checks.append(Check("regulator nonzero", okR, None if okR else float(Rv), measured=float(Rv)))
            if inst.index is not None and inst.uf_free:
                Lu = log_matrix(inst, inst.uf_free, prec)
                ratio = abs(Rv / mpmath.det(Lu)) * len(inst.torsion)
                ok = abs(ratio - inst.index) < 1e-20
                checks.append(Check("index matches [U_f:V_f] from logs and torsion", ok, None if ok else float(ratio),
                                    measured=float(ratio), expected=inst.index, tolerance=1e-20))
    else:
        checks.append(Check("n-1 unit generators supplied", False, len(inst.units)))
    return checks


def _root_of_unity_order(t: KElem, bound: int) -> int | None:
    p = t
    one = t.field.one()
    for e in range(1, bound + 1):
        if p == one:
            return e
        p = p * t
    return None
