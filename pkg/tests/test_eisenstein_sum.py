import itertools
import random
import warnings

import mpmath
import numpy as np
import pytest
from mpmath import mp

from eiscocycle.exact_field import FElem, load_instance
from eiscocycle.eisenstein_sum import LatticeCoset, enumerate_coset, eval_Psi, omega
from eiscocycle.poly_ops import HomogPoly, norm_form_poly
from eiscocycle.rational_cocycle import FMatrix, random_gl, random_x, row_times
from eiscocycle.unit_homology import build_cycle, varrho

D = 1
ONE, I_ = FElem.of(1, D), FElem.of([0, 1], D)


def gaussian_coset(u=(0, 0)):
    return LatticeCoset([(ONE, I_), (ONE, I_)], [FElem.of(v, D) for v in u])


def brute_force_ball(R, u=(0, 0), box=3):
    pts = set()
    for a, b, c, d in itertools.product(range(-box, box + 1), repeat=4):
        x = (complex(a, b) + complex(u[0]), complex(c, d) + complex(u[1]))
        if max(abs(x[0]), abs(x[1])) <= R:
            pts.add(x)
    return pts


def test_enumeration_unit_ball():
    pts = enumerate_coset(gaussian_coset(), np.eye(2), 1.0)
    assert len(pts) == 25 == len(brute_force_ball(1.0))
    assert [ONE * 0, ONE * 0] in pts


@pytest.mark.parametrize("R", [1.5, 2.3, 3.0])
def test_enumeration_matches_box(R):
    pts = enumerate_coset(gaussian_coset(), np.eye(2), R)
    got = {tuple(complex(v) for v in x) for x in pts}
    assert len(got) == len(pts)
    assert got == brute_force_ball(R, box=4)


def test_enumeration_offset_coset():
    pts = enumerate_coset(gaussian_coset(("1/2", 0)), np.eye(2), 2.0)
    assert [ONE * 0, ONE * 0] not in pts
    assert all(gaussian_coset(("1/2", 0)).contains(x) for x in pts)


def test_enumeration_is_nested_and_deterministic():
    c = gaussian_coset()
    M = load_instance("worked_order").build_M()
    small = enumerate_coset(c, M, 3.0)
    big = enumerate_coset(c, M, 5.0)
    assert {tuple(x) for x in small} <= {tuple(x) for x in big}
    assert enumerate_coset(c, M, 5.0) == big


def test_omega_trivial():
    with mp.workprec(128):
        x = [FElem.of([2, 1], D), FElem.of([1, -3], D)]
        got = omega(x, mpmath.eye(2), 1.75, 0)
        want = (abs(x[0].to_mpc()) * abs(x[1].to_mpc())) ** (-2 * mpmath.mpf(1.75))
        assert abs(got - want) < mpmath.mpf(2) ** -120 * abs(want)
        M = mpmath.matrix([[1, 0], [0, 1]]) / 2
        assert abs(omega([FElem.of(2, D)] * 2, M, 3 + 1j, 2) - 1) < mpmath.mpf(2) ** -120


def test_omega_factor_identity():
    inst = load_instance("worked_order")
    rng = random.Random(9)
    with mp.workprec(148):
        M = inst.build_M(148)
        for _ in range(50):
            sigma = random_gl(2, D, rng)
            x = random_x(2, D, rng, p_zero=0.0)
            xs = row_times(x, sigma)
            lhs = omega(xs, M, 2.5 + 1j, 1)
            rhs = omega(x, sigma.to_mpmath(148) * M, 2.5 + 1j, 1)
            assert abs(lhs - rhs) <= mpmath.mpf(2) ** (8 - 128) * abs(lhs)


def test_omega_unit_and_norm_form():
    inst = load_instance("worked_order")
    A = varrho(inst.units[0], inst)
    with mp.workprec(148):
        M = inst.build_M(148)
        Q = norm_form_poly(M, "Q")
        for x in ([FElem.of([2, 1], D), FElem.of([1, -3], D)], [FElem.of(5, D), FElem.of([0, 2], D)]):
            s, k = 2.2 - 0.5j, 2
            w = omega(x, M, s, k)
            assert abs(omega(row_times(x, A), M, s, k) - w) <= mpmath.mpf(2) ** -118 * abs(w)
            q = Q([v.to_mpc() for v in x])
            want = mpmath.conj(q) ** k * mpmath.exp(-s * mpmath.log(abs(q) ** 2))
            assert abs(w - want) <= mpmath.mpf(2) ** -118 * abs(w)


def test_coset_stable_under_units():
    inst = load_instance("worked_order")
    coset = LatticeCoset.from_instance(inst)
    A = varrho(inst.units[0], inst)
    for x in enumerate_coset(coset, inst.build_M(), 4.0):
        assert coset.contains(row_times(x, A))


def test_empty_ball():
    c = gaussian_coset(("1/2", "1/2"))
    v = eval_Psi((FMatrix.identity(2, D), FMatrix.of([[0, 1], [1, 0]], D)), HomogPoly.constant(2, 1),
                 c, np.eye(2), 3.0, 0, 0.4)
    assert v.value == 0 and v.terms_summed == 0


def test_real_for_conjugation_symmetric_sum():
    # M is real for the worked instance, so x -> conj(x) pairs each term with its conjugate
    M = load_instance("worked_order").build_M()
    I2 = FMatrix.identity(2, D)
    S = FMatrix.of([[1, 1], [0, 1]], D)
    v = eval_Psi((I2, S), HomogPoly.constant(2, 1), gaussian_coset(), M, 3.0, 0, 8.0)
    scale = sum(v.shell_abs)
    assert scale > 0
    assert abs(v.value.imag) <= 1e-14 * scale


def test_vanishing_pairing_is_reported():
    I2 = FMatrix.identity(2, D)
    S = FMatrix.of([[1, 1], [0, 1]], D)
    with pytest.raises(ZeroDivisionError):
        eval_Psi((I2, S), HomogPoly.constant(2, 1), gaussian_coset(), np.eye(2), 3.0, 0, 2.0)


def test_float_and_mp_paths_agree():
    inst = load_instance("worked_order")
    chain = build_cycle(inst)
    with mp.workprec(128):
        P = norm_form_poly(inst.build_M(), "P")
    coset = LatticeCoset.from_instance(inst)
    M = inst.build_M()
    fast = eval_Psi(chain, P, coset, M, 3 + 1j, 0, 4.0)
    slow = eval_Psi(chain, P, coset, M, 3 + 1j, 0, 4.0, prec=128)
    assert fast.terms_summed == slow.terms_summed
    assert abs(fast.value - complex(slow.value)) <= 1e-12 * abs(fast.value)


def test_half_plane_warning_and_flag():
    M = load_instance("worked_order").build_M()
    I2 = FMatrix.identity(2, D)
    S = FMatrix.of([[0, 1], [1, 0]], D)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        v = eval_Psi((I2, S), HomogPoly.constant(2, 1), gaussian_coset(), M, 0.9, 0, 6.0)
    assert any("half-plane" in str(w.message) for w in caught)
    assert not v.in_half_plane


def test_list_of_s_shares_enumeration():
    I2 = FMatrix.identity(2, D)
    S = FMatrix.of([[1, 1], [0, 1]], D)
    args = ((I2, S), HomogPoly.constant(2, 1), gaussian_coset(), load_instance("worked_order").build_M())
    both = eval_Psi(*args, [2.5, 3 + 1j], 0, 6.0)
    one = eval_Psi(*args, 3 + 1j, 0, 6.0)
    assert both[1].value == one.value
