import cmath
import dataclasses
import itertools

import mpmath
import pytest
from mpmath import mp

from eiscocycle.exact_field import FElem, load_instance
from eiscocycle.hecke_l import (HeckeCharData, direct_full_L, direct_partial_L, eval_Ekl, full_L, lambda_char,
                                log_coordinates, partial_L, reduce_mod_units, with_residue)

# worked instance, k = 0, l = 2, s = 3, B = 1600; frozen from direct_partial_L (rectangular box oracle)
WORKED_L_S3_B1600 = 1.0002617634577187


@pytest.fixture(scope="module")
def worked():
    return load_instance("worked_order")


@pytest.fixture(scope="module")
def zeta8():
    return load_instance("zeta8_conductor")


def test_lambda_examples(worked):
    K = worked.K
    with mp.workprec(128):
        assert lambda_char(K.one(), 3, 2) == 1
        assert abs(lambda_char(worked.units[0], 2, 5) - 1) < mpmath.mpf(2) ** -120
        assert lambda_char(K.theta(), 0, 2) == mpmath.mpf(1) / 4
    with pytest.raises(ZeroDivisionError):
        lambda_char(K.zero(), 0, 2)


def test_reduce_mod_units(worked):
    K = worked.K
    eps = worked.units[0]
    xi = eps ** 3 * K.elem([2, 1])
    red = reduce_mod_units(xi, worked)
    assert reduce_mod_units(red, worked) == red
    assert reduce_mod_units(xi * eps, worked) == red
    assert reduce_mod_units(xi * eps ** -4, worked) == red
    [c] = log_coordinates(red, worked)
    assert -1e-9 <= float(c) < 1
    # red differs from xi by a power of eps: the ratio has relative norm 1
    assert (red / xi).rel_norm() == FElem.of(1, 1)


def test_partial_L_frozen_value(worked):
    v = partial_L(worked, 3, 0, 2, 1600)
    assert abs(v.value - WORKED_L_S3_B1600) <= 1e-14 + v.tail_estimate
    assert v.tail_estimate < 1e-11


@pytest.mark.parametrize("s", [2.5, 3 + 2j])
def test_partial_L_matches_box_oracle(worked, s):
    a = partial_L(worked, s, 0, 2, 900)
    b = direct_partial_L(worked, s, 0, 2, 900)
    # the two enumerations see the same ideals, so they agree far below the tail
    assert abs(a.value - b.value) <= 1e-13 * abs(b.value)


def test_partial_L_below_minimum(zeta8):
    # r = 1 and every element of f b^-1 + 1 is a unit or has norm at least 1
    assert partial_L(zeta8, 3, 0, 4, 0.5).value == 0


def test_partial_L_depends_on_coset_only(zeta8):
    mu = zeta8.fb_inv_zbasis[2] * 3 - zeta8.fb_inv_zbasis[1]
    a = partial_L(zeta8, 3, 0, 4, 400)
    b = partial_L(with_residue(zeta8, zeta8.r + mu), 3, 0, 4, 400)
    assert abs(a.value - b.value) <= 1e-14


def test_partial_L_conductor_filter(zeta8):
    a = partial_L(zeta8, 3, 0, 4, 400)
    b = direct_partial_L(zeta8, 3, 0, 4, 400)
    assert abs(a.value - b.value) <= 1e-14


def test_partial_L_rejects_bad_character(worked):
    with pytest.raises(ValueError):
        partial_L(worked, 3, -1, 2, 100)
    with pytest.raises(ValueError):
        partial_L(worked, 3, 0, 1, 100)          # lambda(i) = -1 on torsion
    with pytest.raises(ValueError):
        partial_L(dataclasses.replace(worked, index=None), 3, 0, 2, 100)


def test_full_L_single_class(zeta8):
    char = HeckeCharData(0, 4)
    a = full_L([zeta8], char, 3, 400)
    b = partial_L(zeta8, 3, 0, 4, 400)
    assert a.value == b.value
    c = full_L([zeta8], HeckeCharData(0, 4, phi=[1j]), 3, 400)
    assert abs(c.value - 1j * a.value) <= 1e-15


def test_full_L_matches_ideal_sum(zeta8):
    a = full_L([zeta8], HeckeCharData(0, 4), 3 + 2j, 2000)
    b = direct_full_L(zeta8, zeta8.ok_zbasis, 0, 4, 3 + 2j, 2000)
    assert abs(a.value - b.value) <= a.tail_estimate + b.tail_estimate + 1e-14


def test_char_data_validation():
    with pytest.raises(ValueError):
        HeckeCharData(-1, 2)
    with pytest.raises(ValueError):
        HeckeCharData(0, 0)


def _ekl_brute(u, w1, w2, k, l, s, R, box):
    total = 0j
    for a, b in itertools.product(range(-box, box + 1), repeat=2):
        w = u + a * w1 + b * w2
        if 0 < abs(w) <= R:
            total += w.conjugate() ** k / w ** l * cmath.exp(-s * cmath.log(abs(w) ** 2))
    return total


@pytest.mark.parametrize("u, k, l, s", [(0j, 0, 4, 0.0), (0j, 2, 3, 1.5), (0.25 + 0.5j, 1, 2, 1.2 + 1j)])
def test_Ekl_against_double_loop(u, k, l, s):
    R = 12.0
    got = eval_Ekl(u, [1, 1j], k, l, s, R)
    want = _ekl_brute(u, 1, 1j, k, l, s, R, 14)
    assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_Ekl_symmetry():
    # Z[i] is stable under w -> i w, which multiplies each term by i^-(k+l); the sum vanishes unless 4 | k + l
    assert abs(eval_Ekl(0j, [1, 1j], 0, 2, 1.0, 20.0)) < 1e-13
    with pytest.raises(ValueError):
        eval_Ekl(0j, [1, 1j], 0, 0, 1.0, 5.0)
