import random

import mpmath
import pytest
from mpmath import mp

from eiscocycle.exact_field import FElem, load_instance
from eiscocycle.poly_ops import HomogPoly
from eiscocycle.rational_cocycle import FMatrix, eval_psi, random_x
from eiscocycle.unit_homology import (BarChain, build_cycle, orientation_signs, pair, regulator, varrho,
                                      varrho_numeric)


@pytest.fixture(scope="module")
def worked():
    return load_instance("worked_order")


@pytest.fixture(scope="module")
def cubic():
    return load_instance("cubic7")


def test_varrho_of_one(worked):
    assert varrho(worked.K.one(), worked) == FMatrix.identity(2, 1)


def test_varrho_worked_unit(worked):
    eps = worked.units[0]
    assert varrho(eps, worked) == FMatrix.of([[3, 2], [4, 3]], 1)
    assert varrho(eps, worked).det() == FElem.of(1, 1)


@pytest.mark.parametrize("name", ["worked_order", "cubic7", "zeta8_conductor"])
def test_varrho_exact_matches_numeric(name):
    inst = load_instance(name)
    for eta in inst.units + [inst.K.theta() + 1]:
        exact = varrho(eta, inst).to_mpmath(128)
        with mp.workprec(128):
            num = varrho_numeric(eta, inst)
            assert mpmath.mnorm(exact - num, 1) <= mpmath.mpf(2) ** (8 - 128) * mpmath.mnorm(exact, 1)


def test_varrho_is_multiplicative(cubic):
    a, b = cubic.units
    assert varrho(a * b, cubic) == varrho(a, cubic) @ varrho(b, cubic)
    assert varrho(a ** -1, cubic) == varrho(a, cubic).inverse()


def test_regulator_worked(worked):
    with mp.workprec(128):
        reg = regulator(worked)
        want = 2 * mpmath.log(3 + 2 * mpmath.sqrt(2))
        assert abs(reg.R - want) < mpmath.mpf(2) ** -118
        assert reg.sign == -1
        assert float(reg.R) == pytest.approx(3.52549, abs=1e-5)
        inv = regulator(worked, units=[worked.units[0].inverse()])
        assert abs(inv.R + want) < mpmath.mpf(2) ** -118
        i = worked.K.elem([[0, 1], 0])
        rot = regulator(worked, units=[worked.units[0] * i])
        assert abs(rot.R - want) < mpmath.mpf(2) ** -118


def test_regulator_rejects_dependent_units(cubic):
    a, _ = cubic.units
    with pytest.raises(ValueError):
        regulator(cubic, units=[a, a ** 2])


def test_cycle_n2(worked):
    chain = build_cycle(worked)
    I2 = FMatrix.identity(2, 1)
    assert chain.terms == [(-1, (I2, varrho(worked.units[0], worked)))]


def test_cycle_n3_and_orientation(cubic):
    chain = build_cycle(cubic)
    assert len(chain.terms) == 2
    assert chain.terms[0][0] == -chain.terms[1][0]
    for (coeff, _), (perm, sign, _) in zip(chain.terms, orientation_signs(cubic)):
        assert coeff == sign


def test_orientation_n2(worked):
    [(_, sign, _)] = orientation_signs(worked)
    assert sign == build_cycle(worked).terms[0][0]


def test_cycle_rejects_norm_minus_one(worked):
    with pytest.raises(ValueError):
        build_cycle(worked, [worked.K.elem([1, 1])])


def test_pairing_linear(worked):
    I2 = FMatrix.identity(2, 1)
    A = varrho(worked.units[0], worked)
    P = HomogPoly.constant(2, 1)
    x = random_x(2, 1, random.Random(3), p_zero=0.0)
    assert pair(BarChain([]), eval_psi, P, x) == 0
    assert pair(BarChain([(2, (I2, A)), (-2, (I2, A))]), eval_psi, P, x) == 0
    got = pair(build_cycle(worked), eval_psi, P, x)
    assert got == -eval_psi((I2, A), P, x)


def test_chain_validation():
    I2 = FMatrix.identity(2, 1)
    with pytest.raises(ValueError):
        BarChain([(0, (I2, I2))])
    with pytest.raises(ValueError):
        BarChain([(1, (I2, I2)), (1, (I2,))])
