import dataclasses
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from eiscocycle.exact_field import (FElem, KField, PrecisionError, ZLattice, build_M, f_det, load_instance,
                                    validate_instance)


@pytest.fixture(scope="module")
def worked():
    return load_instance("worked_order")


def K2():
    # Q(i)(sqrt 2): theta^2 - 2 = 0
    return KField(1, [FElem.of(-2, 1), FElem.of(0, 1)])


def test_F_arithmetic():
    i = FElem.of([0, 1], 1)
    assert i * i == FElem.of(-1, 1)
    z = FElem.of(["1/2", 3], 1)
    assert z * z.inverse() == FElem.of(1, 1)
    assert z.norm() == Fraction(1, 4) + 9
    assert z.conj() == FElem.of(["1/2", -3], 1)


@pytest.mark.parametrize("coords, expected", [
    ([3, 2], 1),       # 3 + 2 sqrt2
    ([0, 1], -2),      # sqrt2
    ([[0, 1], 0], -1),  # i, relative norm i^2
])
def test_rel_norm_examples(coords, expected):
    K = K2()
    assert K.elem(coords).rel_norm() == FElem.of(expected, 1)


small = st.integers(-6, 6)
pairs = st.tuples(small, small)


@settings(max_examples=60, deadline=None)
@given(st.tuples(pairs, pairs), st.tuples(pairs, pairs))
def test_rel_norm_multiplicative(a, b):
    K = K2()
    x = K.elem([list(c) for c in a])
    y = K.elem([list(c) for c in b])
    assert (x * y).rel_norm() == x.rel_norm() * y.rel_norm()
    assert (x * y).abs_norm() == x.abs_norm() * y.abs_norm()


def test_inverse_and_power():
    K = K2()
    eps = K.elem([3, 2])
    assert eps * eps.inverse() == K.one()
    assert eps ** -2 * eps ** 2 == K.one()
    assert K.elem([1, 1]) ** 2 == eps


def test_embeddings_order_and_values():
    K = K2()
    with mp.workprec(128):
        r2 = mpmath.sqrt(2)
        assert abs(K.embed(K.theta(), 1) - r2) < mpmath.mpf(2) ** -120
        assert abs(K.embed(K.theta(), 2) + r2) < mpmath.mpf(2) ** -120
        eps = K.elem([3, 2])
        assert abs(K.embed(eps, 1) - (3 + 2 * r2)) < mpmath.mpf(2) ** -118


def test_embedding_is_a_ring_morphism():
    K = K2()
    x, y = K.elem([[1, 2], [-3, 1]]), K.elem([["1/3", 0], [2, -5]])
    with mp.workprec(128):
        for i in (1, 2):
            assert abs(K.embed(x * y, i) - K.embed(x, i) * K.embed(y, i)) < mpmath.mpf(2) ** -110
            assert abs(K.embed(x + y, i) - K.embed(x, i) - K.embed(y, i)) < mpmath.mpf(2) ** -110


def test_M_rows_and_determinant(worked):
    with mp.workprec(128):
        M = build_M(worked)
        r2 = mpmath.sqrt(2)
        tol = mpmath.mpf(2) ** -118
        assert abs(M[0, 0] - 1) < tol and abs(M[0, 1] - 1) < tol
        assert abs(M[1, 0] - r2) < tol and abs(M[1, 1] + r2) < tol
        assert abs(mpmath.det(M) + 2 * r2) < tol
        # the dual basis matrix M^{-T} satisfies M^T M^{-T} = I
        Minv_T = (M ** -1).T
        E = M.T * Minv_T
        assert mpmath.mnorm(E - mpmath.eye(2), 1) < tol


def test_M_rejects_dependent_basis(worked):
    K = worked.K
    bad = dataclasses.replace(worked, m=[K.one(), K.elem([[0, 1], 0])])
    with pytest.raises(PrecisionError):
        build_M(bad)


def test_f_det():
    rows = [[FElem.of(1, 1), FElem.of([0, 1], 1)], [FElem.of(2, 1), FElem.of(3, 1)]]
    assert f_det(rows, 1) == FElem.of([3, -2], 1)


def test_zlattice_membership():
    K = K2()
    L = ZLattice([K.elem([1, 0]), K.elem([[0, 1], 0]), K.elem([0, 1]), K.elem([0, [0, 1]])])
    assert L.contains(K.elem([[3, -1], [2, 5]]))
    assert not L.contains(K.elem([["1/2", 0], 0]))


@pytest.mark.parametrize("name", ["worked_order", "zeta8_conductor", "cubic7"])
def test_builtin_instances_validate(name):
    inst = load_instance(name)
    checks = validate_instance(inst)
    assert checks and all(c.ok for c in checks), [c.as_record() for c in checks if not c.ok]


def test_validation_reports_norm_witness(worked):
    bad = dataclasses.replace(worked, units=[worked.K.elem([1, 1])], index=None)
    failed = [c for c in validate_instance(bad) if not c.ok]
    assert any(c.witness == {"rel_norm": FElem.of(-1, 1).to_json()} for c in failed)


def test_validation_reports_offset_difference(worked):
    bad = dataclasses.replace(worked, r=worked.K.elem([1, 0]))
    failed = [c for c in validate_instance(bad) if not c.ok]
    assert [c.name for c in failed] == ["r equals sum u_i m_i"]
    assert failed[0].witness == worked.K.elem([1, 0]).to_json()


def test_validation_reports_wrong_index(worked):
    bad = dataclasses.replace(worked, index=4)
    failed = [c for c in validate_instance(bad) if not c.ok]
    assert len(failed) == 1 and abs(failed[0].measured - 8) < 1e-12


def test_load_unknown_instance():
    with pytest.raises(FileNotFoundError):
        load_instance("no_such_instance")
