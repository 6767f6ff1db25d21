from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rademacher_stein.chaos import (
    ChaosDecomposition,
    RademacherPoint,
    compress,
    covariance,
    decompose_hoeffding,
    decompose_walsh,
    evaluate,
    evaluate_multiple_integral,
    first_chaos,
    multiply,
    product,
    to_table,
    variance,
)
from rademacher_stein.errors import BadTableLength, DimensionTooSmall, IndexOutOfRange
from rademacher_stein.kernel import SymmetricKernel

import oracles
from strategies import decompositions, kernels

HALF = SymmetricKernel(2, {(1, 2): 0.5})
INDICATOR = ChaosDecomposition(2, 0.25, {1: SymmetricKernel(1, {(1,): 0.25, (2,): 0.25}),
                                         2: SymmetricKernel(2, {(1, 2): 0.125})})


def test_point_signs_and_errors():
    w = RademacherPoint.from_signs([1, -1, 1])
    assert w.signs == (1, -1, 1)
    assert w.flip(2).signs == (1, 1, 1)
    with pytest.raises(IndexOutOfRange):
        w.sign(4)


def test_multiple_integral_examples():
    assert evaluate_multiple_integral(HALF, RademacherPoint.from_signs([1, 1])) == 1
    assert evaluate_multiple_integral(HALF, RademacherPoint.from_signs([1, -1])) == -1
    f1 = SymmetricKernel(1, {(1,): 3})
    assert evaluate_multiple_integral(f1, RademacherPoint.from_signs([-1])) == -3


def test_multiple_integral_needs_dimension():
    with pytest.raises(DimensionTooSmall):
        evaluate_multiple_integral(HALF, RademacherPoint.from_signs([1]))


def test_evaluate_indicator():
    assert evaluate(INDICATOR, RademacherPoint.from_signs([1, 1])) == pytest.approx(1)
    assert evaluate(INDICATOR, RademacherPoint.from_signs([-1, 1])) == pytest.approx(0)
    assert evaluate(ChaosDecomposition(3, 7), RademacherPoint.from_signs([1, 1, 1])) == 7


def test_walsh_examples():
    dec = decompose_walsh([1, -1, -1, 1], 2)
    assert dec.mean == 0 and dict(dec.kernel(2).items()) == {(1, 2): Fraction(1, 2)}
    const = decompose_walsh([7, 7, 7, 7], 2)
    assert const.mean == 7 and not const.kernels
    ind = decompose_walsh([0, 0, 0, 1], 2)
    assert ind.mean == Fraction(1, 4)
    assert dict(ind.kernel(1).items()) == {(1,): Fraction(1, 4), (2,): Fraction(1, 4)}
    assert dict(ind.kernel(2).items()) == {(1, 2): Fraction(1, 8)}


def test_walsh_rejects_bad_length():
    with pytest.raises(BadTableLength):
        decompose_walsh([1, 2, 3])


def test_hoeffding_examples():
    dec = decompose_hoeffding([1, -1, -1, 1], 2)
    assert dec.orders == (2,) and dec.kernel(2)[(1, 2)] == Fraction(1, 2)
    assert not decompose_hoeffding([3] * 8, 3).kernels


@given(st.integers(1, 6), st.data())
def test_hoeffding_equals_walsh(d, data):
    values = data.draw(st.lists(st.fractions(-5, 5, max_denominator=7), min_size=1 << d, max_size=1 << d))
    a, b = decompose_walsh(values, d), decompose_hoeffding(values, d)
    assert a.mean == b.mean
    assert {n: k.entries for n, k in a.kernels.items()} == {n: k.entries for n, k in b.kernels.items()}


@given(decompositions(max_d=5))
def test_table_matches_definition(dec):
    d = dec.dimension
    assert list(to_table(dec, exact=True)) == oracles.table_of(dec, d)


@given(decompositions(max_d=5))
def test_walsh_roundtrip_exact(dec):
    back = decompose_walsh(to_table(dec, exact=True), dec.dimension)
    assert back.mean == dec.mean
    assert {n: k.entries for n, k in back.kernels.items()} == {n: k.entries for n, k in dec.kernels.items()}


def test_product_first_chaos_examples():
    e1 = SymmetricKernel(1, {(1,): 1})
    sq = product(e1, e1, 1)
    assert sq.mean == 1 and not sq.kernels
    e2 = SymmetricKernel(1, {(2,): 1})
    xy = product(e1, e2, 2)
    assert xy.mean == 0 and dict(xy.kernel(2).items()) == {(1, 2): Fraction(1, 2)}


@given(kernels(support=5, max_order=3), kernels(support=5, max_order=3))
def test_product_formula_exhaustive(f, g):
    d = 5
    p = to_table(product(f, g, d), d, exact=True)
    a = oracles.table_of(ChaosDecomposition(d, 0, {f.order: f}), d)
    b = oracles.table_of(ChaosDecomposition(d, 0, {g.order: g}), d)
    assert list(p) == [x * y for x, y in zip(a, b)]


@given(decompositions(max_d=4), decompositions(max_d=4))
def test_multiply_matches_tables(a, b):
    d = max(a.dimension, b.dimension)
    a, b = a.with_dimension(d), b.with_dimension(d)
    p = to_table(multiply(a, b), d, exact=True)
    assert list(p) == [x * y for x, y in zip(to_table(a, exact=True), to_table(b, exact=True))]


def test_covariance_examples():
    dec = ChaosDecomposition(2, 0, {2: HALF})
    assert covariance(dec, dec) == pytest.approx(1)
    other = first_chaos([1.0, 2.0])
    assert covariance(dec, other) == 0


@given(decompositions(max_d=5), decompositions(max_d=5))
def test_covariance_matches_enumeration(a, b):
    d = max(a.dimension, b.dimension)
    ta, tb = oracles.table_of(a, d), oracles.table_of(b, d)
    ma, mb = oracles.mean(ta), oracles.mean(tb)
    assert covariance(a, b) == oracles.mean([(x - ma) * (y - mb) for x, y in zip(ta, tb)])


@given(decompositions(max_d=5))
def test_isometry_is_variance(dec):
    t = oracles.table_of(dec, dec.dimension)
    assert variance(dec) == oracles.hoeffding_var(t, dec.dimension)


def test_compress_relabels_used_coordinates():
    dec = ChaosDecomposition(10, 0, {2: SymmetricKernel(2, {(3, 9): 1})})
    small, coords = compress(dec)
    assert coords == (3, 9) and small.dimension == 2
    assert dict(small.kernel(2).items()) == {(1, 2): 1}


def test_float_tables_agree_with_exact():
    dec = ChaosDecomposition(3, 0.5, {1: SymmetricKernel(1, {(1,): 0.3}), 3: SymmetricKernel(3, {(1, 2, 3): -0.2})})
    t = to_table(dec, exact=False)
    ref = oracles.table_of(dec, 3)
    assert np.allclose(t, ref, atol=1e-14)
