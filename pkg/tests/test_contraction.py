import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rademacher_stein.contraction import check_estimates, contraction_norms, star, trace_power4
from rademacher_stein.errors import ContractionOutOfRange, OrderMismatch
from rademacher_stein.generators import random_kernel, rng_for
from rademacher_stein.kernel import SymmetricKernel, sq_norm

import oracles
from strategies import kernels

F12 = SymmetricKernel(2, {(1, 2): 1})


def test_star_21_is_row_sums_of_squares():
    h = star(F12, F12, 2, 1)
    assert dict(h.items()) == {(1,): 1, (2,): 1}


def test_star_22_is_squared_norm():
    assert star(F12, F12, 2, 2).scalar() == 2


def test_star_11_is_matrix_product():
    h = star(F12, F12, 1, 1)
    assert h[(1, 1)] == 1 and h[(2, 2)] == 1 and h[(1, 2)] == 0


def test_star_range_checked():
    with pytest.raises(ContractionOutOfRange):
        star(F12, F12, 1, 2)
    with pytest.raises(ContractionOutOfRange):
        star(F12, F12, 3, 0)


def test_trace_power4_examples():
    assert trace_power4(F12) == 2
    assert trace_power4(SymmetricKernel(2)) == 0
    assert trace_power4(SymmetricKernel(2, {(1, 2): 1, (3, 4): 1})) == 4
    assert trace_power4(SymmetricKernel(2, {(1, 2): Fraction(1, 2)})) == Fraction(1, 8)
    with pytest.raises(OrderMismatch):
        trace_power4(SymmetricKernel(3, {(1, 2, 3): 1}))


def test_trace_power4_float_matches_numpy_matrix_power():
    rng = rng_for(11)
    f = random_kernel(rng, 2, 7, 0.6)
    A = np.zeros((8, 8))
    for (i, j), v in f.items():
        A[i, j] = A[j, i] = v
    assert trace_power4(f) == pytest.approx(np.trace(np.linalg.matrix_power(A, 4)), rel=1e-12)


def test_estimate_single_entry_example():
    cn = contraction_norms(F12, F12, 1, 1)
    assert cn.full == 2 and sq_norm(F12) == 2  # ||f*_1^1 f|| = sqrt 2 <= ||f||^2 = 2
    rep = check_estimates(F12, F12)
    assert rep.all_passed


def test_star21_bounded_by_trace():
    for s in range(20):
        f = random_kernel(rng_for(s), 2, 6, 0.5, exact=True)
        assert contraction_norms(f, f, 2, 1).full <= trace_power4(f)


@given(kernels(support=4), kernels(support=4), st.data())
def test_star_matches_definition(f, g, data):
    r = data.draw(st.integers(0, min(f.order, g.order)))
    l = data.draw(st.integers(0, r))
    assert dict(star(f, g, r, l).items()) == oracles.star(f, g, r, l, 4)


@given(kernels(support=4), kernels(support=4), st.data())
def test_norms_match_definition(f, g, data):
    r = data.draw(st.integers(0, min(f.order, g.order)))
    l = data.draw(st.integers(0, r))
    ref = oracles.star(f, g, r, l, 4)
    off = oracles.off_diag(ref)
    k = f.order + g.order - r - l
    for exact in (True, False):
        cn = contraction_norms(f, g, r, l, exact=exact)
        assert float(cn.full) == pytest.approx(float(oracles.sq(ref)), abs=1e-12)
        assert float(cn.off_diagonal) == pytest.approx(float(oracles.sq(off)), abs=1e-12)
        assert float(cn.diagonal) == pytest.approx(float(oracles.sq(ref) - oracles.sq(off)), abs=1e-12)
        sym = oracles.symmetrized(off, k) if k else off
        assert float(cn.sym_off_diagonal) == pytest.approx(float(oracles.sq(sym)), abs=1e-12)


@given(kernels(support=5, max_order=4), kernels(support=5, max_order=4))
def test_estimate_chains_hold(f, g):
    rep = check_estimates(f, g)
    assert rep.all_passed, rep.failures()


@given(kernels(support=5), kernels(support=5), st.data())
def test_contraction_norm_symmetry(f, g, data):
    # ||f *_r^l g|| = ||g *_r^l f||
    r = data.draw(st.integers(0, min(f.order, g.order)))
    l = data.draw(st.integers(0, r))
    a = contraction_norms(f, g, r, l)
    b = contraction_norms(g, f, r, l)
    assert a.full == b.full and a.off_diagonal == b.off_diagonal


@given(kernels(support=5, exact=False, order=2), kernels(support=5, exact=False, order=2),
       kernels(support=5, exact=False, order=2))
def test_contraction_continuity(f, f2, g):
    # ||f*g - f'*g|| <= ||f - f'|| ||g||
    diff = f - f2
    lhs = math.sqrt(float(contraction_norms(diff, g, 1, 1).full)) if len(diff) and len(g) else 0.0
    assert lhs <= math.sqrt(float(sq_norm(diff))) * math.sqrt(float(sq_norm(g))) + 1e-9


def test_numpy_and_exact_paths_agree_on_larger_kernels():
    for s in range(10):
        rng = rng_for(s, 77)
        f = random_kernel(rng, 3, 9, 0.4, exact=True)
        g = random_kernel(rng, 3, 9, 0.4, exact=True)
        for r in range(4):
            for l in range(r + 1):
                a = contraction_norms(f, g, r, l, exact=True)
                b = contraction_norms(f, g, r, l, exact=False)
                for x, y in zip((a.full, a.off_diagonal, a.diagonal, a.sym_off_diagonal),
                                (b.full, b.off_diagonal, b.diagonal, b.sym_off_diagonal)):
                    assert float(x) == pytest.approx(y, rel=1e-10, abs=1e-12)

