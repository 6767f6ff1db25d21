import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rademacher_stein.errors import ConflictingValues, DiagonalEntry, OrderMismatch
from rademacher_stein.kernel import (
    GeneralKernel,
    SymmetricKernel,
    influence,
    inner,
    l2_norm,
    make_symmetric_kernel,
    max_influence,
    relabel,
    restrict_diagonal,
    restrict_off_diagonal,
    sq_norm,
    symmetrize,
    to_symmetric,
)

import oracles
from strategies import kernels


def test_make_symmetric_kernel_both_orders():
    f = make_symmetric_kernel(2, [((1, 2), 0.5)])
    assert f[(1, 2)] == 0.5 and f[(2, 1)] == 0.5


def test_make_symmetric_kernel_rejects_diagonal():
    with pytest.raises(DiagonalEntry):
        make_symmetric_kernel(2, [((1, 1), 1.0)])


def test_make_symmetric_kernel_sorts():
    f = make_symmetric_kernel(3, [((3, 1, 2), 1.0)])
    assert dict(f.items()) == {(1, 2, 3): 1.0}


def test_make_symmetric_kernel_conflicts_and_lengths():
    with pytest.raises(ConflictingValues):
        make_symmetric_kernel(2, [((1, 2), 1.0), ((2, 1), 2.0)])
    with pytest.raises(OrderMismatch):
        make_symmetric_kernel(2, [((1, 2, 3), 1.0)])
    # repeating the same value is fine
    assert len(make_symmetric_kernel(2, [((1, 2), 1.0), ((2, 1), 1.0)])) == 1


def test_zero_coefficients_are_dropped():
    assert len(SymmetricKernel(2, {(1, 2): 0, (1, 3): 1})) == 1


def test_symmetrize_two_term_average():
    s = symmetrize(GeneralKernel(2, {(1, 2): 1}))
    assert s[(1, 2)] == Fraction(1, 2) and s[(2, 1)] == Fraction(1, 2)


def test_symmetrize_idempotent_on_symmetric():
    f = SymmetricKernel(2, {(1, 2): Fraction(1, 3), (2, 3): 2})
    assert dict(symmetrize(f).items()) == dict(f.to_general().items())


def test_symmetrize_keeps_diagonal_mass():
    s = symmetrize(GeneralKernel(2, {(1, 2): 2, (2, 1): 4, (3, 3): 6}))
    assert s[(1, 2)] == 3 and s[(2, 1)] == 3 and s[(3, 3)] == 6


def test_l2_norm_examples():
    assert l2_norm(SymmetricKernel(2, {(1, 2): 0.5})) == pytest.approx(math.sqrt(0.5))
    assert l2_norm(SymmetricKernel(3)) == 0
    assert l2_norm(GeneralKernel(2, {(1, 1): 3})) == 3


def test_influence_examples():
    f = SymmetricKernel(2, {(1, 2): 0.5})
    assert influence(f, 1) == 0.25 and influence(f, 3) == 0
    assert influence(SymmetricKernel(1, {(1,): 3}), 1) == 9
    assert influence(SymmetricKernel(2, {(1, 2): 1, (1, 3): 1}), 1) == 2


def test_restrict_off_diagonal_examples():
    g = GeneralKernel(2, {(1, 1): 5, (1, 2): 3})
    assert dict(restrict_off_diagonal(g).items()) == {(1, 2): 3}
    assert dict(restrict_diagonal(g).items()) == {(1, 1): 5}
    h = GeneralKernel(2, {(1, 2): 3, (2, 1): 1})
    assert dict(restrict_off_diagonal(h).items()) == dict(h.items())
    assert len(restrict_off_diagonal(GeneralKernel(3, {(1, 2, 1): 7}))) == 0


@given(kernels(exact=True))
def test_sq_norm_matches_ordered_sum(f):
    full = {idx: v for idx, v in f.full_items()}
    assert sq_norm(f) == oracles.sq(full)
    assert sq_norm(f) == inner(f, f)


@given(kernels(exact=True, order=2), kernels(exact=True, order=2))
def test_inner_is_ordered_sum(f, g):
    expect = sum((v * oracles.full_value(g, idx) for idx, v in f.full_items()), 0)
    assert inner(f, g) == expect


@given(kernels(exact=True, min_size=1))
def test_max_influence_bounded_by_norm(f):
    assert 0 <= max_influence(f) <= sq_norm(f)


@given(kernels(exact=True))
def test_symmetric_roundtrip_through_general(f):
    assert to_symmetric(f.to_general()).entries == f.entries


@given(kernels(exact=True), st.integers(0, 5))
def test_relabel_preserves_norm(f, off):
    assert sq_norm(relabel(f, off)) == sq_norm(f)


@given(kernels(exact=True), kernels(exact=True))
def test_kernel_sum_is_linear(f, g):
    if f.order != g.order:
        return
    s = f + g
    for idx in set(f.entries) | set(g.entries):
        assert s[idx] == f[idx] + g[idx]
