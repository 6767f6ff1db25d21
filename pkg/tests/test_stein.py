import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rademacher_stein.chaos import ChaosDecomposition, first_chaos, to_table, variance
from rademacher_stein.engine import distance
from rademacher_stein.errors import (
    DegenerateVariance,
    Inapplicable,
    MissingNorm,
    MissingTailCertificate,
    NotCentered,
    NotNormalized,
    ZeroMeasure,
)
from rademacher_stein.generators import normalize, random_decomposition, random_kernel, rng_for
from rademacher_stein.kernel import SymmetricKernel
from rademacher_stein.malliavin import gradient_tables
from rademacher_stein.sparse import SparseIndexSet
from rademacher_stein.stein import (
    WeightSequence,
    bound_average,
    bound_double_integral,
    bound_fixed_chaos,
    bound_general,
    bound_single_plus_double,
    bound_sparse_stats,
    bound_two_runs,
    bound_weighted_sparse,
    chatterjee_bound,
    fixed_chaos_terms,
    parse_weights,
    two_runs_decomposition,
    two_runs_variance,
    two_runs_variance_bruteforce,
    wasserstein_bound,
)
from rademacher_stein.testfunctions import cosine, cube

import oracles

H = cosine(1.0)
ROOT_HALF = 1 / math.sqrt(2)


def partial_sum(n):
    return first_chaos([1 / math.sqrt(n)] * n)


@pytest.mark.parametrize("n", [1, 4, 9, 16])
def test_partial_sums_bound_is_twenty_thirds_over_n(n):
    b = bound_general(partial_sum(n), H)
    assert b.B1 == pytest.approx(0, abs=1e-12)
    assert b.total == pytest.approx(20 / (3 * n) * H.sup_h2, rel=1e-12)


def test_single_sign_bound():
    b = bound_general(first_chaos([1]), H)
    assert b.B1 == 0 and b.B2 == pytest.approx(20 / 3)


def test_general_bound_requires_centering_and_norms():
    with pytest.raises(NotCentered):
        bound_general(ChaosDecomposition(1, 1, {1: SymmetricKernel(1, {(1,): 1})}), H)
    with pytest.raises(MissingNorm):
        bound_general(first_chaos([1]), cube())


def test_enumerated_bound_matches_fixed_chaos_closed_form():
    f = SymmetricKernel(2, {(1, 2): 0.5})
    dec = ChaosDecomposition(2, 0, {2: f})
    enum = bound_general(dec, H)
    closed = bound_fixed_chaos(f, H)
    assert enum.B1_variance_form == pytest.approx(closed.B1, abs=1e-12)
    assert enum.B2 <= closed.B2 + 1e-12


@pytest.mark.parametrize("q", [2, 3])
def test_fixed_chaos_closed_form_matches_enumeration(q):
    for s in range(15):
        f = random_kernel(rng_for(s, q), q, 6, 0.5)
        d = 6
        t = to_table(ChaosDecomposition(d, 0, {q: f}), exact=False)
        g = gradient_tables(t)
        norm2 = (g * g).sum(axis=0)
        lhs = float(np.mean((1 - norm2 / q) ** 2))
        terms = fixed_chaos_terms(f)
        assert lhs == pytest.approx(float(terms["Mww"]), rel=1e-10, abs=1e-12)
        assert lhs <= float(terms["Mww2"]) * (1 + 1e-10) + 1e-12
        fourth = float(np.mean((g ** 4).sum(axis=0)))
        assert fourth <= float(terms["Mww4"]) * (1 + 1e-10) + 1e-12


def test_fixed_chaos_zero_kernel():
    assert fixed_chaos_terms(SymmetricKernel(2))["Mww"] == 1


def test_fixed_chaos_single_entry_normalized():
    terms = fixed_chaos_terms(SymmetricKernel(2, {(1, 2): Fraction(1, 2)}))
    # 2||f||^2 = 1, so only contraction terms remain: 1_D kills f*_1^1 f, and f*_2^2 f is a constant
    assert terms["norms"]["|(f*_1^1 f)~1_D|^2"] == 0
    assert terms["Mww"] == 0


def test_double_integral_single_entry():
    f = SymmetricKernel(2, {(1, 2): 0.5})
    b = bound_double_integral(f, H)
    assert b.trace == pytest.approx(1 / 8)
    assert b.trace_chain == pytest.approx(4 * math.sqrt(2) * 1 * math.sqrt(1 / 8) + 160 / 8)
    assert b.value <= b.trace_chain
    with pytest.raises(NotNormalized):
        bound_double_integral(SymmetricKernel(2, {(1, 2): ROOT_HALF}), H)


def test_double_integral_blocks_decay():
    prev = None
    for k in (2, 8, 32):
        f = SymmetricKernel(2, {(2 * i + 1, 2 * i + 2): 1 / (2 * math.sqrt(k)) for i in range(k)})
        b = bound_double_integral(f, H)
        assert b.trace == pytest.approx(1 / (8 * k))
        if prev is not None:
            assert b.value < prev
        prev = b.value


def test_chatterjee_examples():
    assert chatterjee_bound(SymmetricKernel(2)) == 0
    v = chatterjee_bound(SymmetricKernel(2, {(1, 2): ROOT_HALF}))
    assert v == pytest.approx(0.5 + 2.5 * 2 * 0.5 ** 1.5)


def test_double_integral_dominates_distance():
    for s in range(10):
        f = random_kernel(rng_for(s, 40), 2, 8, 0.5)
        f = f.scale(1 / math.sqrt(2 * sum(v * v for v in f.entries.values()) * 2))
        dec = ChaosDecomposition(8, 0, {2: f})
        assert bound_double_integral(f, H).value >= distance(dec, H)


def test_average_examples():
    assert bound_average(WeightSequence.partial_sum(10), H) == pytest.approx(20 / 30, rel=1e-12)
    assert bound_average([1.0], H) == pytest.approx(20 / 3)
    for r in (2, 5, 50):
        alpha = WeightSequence.inverse_tail(r)
        assert bound_average(alpha, H, require_tail=True) <= min(4 * H.sup_h, H.sup_h2) / r + 20 * H.sup_h2 / (3 * (r - 1))
    with pytest.raises(MissingTailCertificate):
        bound_average(WeightSequence([0.5, 0.5]), H, require_tail=True)


def test_parse_weights():
    assert len(parse_weights("ones:n=7")) == 7
    assert parse_weights("inv:r=3").offset == 3
    with pytest.raises(ValueError):
        parse_weights("zeta:s=2")


def test_single_plus_double_examples():
    f = WeightSequence([0.5, 0.5, 0.5, 0.5])
    v = bound_single_plus_double(f, SymmetricKernel(2), H)
    assert v == pytest.approx(160 / 3 * 4 * 0.5 ** 4)
    g = SymmetricKernel(2, {(1, 2): 0.5})
    v = bound_single_plus_double([], g, H)
    assert v == pytest.approx(160 / 3 * 16 * 2 * 0.5 ** 4)
    with pytest.raises(NotNormalized):
        bound_single_plus_double([], SymmetricKernel(2, {(1, 2): ROOT_HALF}), H)


def test_two_runs_variance_example():
    alpha = WeightSequence([1, 1, 1])
    assert two_runs_variance(alpha) == Fraction(13, 16)
    assert two_runs_variance_bruteforce(alpha) == Fraction(13, 16)
    assert oracles.two_runs_variance([1, 1, 1]) == Fraction(13, 16)


@given(st.lists(st.fractions(-3, 3, max_denominator=5), min_size=1, max_size=8))
def test_two_runs_variance_matches_bruteforce(vals):
    alpha = WeightSequence(vals)
    assert two_runs_variance(alpha) == oracles.two_runs_variance(vals)


def test_two_runs_decomposition_is_standardized():
    alpha = WeightSequence([1.0, 2.0, -0.5, 1.5])
    f, g, shift = two_runs_decomposition(alpha)
    dec = ChaosDecomposition(5, 0, {1: f, 2: g})
    assert float(variance(dec)) == pytest.approx(1)
    # G = sum alpha_i xi_i xi_{i+1} with xi = (1 + X)/2, standardized
    t = to_table(dec, exact=False)
    for b in range(32):
        xi = [(b >> i) & 1 for i in range(5)]
        G = sum(a * xi[i] * xi[i + 1] for i, a in enumerate(alpha.values))
        EG = sum(alpha.values) / 4
        assert t[b] == pytest.approx((G - EG) / math.sqrt(float(two_runs_variance(alpha))))


def test_two_runs_bound_dominates_and_degenerate():
    for n in (3, 6, 10):
        alpha = WeightSequence.ones(n)
        bound, var = bound_two_runs(alpha, H)
        f, g, _ = two_runs_decomposition(alpha)
        assert bound >= distance(ChaosDecomposition(n + 1, 0, {1: f, 2: g}), H)
    with pytest.raises(DegenerateVariance):
        bound_two_runs(WeightSequence([0.0]), H)


def test_wasserstein_examples():
    assert wasserstein_bound(0, 0, 1) == 0
    with pytest.raises(Inapplicable):
        wasserstein_bound(1, 1, 1)
    for n in (6, 10, 100):
        assert wasserstein_bound(0, 20 / (3 * n), 1) <= 9 / math.sqrt(n)
    with pytest.raises(Inapplicable):
        wasserstein_bound(0, 20 / 15, 1)  # n = 5


def test_sparse_stats_examples():
    F = SparseIndexSet(2, 4, [(1, 2), (3, 4)])
    stat1, stat2, b = bound_sparse_stats(F, H)
    assert stat1 == 0
    assert stat2 == pytest.approx((2 / 4) ** 0.25)


def test_weighted_sparse_examples():
    F = SparseIndexSet(3, 9, [(1, 2, 3), (4, 5, 6), (1, 5, 9), (2, 4, 7)])
    ones = WeightSequence.ones(9)
    s1, s2, _ = bound_sparse_stats(F, H)
    w1, w2 = bound_weighted_sparse(ones, F)
    assert (w1, w2) == pytest.approx((s1, s2))
    with pytest.raises(ZeroMeasure):
        bound_weighted_sparse(WeightSequence([1.0], offset=20), F)


def test_master_bound_dominates_random_decompositions():
    for s in range(20):
        dec = normalize(random_decomposition(rng_for(s, 60), 7, max_order=3, density=0.4))
        for a in (0.5, 1.0, 2.0):
            h = cosine(a)
            assert bound_general(dec, h).total >= distance(dec, h) - 1e-9


def test_structural_path_matches_enumeration():
    for s in range(4):
        dec = normalize(random_decomposition(rng_for(s), 10, max_order=3, density=0.3))
        a = bound_general(dec, H)
        b = bound_general(dec, H, enum_limit=9)
        assert b.B1_variance_form == pytest.approx(a.B1_variance_form, rel=1e-10)
        assert b.B2 == pytest.approx(a.B2, rel=1e-10)
        assert b.B1 >= a.B1 - 1e-12
