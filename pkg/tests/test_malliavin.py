import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rademacher_stein.chaos import ChaosDecomposition, RademacherPoint, evaluate, first_chaos, to_table
from rademacher_stein.errors import IndexOutOfRange, NotCentered
from rademacher_stein.kernel import SymmetricKernel
from rademacher_stein.malliavin import (
    apply_L,
    apply_L_inverse,
    apply_Pt,
    chain_rule_residual,
    chain_rule_scan,
    delta_D_equals_minus_L,
    dirichlet_forms,
    divergence,
    divergence_table,
    exchangeable_drift_check,
    gamma_decomposition,
    gamma_table,
    gradient,
    gradient_tables,
    ipp_sides,
    mehler_estimate,
    mehler_evaluate,
    mehler_integral_sides,
    pathwise_gradient,
)
from rademacher_stein.testfunctions import cosine, cube, linear, sine

import oracles
from strategies import decompositions

J2 = ChaosDecomposition(2, 0, {2: SymmetricKernel(2, {(1, 2): Fraction(1, 2)})})


def same(a, b):
    return a.mean == b.mean and {n: k.entries for n, k in a.kernels.items()} == {n: k.entries for n, k in b.kernels.items()}


def test_gradient_first_chaos_is_constant():
    g = gradient(first_chaos([2, 3, 5]))
    assert [g[k].mean for k in (1, 2, 3)] == [2, 3, 5]
    with pytest.raises(IndexOutOfRange):
        g[4]


def test_gradient_of_double_integral():
    g = gradient(J2)
    assert dict(g[1].kernel(1).items()) == {(2,): 1}


@given(decompositions(max_d=6))
def test_gradient_matches_pathwise_difference(dec):
    d = dec.dimension
    ref = oracles.pathwise_gradient(oracles.table_of(dec, d), d)
    g = gradient(dec)
    for k in range(1, d + 1):
        assert list(to_table(g[k], d, exact=True)) == ref[k - 1]
    assert [list(r) for r in gradient_tables(to_table(dec, exact=True))] == ref


def test_pathwise_gradient_examples():
    x1 = [-1, 1]
    assert all(pathwise_gradient(x1, 1, RademacherPoint(1, b)) == 1 for b in (0, 1))
    x1x2 = [1, -1, -1, 1]
    assert pathwise_gradient(x1x2, 1, RademacherPoint.from_signs([-1, 1])) == 1
    assert pathwise_gradient(x1x2, 1, RademacherPoint.from_signs([1, -1])) == -1
    assert pathwise_gradient([4] * 4, 2, RademacherPoint(2, 3)) == 0


def test_L_family_examples():
    assert same(apply_L(J2), J2.scale(-2))
    assert same(apply_L(apply_L_inverse(J2)), J2)
    assert same(apply_Pt(J2, 0.0), J2)
    dec = ChaosDecomposition(2, 0.5, J2.kernels)
    far = apply_Pt(dec, 50.0)
    assert far.mean == 0.5 and max(abs(v) for v in far.kernel(2).entries.values()) < 1e-40
    with pytest.raises(NotCentered):
        apply_L_inverse(dec)


@given(decompositions(max_d=6, centered=True))
def test_L_Linv_inverse(dec):
    assert same(apply_L(apply_L_inverse(dec)), dec)
    assert same(apply_L_inverse(apply_L(dec)), dec)


def test_divergence_examples():
    assert same(divergence(gradient(J2), 2), J2.scale(2))
    assert not divergence({1: ChaosDecomposition(2)}, 2).kernels


@given(decompositions(max_d=6))
def test_delta_D_is_minus_L(dec):
    assert delta_D_equals_minus_L(dec)


@given(st.integers(1, 5), st.data())
def test_divergence_is_adjoint(d, data):
    u = {k: data.draw(decompositions(d=d)) for k in range(1, d + 1)}
    div = divergence(u, d)
    div_tab = to_table(div, d, exact=True)
    u_tabs = [to_table(u[k], d, exact=True) for k in range(1, d + 1)]
    assert list(div_tab) == list(divergence_table(u_tabs, d))
    for _ in range(3):
        G = data.draw(decompositions(d=d))
        tg = oracles.table_of(G, d)
        lhs = oracles.mean([a * b for a, b in zip(tg, div_tab)])
        dg = oracles.pathwise_gradient(tg, d)
        rhs = oracles.mean([sum(dg[k][w] * u_tabs[k][w] for k in range(d)) for w in range(1 << d)])
        assert lhs == rhs


def test_mehler_examples():
    dec = ChaosDecomposition(3, 0.3, {1: SymmetricKernel(1, {(1,): 0.5}), 2: SymmetricKernel(2, {(2, 3): -0.4})})
    w = RademacherPoint(3, 5)
    assert mehler_evaluate(dec, 0.0, w) == pytest.approx(evaluate(dec, w), abs=1e-15)
    assert mehler_evaluate(dec, 50.0, w) == pytest.approx(0.3, abs=1e-12)
    for t in (0.1, 1.0, 3.0):
        assert mehler_evaluate(first_chaos([1.0]), t, RademacherPoint(1, 1)) == pytest.approx(math.exp(-t), abs=1e-15)


@given(decompositions(max_d=6, exact=False), st.floats(0, 4), st.data())
def test_mehler_matches_semigroup(dec, t, data):
    w = RademacherPoint(dec.dimension, data.draw(st.integers(0, (1 << dec.dimension) - 1)))
    assert mehler_evaluate(dec, t, w) == pytest.approx(float(evaluate(apply_Pt(dec, t), w)), abs=1e-10)


def test_mehler_monte_carlo_above_enumeration_limit():
    d = 20
    dec = first_chaos([1.0 / math.sqrt(d)] * d)
    w = RademacherPoint(d, (1 << d) - 1)
    est = mehler_estimate(dec, 0.7, w, samples=100_000, seed=4)
    exact = float(evaluate(apply_Pt(dec, 0.7), w))
    assert est.std_error > 0 and abs(est.value - exact) <= 4 * est.std_error


def test_chain_rule_examples():
    res, bound = chain_rule_residual([-1, 1], cube(), 1, RademacherPoint(1, 1))
    assert res == pytest.approx(2) and bound == pytest.approx(20)
    res, _ = chain_rule_residual([0.3, -1.2, 2.0, 0.1], linear(3.0, 1.0), 2, RademacherPoint(2, 1))
    assert res == pytest.approx(0, abs=1e-15)
    with pytest.raises(IndexOutOfRange):
        chain_rule_residual([0, 1], cosine(), 2, RademacherPoint(1, 0))


@given(decompositions(max_d=6, exact=False), st.sampled_from([cosine(1.0), sine(2.0, 0.4), cube()]))
def test_chain_rule_never_violated(dec, phi):
    assert chain_rule_scan(to_table(dec, exact=False), phi)["violations"] == 0


def test_drift_examples():
    assert exchangeable_drift_check(first_chaos([1])).passed
    assert exchangeable_drift_check(J2).passed
    assert exchangeable_drift_check(ChaosDecomposition(3, 4)).passed


@given(decompositions(max_d=6))
def test_drift_exact(dec):
    rep = exchangeable_drift_check(dec)
    assert rep.passed and all(e == 0 for e in rep.max_error.values())


@given(decompositions(max_d=6, exact=False, centered=True), st.sampled_from([cosine(1.0), sine(1.0), cube()]))
def test_integration_by_parts(dec, phi):
    lhs, rhs = ipp_sides(dec, phi)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@given(decompositions(max_d=6, centered=True))
def test_gamma_decomposition_matches_table(dec):
    g = to_table(gamma_decomposition(dec), dec.dimension, exact=False)
    assert np.allclose(g, np.asarray(gamma_table(dec), dtype=float), atol=1e-12)


@given(decompositions(max_d=6, exact=False, centered=True))
def test_dirichlet_forms_and_flip_bound(dec):
    e1, e2 = dirichlet_forms(dec)
    assert e2 <= e1 + 1e-12
    if all(n == 1 for n in dec.orders):
        assert e2 == pytest.approx(e1, abs=1e-12)
    elif dec.kernels:
        assert e2 < e1
    t = to_table(dec, exact=False)
    g = gradient_tables(t)
    idx = np.arange(1 << dec.dimension)
    for k in range(dec.dimension):
        bit = 1 << k
        assert np.all(np.abs(t[idx | bit] - t) <= 2 * np.abs(g[k]) + 1e-12)
        assert np.all(np.abs(t[idx & ~bit] - t) <= 2 * np.abs(g[k]) + 1e-12)


def test_gradient_components_skip_own_coordinate():
    dec = ChaosDecomposition(4, 0, {3: SymmetricKernel(3, {(1, 2, 3): 1.0, (2, 3, 4): 0.5})})
    for k, dk in gradient(dec).items():
        assert k not in dk.coordinates()


def test_mehler_integral_identity():
    dec = ChaosDecomposition(4, 0, {1: SymmetricKernel(1, {(1,): 0.5}),
                                    2: SymmetricKernel(2, {(1, 2): 0.3, (3, 4): -0.2}),
                                    3: SymmetricKernel(3, {(2, 3, 4): 0.25})})
    for b in range(16):
        lhs, rhs = mehler_integral_sides(dec, RademacherPoint(4, b))
        assert lhs == pytest.approx(rhs, abs=1e-8)
