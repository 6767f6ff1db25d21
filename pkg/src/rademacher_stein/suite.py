"""Seeded identity checks shared by the command line and the test-suite.

Every check returns a list of :class:`Check` rows.  Exact decompositions are
compared with ``==``; float ones within the stated tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List

import numpy as np

from .chaos import RademacherPoint, evaluate, product, to_table, variance
from .contraction import check_estimates
from .engine import distance, enumerate_expectation
from .generators import random_decomposition, random_kernel, rng_for
from .kernel import sq_norm
from .malliavin import (
    apply_L,
    apply_L_inverse,
    apply_Pt,
    chain_rule_scan,
    delta_D_equals_minus_L,
    dirichlet_forms,
    exchangeable_drift_check,
    gradient,
    gradient_tables,
    ipp_sides,
    is_first_chaos,
    mehler_evaluate,
)
from .stein import bound_general
from .testfunctions import bump, cosine, cube, linear, sine

IDENTITY_TOL = 1e-10


@dataclass
class Check:
    id: str
    label: str
    lhs: object
    rhs: object
    passed: bool
    tolerance: float = 0.0
    seed: int = -1

    def to_json(self) -> dict:
        def num(v):
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, (bool, np.bool_)):
                return bool(v)
            return float(v)

        return {"id": self.id, "label": self.label, "lhs": num(self.lhs), "rhs": num(self.rhs),
                "pass": bool(self.passed), "tolerance": self.tolerance, "seed": self.seed}


def _close(a, b, tol):
    return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(a)), abs(float(b)))


# ---------------------------------------------------------------------------


def isometry_product(seed: int, exact: bool = True, max_order: int = 4, support: int = 6, max_d: int = 10) -> List[Check]:
    """``E[J_q(f)^2] = q! ||f||^2`` and the product formula against table products."""
    rng = rng_for(seed, 1)
    d = int(rng.integers(support, max_d + 1))
    q, n, m = (int(x) for x in rng.integers(1, max_order + 1, size=3))
    tol = 0.0 if exact else IDENTITY_TOL
    rows = []

    f = random_kernel(rng, q, support, 0.5, exact)
    from .chaos import ChaosDecomposition

    tf = to_table(ChaosDecomposition(d, 0, {q: f}), exact=exact)
    lhs = enumerate_expectation(tf * tf, d, exact=exact).value
    rhs = math.factorial(q) * sq_norm(f)
    rows.append(Check("isometry", "E[J_q(f)^2] = q! |f|^2", lhs, rhs,
                      lhs == rhs if exact else _close(lhs, rhs, tol), tol, seed))

    a = random_kernel(rng, n, support, 0.5, exact)
    b = random_kernel(rng, m, support, 0.5, exact)
    ta = to_table(ChaosDecomposition(d, 0, {n: a}), exact=exact)
    tb = to_table(ChaosDecomposition(d, 0, {m: b}), exact=exact)
    tp = to_table(product(a, b, d), exact=exact)
    direct = ta * tb
    if exact:
        err = max(abs(x - y) for x, y in zip(tp, direct))
        ok = err == 0
    else:
        err = float(np.max(np.abs(np.asarray(tp, float) - np.asarray(direct, float))))
        ok = err <= tol * max(1.0, float(np.max(np.abs(np.asarray(direct, float)))))
    rows.append(Check("product", "J_n(f) J_m(g) = sum_r sum_l contraction terms", err, 0, ok, tol, seed))
    return rows


def operators(seed: int, d: int = 8, exact: bool = False) -> List[Check]:
    """Operator identities on one seeded decomposition."""
    rng = rng_for(seed, 2)
    dd = int(rng.integers(2, d + 1))
    dec = random_decomposition(rng, dd, max_order=min(dd, 4), density=0.4, exact=exact)
    tol = IDENTITY_TOL
    rows = []

    ok = delta_D_equals_minus_L(dec)
    rows.append(Check("delta_D", "delta D F = -L F", float(ok), 1.0, ok, 0.0 if exact else 1e-12, seed))

    phis = [cosine(1.0), sine(0.7, 0.3), cube()]
    phi = phis[seed % len(phis)]
    lhs, rhs = ipp_sides(dec, phi)
    rows.append(Check("ipp", "E[F phi(F)] = E[<D phi(F), -D L^-1 F>]", lhs, rhs, _close(lhs, rhs, tol), tol, seed))

    back = apply_L(apply_L_inverse(dec))
    diff = to_table(back - dec, exact=False)
    err = float(np.max(np.abs(diff)))
    rows.append(Check("L_Linv", "L L^-1 F = F", err, 0.0, err <= tol, tol, seed))

    grad = gradient(dec)
    leak = [k for k, dk in grad.items() if k in dk.coordinates()]
    rows.append(Check("grad_indep", "D_k F does not depend on X_k", len(leak), 0, not leak, 0.0, seed))

    t = to_table(dec, exact=False)
    g = gradient_tables(t)
    idx = np.arange(1 << dd)
    worst = 0.0
    for k in range(1, dd + 1):
        bit = 1 << (k - 1)
        for forced in (t[idx | bit], t[idx & ~bit]):
            worst = max(worst, float(np.max(np.abs(forced - t) - 2 * np.abs(g[k - 1]))))
    rows.append(Check("flip_bound", "|F_k^+- - F| <= 2|D_k F|", worst, 0.0, worst <= tol, tol, seed))

    e1, e2 = dirichlet_forms(dec)
    ok = e2 <= e1 + tol * max(1.0, e1)
    if is_first_chaos(dec):
        ok = ok and _close(e1, e2, tol)
    else:
        ok = ok and e2 < e1 - tol * max(1.0, e1)
    rows.append(Check("dirichlet", "E|D L^-1 F|^2 <= E|DF|^2, equality iff first chaos", e2, e1, ok, tol, seed))

    tt = float(rng.uniform(0.05, 2.0))
    omega = RademacherPoint(dd, int(rng.integers(1 << dd)))
    lhs = float(mehler_evaluate(dec, tt, omega))
    rhs = float(evaluate(apply_Pt(dec, tt), omega))
    rows.append(Check("mehler", "Mehler average = P_t F", lhs, rhs, _close(lhs, rhs, tol), tol, seed))
    return rows


CHAIN_PHIS = (cosine(1.0), sine(1.3, 0.2), cube(), linear(2.0, -1.0), bump(2.0, 0.0))


def chain_rule(seed: int, max_d: int = 8) -> List[Check]:
    rng = rng_for(seed, 3)
    d = int(rng.integers(1, max_d + 1))
    dec = random_decomposition(rng, d, max_order=min(d, 3), density=0.5, centered=False)
    t = to_table(dec, exact=False)
    sd = math.sqrt(max(float(variance(dec)), 1e-300))
    t = t / sd
    rows = []
    for phi in CHAIN_PHIS:
        rep = chain_rule_scan(t, phi)
        rows.append(Check(f"chain_rule[{phi.name}]", "|D phi(F) - phi'(F) DF + ...| <= (10/3)|phi'''| |DF|^3",
                          rep["violations"], 0, rep["violations"] == 0, 1e-12, seed))
    return rows


def drift(seed: int, max_d: int = 6, exact: bool = True) -> List[Check]:
    rng = rng_for(seed, 4)
    d = int(rng.integers(1, max_d + 1))
    dec = random_decomposition(rng, d, density=0.5, exact=exact)
    rep = exchangeable_drift_check(dec)
    err = max(rep.max_error.values(), default=0.0)
    return [Check("drift", "E[F' - F | X] = -(n/d) F on each chaos", err, 0.0, rep.passed, 0.0 if exact else 1e-12, seed)]


def estimates(seed: int, exact: bool = True, max_order: int = 4, support: int = 8) -> List[Check]:
    rng = rng_for(seed, 5)
    n, m = (int(x) for x in rng.integers(1, max_order + 1, size=2))
    f = random_kernel(rng, n, support, 0.35, exact)
    g = random_kernel(rng, m, support, 0.35, exact)
    rep = check_estimates(f, g)
    return [Check(f"estimate[{r.id}]", f"contraction estimate {r.id} ({r.relation}) n={n} m={m}",
                  r.lhs, r.rhs, r.passed, 0.0 if exact else 1e-10, seed) for r in rep.rows]


def master_bound(seed: int, max_d: int = 10, a: float | None = None) -> List[Check]:
    rng = rng_for(seed, 6)
    d = int(rng.integers(1, max_d + 1))
    dec = random_decomposition(rng, d, max_order=min(d, 3), density=0.4)
    v = float(variance(dec))
    dec = dec.scale(1.0 / math.sqrt(v)) if v > 0 else dec
    rows = []
    for aa in ((0.5, 1.0, 2.0) if a is None else (a,)):
        h = cosine(aa)
        dist = distance(dec, h)
        b = bound_general(dec, h).total
        rows.append(Check(f"master[a={aa}]", "|E h(F) - E h(Z)| <= bound", dist, b, b >= dist - 1e-9, 1e-9, seed))
    return rows


SUITES = {
    "isometry": isometry_product,
    "operators": operators,
    "chain": chain_rule,
    "drift": drift,
    "estimates": estimates,
    "master": master_bound,
}


def run_all(seeds: int, d: int = 6, exact: bool = True) -> List[Check]:
    """Every identity family over ``seeds`` seeds, dimensions capped at ``d``."""
    rows: List[Check] = []
    for s in range(seeds):
        rows += isometry_product(s, exact=exact, support=min(6, d), max_d=max(d, min(6, d)))
        rows += operators(s, d=d, exact=exact)
        rows += chain_rule(s, max_d=d)
        rows += drift(s, max_d=d, exact=exact)
        rows += estimates(s, exact=exact, support=min(8, d + 2))
        rows += master_bound(s, max_d=d, a=(0.5, 1.0, 2.0)[s % 3])
    return rows
