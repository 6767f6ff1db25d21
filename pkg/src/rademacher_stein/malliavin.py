"""Discrete Malliavin operators on chaos decompositions and truth tables.

Chaos-side definitions::

    D_k F    = sum_n n J_{n-1}(f_n(., k))
    L F      = -sum_n n J_n(f_n)
    L^-1 F   = -sum_n (1/n) J_n(f_n)           (F centered)
    P_t F    = E F + sum_n e^{-nt} J_n(f_n)

Pathwise, ``D_k F = (F_k^+ - F_k^-) / 2`` where ``F_k^+-`` force the k-th sign.
The divergence is the adjoint of ``D``: ``delta(u) = sum_k X_k E_k[u_k]`` with
``E_k`` averaging out the k-th sign, which on chaos kernels means dropping
the terms that involve ``k`` and raising the order by one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Tuple

import numpy as np
from scipy import integrate

from .chaos import (
    ChaosDecomposition,
    RademacherPoint,
    as_table,
    compress,
    decompose_walsh,
    evaluate,
    to_table,
)
from .engine import MAX_ENUM_DIMENSION, _block_generator, Estimate
from .errors import DimensionLimit, IndexOutOfRange, NotCentered
from .kernel import SymmetricKernel, kernels_equal
from .testfunctions import TestFunction

MEHLER_ENUM_LIMIT = 16


# ---------------------------------------------------------------------------
# gradient


@dataclass(frozen=True)
class GradientField:
    """``k -> D_k F`` for ``k = 1..dimension``; missing keys are zero."""

    dimension: int
    components: Mapping[int, ChaosDecomposition]

    def __getitem__(self, k: int) -> ChaosDecomposition:
        if not 1 <= k <= self.dimension:
            raise IndexOutOfRange(f"coordinate {k} outside 1..{self.dimension}")
        return self.components.get(k, ChaosDecomposition.zero(self.dimension))

    def items(self):
        return self.components.items()


def gradient(dec: ChaosDecomposition) -> GradientField:
    d = dec.dimension
    comps: Dict[int, ChaosDecomposition] = {}
    for k in sorted(dec.coordinates()):
        mean = 0
        kernels = {}
        for n, f in dec.kernels.items():
            sec = f.section(k)
            if n == 1:
                mean += sec
            elif len(sec):
                kernels[n - 1] = sec.scale(n)
        comps[k] = ChaosDecomposition(d, mean, kernels)
    return GradientField(d, comps)


def pathwise_gradient(table, k: int, omega: RademacherPoint):
    """``(F(omega with X_k=+1) - F(omega with X_k=-1)) / 2``."""
    t, d, _ = as_table(table)
    if not 1 <= k <= d:
        raise IndexOutOfRange(f"coordinate {k} outside 1..{d}")
    if omega.dimension != d:
        raise IndexOutOfRange("point and table dimensions differ")
    bit = 1 << (k - 1)
    diff = t[omega.bits | bit] - t[omega.bits & ~bit]
    return diff / 2 if not isinstance(diff, int) else Fraction(diff, 2)


def gradient_tables(table) -> np.ndarray:
    """All pathwise gradients at once: row ``k-1`` is the table of ``D_k F``."""
    t, d, exact = as_table(table)
    idx = np.arange(1 << d, dtype=np.int64)
    rows = []
    for k in range(d):
        bit = 1 << k
        diff = t[idx | bit] - t[idx & ~bit]
        rows.append(np.array([Fraction(v) / 2 for v in diff], dtype=object) if exact else diff / 2)
    if not rows:
        return np.zeros((0, 1 << d), dtype=object if exact else float)
    return np.stack(rows)


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck family


def apply_L(dec: ChaosDecomposition) -> ChaosDecomposition:
    return dec.map_kernels(lambda n, k: k.scale(-n), mean=0)


def apply_L_inverse(dec: ChaosDecomposition) -> ChaosDecomposition:
    if not dec.is_centered:
        raise NotCentered(f"L^-1 needs a centered variable, mean is {dec.mean!r}")
    exact = dec.is_exact
    return dec.map_kernels(lambda n, k: k.scale(Fraction(-1, n) if exact else -1.0 / n), mean=0)


def apply_Pt(dec: ChaosDecomposition, t: float) -> ChaosDecomposition:
    if t < 0:
        raise ValueError("t must be >= 0")
    return dec.map_kernels(lambda n, k: k.scale(math.exp(-n * t)))


# ---------------------------------------------------------------------------
# divergence


def divergence(u: Mapping[int, ChaosDecomposition] | GradientField, dimension: int | None = None) -> ChaosDecomposition:
    """``delta(u) = sum_k X_k E_k[u_k]`` computed on chaos kernels.

    For ``g`` of order ``n`` not involving ``k``, ``X_k J_n(g) = J_{n+1}(h)`` with
    ``h(I + k) = g(I) / (n + 1)``.
    """
    items = list(u.items())
    d = dimension if dimension is not None else max([c.dimension for _, c in items] + [max((k for k, _ in items), default=0)])
    acc: Dict[int, dict] = {}
    for k, comp in items:
        if comp.mean != 0:
            acc.setdefault(1, {})
            acc[1][(k,)] = acc[1].get((k,), 0) + comp.mean
        for n, g in comp.kernels.items():
            bucket = acc.setdefault(n + 1, {})
            for idx, v in g.items():
                if k in idx:
                    continue
                key = tuple(sorted(idx + (k,)))
                val = Fraction(v, n + 1) if isinstance(v, (int, Fraction)) else v / (n + 1)
                bucket[key] = bucket.get(key, 0) + val
    return ChaosDecomposition(d, 0, {n: SymmetricKernel(n, e) for n, e in acc.items() if e})


def divergence_table(u_tables, d: int) -> np.ndarray:
    """Adjoint of the pathwise gradient on truth tables.

    ``u_tables[k-1]`` is the table of ``u_k``; the result satisfies
    ``E[G delta(u)] = E[<DG, u>]`` for every table ``G``.
    """
    if d > MAX_ENUM_DIMENSION:
        raise DimensionLimit(f"d={d} exceeds {MAX_ENUM_DIMENSION}")
    idx = np.arange(1 << d, dtype=np.int64)
    out = None
    for k in range(d):
        uk = np.asarray(u_tables[k])
        bit = 1 << k
        avg = uk[idx | bit] + uk[idx & ~bit]
        xk = np.where(idx & bit, 1, -1)
        term = np.array([Fraction(a) * s / 2 for a, s in zip(avg, xk)], dtype=object) if avg.dtype == object else avg * xk / 2
        out = term if out is None else out + term
    if out is None:
        out = np.zeros(1 << d)
    return out


# ---------------------------------------------------------------------------
# Mehler representation


def _mehler_weights(t: float, s: int) -> np.ndarray:
    p_flip = (1 - math.exp(-t)) / 2
    idx = np.arange(1 << s, dtype=np.int64)
    pc = np.zeros(1 << s, dtype=np.int64)
    for k in range(s):
        pc += (idx >> k) & 1
    return (p_flip ** pc) * ((1 - p_flip) ** (s - pc))


def _local_bits(omega: RademacherPoint, coords) -> int:
    b = 0
    for j, c in enumerate(coords):
        if c > omega.dimension:
            raise IndexOutOfRange(f"coordinate {c} outside the point")
        if (omega.bits >> (c - 1)) & 1:
            b |= 1 << j
    return b


def mehler_evaluate(dec: ChaosDecomposition, t: float, omega: RademacherPoint,
                    samples: int = 200_000, seed: int = 0) -> float:
    """``E[F(X^t) | X = omega]``: each sign is kept with probability ``e^{-t}``
    and otherwise resampled.

    Exact over all keep/resample patterns when ``F`` uses at most 16
    coordinates; seeded Monte Carlo otherwise (see :func:`mehler_estimate`).
    """
    return mehler_estimate(dec, t, omega, samples, seed).value


def mehler_estimate(dec: ChaosDecomposition, t: float, omega: RademacherPoint,
                    samples: int = 200_000, seed: int = 0) -> Estimate:
    if t < 0:
        raise ValueError("t must be >= 0")
    small, coords = compress(dec)
    s = small.dimension
    b = _local_bits(omega, coords)
    if s <= MEHLER_ENUM_LIMIT:
        table = to_table(small, exact=False)
        w = _mehler_weights(t, s)
        flips = np.arange(1 << s, dtype=np.int64)
        return Estimate(float(np.dot(w, table[b ^ flips])), 0.0, 1 << s, 0)
    from .engine import evaluate_batch

    p_flip = (1 - math.exp(-t)) / 2
    base = np.where((b >> np.arange(s)) & 1, 1, -1).astype(np.int8)
    tot = 0.0
    tot2 = 0.0
    done = 0
    blk = 0
    while done < samples:
        n = min(1 << 14, samples - done)
        rng = _block_generator(seed, blk)
        flip = rng.random((n, s)) < p_flip
        signs = np.where(flip, -base, base)
        y = evaluate_batch(small, signs)
        tot += float(y.sum())
        tot2 += float((y * y).sum())
        done += n
        blk += 1
    mean = tot / samples
    var = max(tot2 / samples - mean * mean, 0.0) * samples / (samples - 1)
    return Estimate(mean, math.sqrt(var / samples), samples, seed)


# ---------------------------------------------------------------------------
# chain rule


def chain_rule_residual(table, phi: TestFunction, k: int, omega: RademacherPoint,
                        slack: float = 1e-12) -> Tuple[float, float]:
    """Pathwise chain-rule remainder and its bound ``(10/3)||phi'''|| |D_k F|^3``.

    The residual is ``|D_k phi(F) - phi'(F) D_k F + (phi''(F+) + phi''(F-))/2 (D_k F)^2 X_k|``.
    Raises ``AssertionError`` if it exceeds the bound by more than ``slack``
    (absolute, for rounding).
    """
    t, d, _ = as_table(table)
    if not 1 <= k <= d:
        raise IndexOutOfRange(f"coordinate {k} outside 1..{d}")
    res, bnd = _chain_rule_arrays(t.astype(float), phi, k, np.array([omega.bits]))
    r, b = float(res[0]), float(bnd[0])
    assert r <= b + slack * max(1.0, b), f"chain rule violated: {r} > {b}"
    return r, b


def _chain_rule_arrays(t: np.ndarray, phi: TestFunction, k: int, bits: np.ndarray):
    if phi.sup_h3 is None:
        raise ValueError(f"{phi.name} has no certified third-derivative bound")
    bit = 1 << (k - 1)
    fp = t[bits | bit]
    fm = t[bits & ~bit]
    f = t[bits]
    xk = np.where(bits & bit, 1.0, -1.0)
    dk = (fp - fm) / 2
    dphi = (phi(fp) - phi(fm)) / 2
    corr = 0.5 * (phi.d2(fp) + phi.d2(fm)) * dk * dk * xk
    res = np.abs(dphi - phi.d1(f) * dk + corr)
    bound = (10.0 / 3.0) * phi.sup_h3 * np.abs(dk) ** 3
    return res, bound


def chain_rule_scan(table, phi: TestFunction, slack: float = 1e-12) -> dict:
    """Check the chain-rule bound at every ``(omega, k)``; returns counts and the worst ratio."""
    t, d, _ = as_table(table)
    t = t.astype(float)
    bits = np.arange(1 << d, dtype=np.int64)
    violations = 0
    worst = 0.0
    for k in range(1, d + 1):
        res, bnd = _chain_rule_arrays(t, phi, k, bits)
        violations += int(np.sum(res > bnd + slack * np.maximum(1.0, bnd)))
        ok = bnd > 0
        if np.any(ok):
            worst = max(worst, float(np.max(res[ok] / bnd[ok])))
    return {"checked": d << d, "violations": violations, "worst_ratio": worst}


# ---------------------------------------------------------------------------
# exchangeable pairs


@dataclass
class DriftReport:
    dimension: int
    max_error: Dict[int, float] = field(default_factory=dict)
    passed: bool = True


def exchangeable_drift_check(dec: ChaosDecomposition, tol: float = 1e-12) -> DriftReport:
    """Verify ``E[J_n(f_n)' - J_n(f_n) | X] = -(n/d) J_n(f_n)`` at every point.

    ``F'`` replaces the sign at a uniform index ``I`` by an independent copy; the
    conditional expectation is enumerated over ``I`` and the fresh sign.
    Exact comparison for rational decompositions.
    """
    d = dec.dimension
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if d > MAX_ENUM_DIMENSION:
        raise DimensionLimit(f"d={d} exceeds {MAX_ENUM_DIMENSION}")
    exact = dec.is_exact
    rep = DriftReport(d)
    idx = np.arange(1 << d, dtype=np.int64)
    for n, f in dec.kernels.items():
        t = to_table(ChaosDecomposition(d, 0, {n: f}), exact=exact)
        drift = None
        for i in range(d):
            bit = 1 << i
            # fresh sign +1 or -1, each with probability 1/2
            change = (t[idx | bit] + t[idx & ~bit]) - 2 * t
            drift = change if drift is None else drift + change
        if exact:
            lhs = [Fraction(v, 2 * d) for v in drift]
            rhs = [Fraction(-n, d) * v for v in t]
            err = max((abs(a - b) for a, b in zip(lhs, rhs)), default=0)
            ok = err == 0
        else:
            lhs = drift / (2 * d)
            rhs = -(n / d) * t
            err = float(np.max(np.abs(lhs - rhs)))
            ok = err <= tol * max(1.0, float(np.max(np.abs(t))))
        rep.max_error[n] = float(err)
        rep.passed &= bool(ok)
    return rep


# ---------------------------------------------------------------------------
# identities


def gamma_decomposition(dec: ChaosDecomposition) -> ChaosDecomposition:
    """Chaos decomposition of ``<DF, -DL^-1 F>`` through the product formula."""
    from .chaos import multiply

    grad = gradient(dec)
    ginv = gradient(apply_L_inverse(dec))
    out = ChaosDecomposition.zero(dec.dimension)
    for k, dk in grad.items():
        out = out + multiply(dk, -ginv[k])
    return out


def gamma_table(dec: ChaosDecomposition) -> np.ndarray:
    """Truth table of ``<DF, -DL^-1 F>`` from pathwise gradients."""
    exact = dec.is_exact
    a = gradient_tables(to_table(dec, exact=exact))
    b = gradient_tables(to_table(apply_L_inverse(dec), exact=exact))
    return -(a * b).sum(axis=0)


def ipp_sides(dec: ChaosDecomposition, phi: TestFunction) -> Tuple[float, float]:
    """``(E[F phi(F)], E[<D phi(F), -D L^-1 F>])`` by enumeration; ``F`` centered."""
    t = to_table(dec, exact=False)
    lhs = float(np.mean(t * phi(t)))
    dphi = gradient_tables(phi(t))
    dinv = gradient_tables(to_table(apply_L_inverse(dec), exact=False))
    rhs = float(np.mean(-(dphi * dinv).sum(axis=0)))
    return lhs, rhs


def delta_D_equals_minus_L(dec: ChaosDecomposition, atol: float = 1e-12) -> bool:
    lhs = divergence(gradient(dec), dec.dimension)
    rhs = apply_L(dec)
    tol = 0 if dec.is_exact else atol
    if set(lhs.orders) != set(rhs.orders) and tol == 0:
        return False
    return all(kernels_equal(lhs.kernel(n) or SymmetricKernel(n), (-rhs).kernel(n) or SymmetricKernel(n), tol)
               for n in set(lhs.orders) | set(rhs.orders))


def mehler_integral_sides(dec: ChaosDecomposition, omega: RademacherPoint) -> Tuple[float, float]:
    """Both sides of ``<DF,-DL^-1F> = int_0^inf e^{-t} <DF, E[DF(X^t)|X]> dt`` at ``omega``."""
    grad = gradient(dec)
    lhs = float(np.asarray(gamma_table(dec), dtype=float)[omega.bits])
    comps = [(float(evaluate(dk, omega)), dk) for _, dk in grad.items()]

    def integrand(t):
        return math.exp(-t) * sum(v * float(evaluate(apply_Pt(dk, t), omega)) for v, dk in comps)

    rhs, _ = integrate.quad(integrand, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return lhs, rhs


def dirichlet_forms(dec: ChaosDecomposition) -> Tuple[float, float]:
    """``(E||DF||^2, E||DL^-1F||^2)`` by enumeration of pathwise gradients."""
    t = to_table(dec, exact=False)
    a = gradient_tables(t)
    b = gradient_tables(to_table(apply_L_inverse(dec), exact=False))
    return float(np.mean((a * a).sum(axis=0))), float(np.mean((b * b).sum(axis=0)))


def is_first_chaos(dec: ChaosDecomposition) -> bool:
    return all(n == 1 for n in dec.orders)
