"""Exact enumeration, seeded Monte Carlo and Gaussian expectations.

Monte Carlo draws come from numpy's counter-based Philox generator.  Block
``b`` of a run with seed ``s`` is generated from the key ``(s, b)``, so any
partition of the blocks across workers reproduces the same samples, and the
per-block sums are merged in block order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .chaos import ChaosDecomposition, RademacherPoint, as_table, to_table
from .errors import DimensionLimit, QuadratureUnstable
from .testfunctions import TestFunction

RNG_ID = "numpy.Philox4x32-10/key=(seed,block)"
MAX_ENUM_DIMENSION = 24
MC_BLOCK = 1 << 16
QUAD_TOL = 1e-10

Evaluator = Union[ChaosDecomposition, np.ndarray, list, Callable]


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {"value": float(self.value), "std_error": float(self.std_error),
                "samples": int(self.samples), "seed": int(self.seed)}


def gray_code(d: int) -> np.ndarray:
    """Table indices in reflected Gray-code order."""
    i = np.arange(1 << d, dtype=np.int64)
    return i ^ (i >> 1)


def sign_matrix(bits: np.ndarray, d: int) -> np.ndarray:
    """Rows of ``+-1`` signs for the given table indices."""
    bits = np.asarray(bits, dtype=np.int64)
    return (((bits[:, None] >> np.arange(d)) & 1) * 2 - 1).astype(np.int8)


def evaluate_batch(dec: ChaosDecomposition, signs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Float evaluation of a decomposition on many points at once.

    ``signs`` is ``(S, d)`` with column ``k-1`` holding ``X_k``.
    """
    signs = np.asarray(signs)
    out = np.full(signs.shape[0], float(dec.mean))
    for q, k in dec.kernels.items():
        reps = np.array(list(k.entries.keys()), dtype=np.int64) - 1
        vals = np.array([float(v) for v in k.entries.values()]) * math.factorial(q)
        for lo in range(0, signs.shape[0], chunk):
            block = signs[lo:lo + chunk].astype(np.float64)
            prod = np.ones((block.shape[0], reps.shape[0]))
            for col in range(q):
                prod *= block[:, reps[:, col]]
            out[lo:lo + chunk] += prod @ vals
    return out


def _exact_mean(values) -> Union[int, Fraction, float]:
    total = sum(values, 0)
    n = len(values)
    if isinstance(total, int):
        fr = Fraction(total, n)
        return int(fr) if fr.denominator == 1 else fr
    return total / n


def enumerate_expectation(F: Evaluator, d: int, exact: bool | None = None) -> Estimate:
    """``2^-d sum_omega F(omega)`` over all of ``{-1,+1}^d``.

    ``F`` may be a decomposition, a truth table, or a callable taking a
    :class:`RademacherPoint`.  Callables are visited in Gray-code order.
    Exact inputs give an exact (rational) value.
    """
    if d > MAX_ENUM_DIMENSION:
        raise DimensionLimit(f"d={d} exceeds the enumeration limit {MAX_ENUM_DIMENSION}")
    if isinstance(F, ChaosDecomposition):
        if exact is None:
            exact = F.is_exact
        if exact:
            value = _exact_mean(list(to_table(F, d, exact=True)))
        else:
            value = float(np.mean(to_table(F, d, exact=False)))
    elif callable(F):
        vals = [F(RademacherPoint(d, int(b))) for b in gray_code(d)]
        value = _exact_mean(vals) if all(isinstance(v, (int, Fraction)) for v in vals) else float(np.mean(np.asarray(vals, dtype=float)))
    else:
        t, _, ex = as_table(F, d)
        value = _exact_mean(list(t)) if ex else float(np.mean(t))
    return Estimate(value, 0.0, 1 << d, 0)


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), block]))


def _draw_signs(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    return (rng.integers(0, 2, size=(n, d), dtype=np.int8) * 2 - 1).astype(np.int8)


def mc_estimate(F: Evaluator, d: int, samples: int, seed: int, block: int = MC_BLOCK) -> Estimate:
    """Seeded Monte Carlo mean with plug-in standard error.

    ``F`` may be a decomposition, a truth table, a callable on a
    :class:`RademacherPoint`, or a callable marked ``vectorized`` that takes an
    ``(S, d)`` sign matrix.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    shift = None
    s1 = 0.0
    s2 = 0.0
    done = 0
    b = 0
    while done < samples:
        n = min(block, samples - done)
        rng = _block_generator(seed, b)
        x = _apply(F, _draw_signs(rng, n, d), d)
        if shift is None:
            shift = float(x[0])
        y = x - shift
        s1 += float(np.sum(y))
        s2 += float(np.sum(y * y))
        done += n
        b += 1
    mean_y = s1 / samples
    var = max(s2 - samples * mean_y * mean_y, 0.0) / (samples - 1)
    return Estimate(shift + mean_y, math.sqrt(var / samples), samples, seed)


def _apply(F: Evaluator, signs: np.ndarray, d: int) -> np.ndarray:
    if isinstance(F, ChaosDecomposition):
        return evaluate_batch(F, signs)
    if callable(F):
        if getattr(F, "vectorized", False):
            return np.asarray(F(signs), dtype=float)
        bits = ((signs > 0).astype(np.int64) << np.arange(d)).sum(axis=1) if d else np.zeros(len(signs), dtype=np.int64)
        return np.array([float(F(RademacherPoint(d, int(v)))) for v in bits])
    t = np.asarray(F, dtype=float)
    bits = ((signs > 0).astype(np.int64) << np.arange(d)).sum(axis=1)
    return t[bits]


def vectorized(fn: Callable[[np.ndarray], np.ndarray]) -> Callable:
    """Mark an evaluator as taking an ``(S, d)`` sign matrix."""
    fn.vectorized = True
    return fn


# ---------------------------------------------------------------------------
# Gaussian side

_SQRT_2PI = math.sqrt(2 * math.pi)


def _hermite_rule(h: TestFunction, nodes: int) -> float:
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return float(np.sum(w * h(x)) / _SQRT_2PI)


def _legendre_rule(h: TestFunction, nodes: int) -> float:
    lo, hi = h.support
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = (hi - lo) / 2
    t = lo + half * (x + 1)
    dens = np.exp(-t * t / 2) / _SQRT_2PI
    return float(half * np.sum(w * h(t) * dens))


def gaussian_expectation(h: TestFunction, nodes: int = 128, tol: float = QUAD_TOL) -> float:
    """``E h(Z)`` for standard normal ``Z``.

    Gauss-Hermite quadrature with ``nodes`` points, cross-checked against a
    rule with twice as many.  Compactly supported ``h`` are integrated against
    the Gaussian density with Gauss-Legendre on their support instead, since a
    Hermite rule converges slowly for a function that is only finitely smooth.
    """
    rule = _legendre_rule if h.support is not None else _hermite_rule
    a = rule(h, nodes)
    b = rule(h, 2 * nodes)
    if not abs(a - b) < tol:
        raise QuadratureUnstable(f"{h.name}: {nodes}-node and {2 * nodes}-node rules differ by {abs(a - b):.3e}")
    return b


def expectation_of_h(dec: ChaosDecomposition, h: TestFunction) -> float:
    """``E h(F)`` by exact enumeration over the decomposition's coordinates."""
    from .chaos import compress

    small, _ = compress(dec)
    if small.dimension > MAX_ENUM_DIMENSION:
        raise DimensionLimit(f"{small.dimension} coordinates exceed the enumeration limit")
    return float(np.mean(h(to_table(small, exact=False))))


def distance(dec: ChaosDecomposition, h: TestFunction) -> float:
    """``|E h(F) - E h(Z)|`` with the left side enumerated exactly."""
    return abs(expectation_of_h(dec, h) - gaussian_expectation(h))


def mc_distance(dec: ChaosDecomposition, h: TestFunction, samples: int, seed: int) -> Estimate:
    """Monte Carlo version of :func:`distance`; the error bar is that of ``E h(F)``."""
    fn = vectorized(lambda s: h(evaluate_batch(dec, s)))
    est = mc_estimate(fn, dec.dimension, samples, seed)
    return Estimate(abs(est.value - gaussian_expectation(h)), est.std_error, samples, seed)
