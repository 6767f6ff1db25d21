"""Seeded random kernels and decompositions for property checks."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Optional

import numpy as np

from .chaos import ChaosDecomposition
from .kernel import SymmetricKernel


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


def _value(rng: np.random.Generator, exact: bool):
    if exact:
        num = int(rng.integers(-6, 7)) or 1
        return Fraction(num, int(rng.integers(1, 5)))
    return float(rng.normal())


def random_kernel(rng: np.random.Generator, order: int, support: int, density: float = 0.5,
                  exact: bool = False, min_entries: int = 1) -> SymmetricKernel:
    """Random symmetric kernel of the given order on ``[support]``."""
    reps = list(itertools.combinations(range(1, support + 1), order))
    if not reps:
        return SymmetricKernel(order)
    keep = [r for r in reps if rng.random() < density]
    while len(keep) < min(min_entries, len(reps)):
        keep.append(reps[int(rng.integers(len(reps)))])
    return SymmetricKernel(order, {r: _value(rng, exact) for r in set(keep)})


def random_decomposition(rng: np.random.Generator, d: int, max_order: Optional[int] = None,
                         density: float = 0.4, exact: bool = False, centered: bool = True) -> ChaosDecomposition:
    """Random decomposition on ``d`` coordinates with orders ``1..max_order``."""
    max_order = d if max_order is None else min(max_order, d)
    kernels = {}
    for q in range(1, max_order + 1):
        if rng.random() < 0.75:
            k = random_kernel(rng, q, d, density, exact, min_entries=0)
            if len(k):
                kernels[q] = k
    if not kernels and d >= 1:
        kernels[1] = random_kernel(rng, 1, d, 1.0, exact)
    mean = 0 if centered else _value(rng, exact)
    return ChaosDecomposition(d, mean, kernels)


def normalize(dec: ChaosDecomposition) -> ChaosDecomposition:
    """Scale a float decomposition to unit variance."""
    from .chaos import variance

    v = float(variance(dec))
    return dec if v == 0 else dec.scale(1.0 / np.sqrt(v))
