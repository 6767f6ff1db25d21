"""Sparse symmetric index sets, their star/sharp statistics and fractional products.

A :class:`SparseIndexSet` stores canonical (increasing) representatives of a
symmetric subset of ``[N]^d`` off the diagonals; ``|F_N|`` is ``d!`` times the
number of representatives, and every count below refers to the full
symmetric set.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import (
    DimensionLimit,
    EmptySet,
    IndexOutOfRange,
    InvalidCover,
    NotInjective,
    NTooSmall,
)
from .kernel import SymmetricKernel

Rep = Tuple[int, ...]
SHARP_MAX_D = 6


class SparseIndexSet:
    """Symmetric subset of the off-diagonal part of ``[N]^d``."""

    def __init__(self, d: int, N: int, tuples: Iterable[Sequence[int]]):
        if d < 2:
            raise ValueError("d must be >= 2")
        reps = set()
        for t in tuples:
            t = tuple(int(i) for i in t)
            if len(t) != d:
                raise ValueError(f"tuple {t} does not have length {d}")
            s = tuple(sorted(t))
            if len(set(s)) != d:
                raise ValueError(f"tuple {t} hits a diagonal")
            if s[0] < 1 or s[-1] > N:
                raise IndexOutOfRange(f"tuple {t} leaves [1, {N}]")
            reps.add(s)
        self.d = d
        self.N = N
        self.tuples: FrozenSet[Rep] = frozenset(reps)
        self._star: Optional[Dict[int, int]] = None
        self._sharp: Optional[int] = None

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, t) -> bool:
        return tuple(sorted(t)) in self.tuples

    def __eq__(self, other) -> bool:
        return isinstance(other, SparseIndexSet) and (self.d, self.N, self.tuples) == (other.d, other.N, other.tuples)

    def __repr__(self) -> str:
        return f"SparseIndexSet(d={self.d}, N={self.N}, reps={len(self)})"

    @property
    def cardinality(self) -> int:
        """``|F_N|`` counted over the full symmetric set."""
        return math.factorial(self.d) * len(self.tuples)

    def sorted_tuples(self) -> List[Rep]:
        return sorted(self.tuples)

    def star_counts(self) -> Dict[int, int]:
        """Representatives containing each index (not yet multiplied by ``d!``)."""
        if self._star is None:
            acc: Dict[int, int] = {}
            for t in self.tuples:
                for j in t:
                    acc[j] = acc.get(j, 0) + 1
            self._star = acc
        return self._star

    @property
    def max_star(self) -> int:
        """``max_j |F*_{N,j}|``."""
        return math.factorial(self.d) * max(self.star_counts().values(), default=0)

    @property
    def sharp(self) -> int:
        """``|F#_N|`` (cached)."""
        if self._sharp is None:
            self._sharp = sharp_count(self)
        return self._sharp


def star_count(F: SparseIndexSet, j: int) -> int:
    """``|F*_{N,j}|``: tuples of the symmetric set containing ``j``."""
    if not 1 <= j <= F.N:
        raise IndexOutOfRange(f"j={j} outside 1..{F.N}")
    return math.factorial(F.d) * F.star_counts().get(j, 0)


# ---------------------------------------------------------------------------
# F#


def _check_sharp_dim(F: SparseIndexSet, max_d: int) -> None:
    if F.d > max_d:
        raise DimensionLimit(f"d={F.d} exceeds the sharp-count limit {max_d}")


def sharp_pairs(F: SparseIndexSet, max_d: int = SHARP_MAX_D) -> Set[Tuple[Rep, Rep]]:
    """Ordered pairs of representatives ``(I, K)`` belonging to ``F#``.

    For ``I`` and a split ``I = R + P`` with ``|P| = p``, a recombination needs
    ``T = R + Q`` and ``U = P + W`` in ``F`` with ``K = Q + W`` in ``F`` and
    disjoint from ``I``.  Candidates for ``T`` and ``U`` are read from an index
    of representatives by sub-tuple.  A recombination with ``p`` is one with
    ``d - p`` after relabelling, so ``p <= d/2`` suffices.
    """
    _check_sharp_dim(F, max_d)
    d = F.d
    members = F.tuples
    index: Dict[Rep, List[Rep]] = {}
    for t in members:
        for size in range(1, d):
            for sub in itertools.combinations(t, size):
                index.setdefault(sub, []).append(t)
    out: Set[Tuple[Rep, Rep]] = set()
    for I in members:
        iset = set(I)
        for p in range(1, d // 2 + 1):
            for P in itertools.combinations(I, p):
                R = tuple(i for i in I if i not in P)
                qs = []
                for T in index.get(R, ()):
                    Q = tuple(x for x in T if x not in R)
                    if not iset.intersection(Q):
                        qs.append(Q)
                if not qs:
                    continue
                ws = []
                for U in index.get(P, ()):
                    W = tuple(x for x in U if x not in P)
                    if not iset.intersection(W):
                        ws.append(W)
                for Q in qs:
                    qset = set(Q)
                    for W in ws:
                        if qset.intersection(W):
                            continue
                        K = tuple(sorted(Q + W))
                        if K in members:
                            out.add((I, K))
    return out


def sharp_count(F: SparseIndexSet, max_d: int = SHARP_MAX_D) -> int:
    """``|F#_N|`` over ordered pairs of the full symmetric set."""
    return math.factorial(F.d) ** 2 * len(sharp_pairs(F, max_d))


def sharp_count_bruteforce(F: SparseIndexSet, max_d: int = SHARP_MAX_D) -> int:
    """Direct scan over disjoint pairs, every ``p`` and every pair of sub-selections."""
    _check_sharp_dim(F, max_d)
    d = F.d
    reps = F.sorted_tuples()
    count = 0
    for I in reps:
        for K in reps:
            if set(I) & set(K):
                continue
            found = False
            for p in range(1, d):
                for P in itertools.combinations(I, p):
                    rest_i = tuple(i for i in I if i not in P)
                    for Q in itertools.combinations(K, p):
                        rest_k = tuple(k for k in K if k not in Q)
                        if tuple(sorted(Q + rest_i)) in F.tuples and tuple(sorted(P + rest_k)) in F.tuples:
                            found = True
                            break
                    if found:
                        break
                if found:
                    break
            count += found
    return math.factorial(d) ** 2 * count


# ---------------------------------------------------------------------------
# multilinear form


def multilinear_kernel(F: SparseIndexSet) -> SymmetricKernel:
    """``f_N = (d! |F_N|)^{-1/2} 1_{F_N}``, so that ``J_d(f_N)`` has unit variance."""
    if not len(F):
        raise EmptySet("the index set is empty")
    v = 1.0 / math.sqrt(math.factorial(F.d) * F.cardinality)
    return SymmetricKernel(F.d, {t: v for t in F.tuples})


def multilinear_value_squared(F: SparseIndexSet) -> Fraction:
    """Exact square of the kernel value, ``1 / (d! |F_N|)``."""
    if not len(F):
        raise EmptySet("the index set is empty")
    return Fraction(1, math.factorial(F.d) * F.cardinality)


def multilinear_normalization(F: SparseIndexSet) -> Fraction:
    """``d! ||f_N||^2`` computed exactly from the squared kernel value."""
    fact = math.factorial(F.d)
    return fact * fact * len(F) * multilinear_value_squared(F)


# ---------------------------------------------------------------------------
# fractional Cartesian products


@dataclass(frozen=True)
class Cover:
    """``d`` subsets of ``[d]`` of size ``m``; each index lies in exactly ``m`` of them."""

    d: int
    m: int
    sets: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        d, m = self.d, self.m
        if d < 3:
            raise InvalidCover("d must be >= 3")
        if not 2 <= m <= d - 1:
            raise InvalidCover("need 2 <= m <= d - 1")
        sets = tuple(tuple(sorted(s)) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        if len(sets) != d:
            raise InvalidCover(f"need exactly {d} sets, got {len(sets)}")
        for s in sets:
            if len(set(s)) != m or len(s) != m:
                raise InvalidCover(f"set {s} does not have {m} distinct elements")
            if not all(1 <= j <= d for j in s):
                raise InvalidCover(f"set {s} is not inside [1, {d}]")
        for j in range(1, d + 1):
            c = sum(j in s for s in sets)
            if c != m:
                raise InvalidCover(f"index {j} appears {c} times, expected {m}")
        # connectivity of the hypergraph on [d]
        parent = list(range(d + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for s in sets:
            for a in s[1:]:
                parent[find(a)] = find(s[0])
        if len({find(j) for j in range(1, d + 1)}) != 1:
            raise InvalidCover("the cover is not connected")

    @classmethod
    def parse(cls, text: str, d: int | None = None, m: int | None = None) -> "Cover":
        """Parse ``"1,2;2,3;1,3"``."""
        sets = [tuple(int(x) for x in part.split(",")) for part in text.split(";") if part.strip()]
        d = len(sets) if d is None else d
        m = len(sets[0]) if m is None else m
        return cls(d, m, tuple(sets))

    @property
    def alpha(self) -> float:
        """Combinatorial dimension ``d/m``."""
        return self.d / self.m

    def __str__(self) -> str:
        return ";".join(",".join(map(str, s)) for s in self.sets)


def integer_root(N: int, m: int) -> int:
    """``floor(N^(1/m))`` without floating-point error."""
    n = int(round(N ** (1.0 / m)))
    while n ** m > N:
        n -= 1
    while (n + 1) ** m <= N:
        n += 1
    return n


def mixed_radix(n: int) -> Callable[[np.ndarray], np.ndarray]:
    """``k -> 1 + sum_j (k_j - 1) n^(j-1)`` on rows of ``[n]^m``."""

    def phi(k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        w = n ** np.arange(k.shape[1], dtype=np.int64)
        return 1 + (k - 1) @ w

    return phi


def random_injection(n: int, m: int, N: int, seed: int) -> Callable[[np.ndarray], np.ndarray]:
    """A seeded uniformly random injection ``[n]^m -> [N]``."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    image = rng.choice(N, size=n ** m, replace=False) + 1
    base = mixed_radix(n)

    def phi(k: np.ndarray) -> np.ndarray:
        return image[base(k) - 1]

    return phi


def fractional_product(cover: Cover, N: int, phi: Callable | str | None = None, seed: int = 0) -> SparseIndexSet:
    """``F_N = sym(F*_N & Delta)`` with ``F*_N = {(phi(k_{S_1}), ..., phi(k_{S_d})) : k in [n]^d}``.

    ``phi`` is ``None``/``"mixed"`` for the mixed-radix bijection onto
    ``[n^m]``, ``"random"`` for a seeded random injection, or a callable
    mapping an ``(R, m)`` array of ``[n]^m`` rows to ``R`` labels in ``[N]``.
    """
    d, m = cover.d, cover.m
    if N < d ** m:
        raise NTooSmall(f"need N >= d^m = {d ** m}, got {N}")
    n = integer_root(N, m)
    if phi is None or phi == "mixed":
        fn = mixed_radix(n)
    elif phi == "random":
        fn = random_injection(n, m, N, seed)
    elif callable(phi):
        fn = phi
    else:
        raise ValueError(f"unknown injection spec {phi!r}")
    grid = np.array(list(itertools.product(range(1, n + 1), repeat=m)), dtype=np.int64)
    labels = np.asarray(fn(grid), dtype=np.int64)
    if labels.min() < 1 or labels.max() > N:
        raise NotInjective("injection leaves [1, N]")
    if np.unique(labels).size != labels.size:
        raise NotInjective("injection is not one-to-one")
    lookup = np.zeros((n + 1,) * m, dtype=np.int64)
    lookup[tuple(grid[:, j] for j in range(m))] = labels
    ks = np.array(list(itertools.product(range(1, n + 1), repeat=d)), dtype=np.int64)
    cols = [lookup[tuple(ks[:, j - 1] for j in s)] for s in cover.sets]
    rows = np.sort(np.stack(cols, axis=1), axis=1)
    distinct = np.all(rows[:, 1:] != rows[:, :-1], axis=1)
    rows = np.unique(rows[distinct], axis=0)
    return SparseIndexSet(d, N, map(tuple, rows.tolist()))


# ---------------------------------------------------------------------------
# scaling study


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def scaling_table(cover: Cover, N_values: Sequence[int], h=None, phi=None, seed: int = 0) -> dict:
    """Per-``N`` statistics of a fractional product and fitted log-log slopes."""
    from .stein import bound_sparse_stats
    from .testfunctions import cosine

    h = cosine(1.0) if h is None else h
    rows = []
    for N in N_values:
        F = fractional_product(cover, N, phi, seed)
        stat1, stat2, bound = bound_sparse_stats(F, h)
        rows.append({
            "N": N,
            "n": integer_root(N, cover.m),
            "reps": len(F),
            "card": F.cardinality,
            "max_star": F.max_star,
            "sharp": F.sharp,
            "stat1": stat1,
            "stat2": stat2,
            "exact_bound": bound.total,
            "B1": bound.B1,
            "B2": bound.B2,
        })
    Ns = [r["N"] for r in rows]
    slopes = {}
    if len(rows) >= 2:
        slopes["card"] = loglog_slope(Ns, [r["card"] for r in rows])
        slopes["stat2^4"] = loglog_slope(Ns, [r["stat2"] ** 4 for r in rows])
        slopes["exact_bound"] = loglog_slope(Ns, [r["exact_bound"] for r in rows])
        if all(r["stat1"] > 0 for r in rows):
            slopes["stat1"] = loglog_slope(Ns, [r["stat1"] for r in rows])
    return {"cover": str(cover), "d": cover.d, "m": cover.m, "rows": rows, "slopes": slopes}
