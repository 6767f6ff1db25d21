"""Multiple integrals, chaos decompositions and truth tables.

A functional of the first ``d`` signs is stored either as a truth table of
length ``2**d`` or as a :class:`ChaosDecomposition`.  Truth tables are indexed
with coordinate 1 as the least significant bit, and a set bit means ``X = +1``.

The Walsh path (fast Walsh-Hadamard transform) is the production decomposition;
:func:`decompose_hoeffding` recomputes the same object from conditional
expectations and is kept as an independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import BadTableLength, DimensionLimit, DimensionTooSmall, IndexOutOfRange, OrderMismatch
from .kernel import Number, SymmetricKernel, inner

MAX_DIMENSION = 24


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class RademacherPoint:
    """A point of ``{-1, +1}^d``; bit ``k-1`` of ``bits`` is set iff ``X_k = +1``."""

    dimension: int
    bits: int = 0

    def __post_init__(self):
        if self.dimension < 0:
            raise ValueError("dimension must be >= 0")
        if self.bits < 0 or self.bits >> self.dimension:
            raise IndexOutOfRange(f"bits {self.bits} exceed dimension {self.dimension}")

    @classmethod
    def from_signs(cls, signs: Sequence[int]) -> "RademacherPoint":
        bits = 0
        for k, s in enumerate(signs):
            if s not in (1, -1):
                raise ValueError(f"signs must be +1 or -1, got {s!r}")
            if s == 1:
                bits |= 1 << k
        return cls(len(signs), bits)

    def sign(self, k: int) -> int:
        if not 1 <= k <= self.dimension:
            raise IndexOutOfRange(f"coordinate {k} outside 1..{self.dimension}")
        return 1 if (self.bits >> (k - 1)) & 1 else -1

    @property
    def signs(self) -> Tuple[int, ...]:
        return tuple(self.sign(k) for k in range(1, self.dimension + 1))

    def with_sign(self, k: int, s: int) -> "RademacherPoint":
        self.sign(k)
        mask = 1 << (k - 1)
        return RademacherPoint(self.dimension, (self.bits | mask) if s == 1 else (self.bits & ~mask))

    def flip(self, k: int) -> "RademacherPoint":
        self.sign(k)
        return RademacherPoint(self.dimension, self.bits ^ (1 << (k - 1)))


def all_points(d: int):
    for b in range(1 << d):
        yield RademacherPoint(d, b)


def sign_columns(d: int) -> np.ndarray:
    """``(2**d, d)`` int array; column ``k-1`` holds ``X_k`` at every table index."""
    idx = np.arange(1 << d, dtype=np.int64)
    return np.stack([((idx >> k) & 1) * 2 - 1 for k in range(d)], axis=1) if d else np.zeros((1, 0), dtype=np.int64)


# ---------------------------------------------------------------------------
# decompositions


class ChaosDecomposition:
    """``F = mean + sum_n J_n(f_n)`` with at most one kernel per order."""

    __slots__ = ("dimension", "mean", "_kernels")

    def __init__(self, dimension: int, mean: Number = 0, kernels: Mapping[int, SymmetricKernel] | Iterable[SymmetricKernel] = ()):
        if isinstance(kernels, Mapping):
            items = list(kernels.items())
        else:
            items = [(k.order, k) for k in kernels]
        clean: Dict[int, SymmetricKernel] = {}
        for order, k in items:
            if k.order != order:
                raise OrderMismatch(f"kernel of order {k.order} filed under {order}")
            if order in clean:
                raise OrderMismatch(f"two kernels of order {order}")
            if k.support_bound > dimension:
                raise DimensionTooSmall(f"kernel of order {order} reaches coordinate {k.support_bound} > {dimension}")
            if len(k):
                clean[order] = k
        object.__setattr__(self, "dimension", int(dimension))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "_kernels", MappingProxyType(dict(sorted(clean.items()))))

    def __setattr__(self, name, value):
        raise AttributeError("decompositions are immutable")

    @property
    def kernels(self) -> Mapping[int, SymmetricKernel]:
        return self._kernels

    def kernel(self, n: int) -> Optional[SymmetricKernel]:
        return self._kernels.get(n)

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(self._kernels)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.mean, (int, Fraction)) and all(k.is_exact for k in self._kernels.values())

    @property
    def is_centered(self) -> bool:
        return self.mean == 0

    def coordinates(self) -> set:
        out: set = set()
        for k in self._kernels.values():
            out |= k.coordinates()
        return out

    def with_dimension(self, d: int) -> "ChaosDecomposition":
        return ChaosDecomposition(d, self.mean, self._kernels)

    def map_kernels(self, fn, mean: Number | None = None) -> "ChaosDecomposition":
        """Apply ``fn(order, kernel) -> kernel`` to every component."""
        return ChaosDecomposition(self.dimension, self.mean if mean is None else mean,
                                  {n: fn(n, k) for n, k in self._kernels.items()})

    def scale(self, c: Number) -> "ChaosDecomposition":
        return ChaosDecomposition(self.dimension, c * self.mean, {n: k.scale(c) for n, k in self._kernels.items()})

    def __add__(self, other: "ChaosDecomposition") -> "ChaosDecomposition":
        out = dict(self._kernels)
        for n, k in other._kernels.items():
            out[n] = out[n] + k if n in out else k
        return ChaosDecomposition(max(self.dimension, other.dimension), self.mean + other.mean, out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self) -> str:
        parts = ", ".join(f"{n}:{len(k)}" for n, k in self._kernels.items())
        return f"ChaosDecomposition(d={self.dimension}, mean={self.mean!r}, nnz={{{parts}}})"

    @classmethod
    def zero(cls, dimension: int = 0) -> "ChaosDecomposition":
        return cls(dimension, 0, {})


def first_chaos(alpha: Sequence[Number], offset: int = 1) -> ChaosDecomposition:
    """``sum_i alpha_i X_{i + offset - 1}``."""
    ents = {(i + offset,): a for i, a in enumerate(alpha) if a != 0}
    d = len(alpha) + offset - 1
    return ChaosDecomposition(d, 0, {1: SymmetricKernel(1, ents)} if ents else {})


# ---------------------------------------------------------------------------
# evaluation


def evaluate_multiple_integral(f: SymmetricKernel, omega: RademacherPoint) -> Number:
    """``J_q(f)(omega) = q! sum_{i_1<...<i_q} f(i) X_{i_1}...X_{i_q}``."""
    if f.support_bound > omega.dimension:
        raise DimensionTooSmall(f"kernel reaches coordinate {f.support_bound}, point has {omega.dimension}")
    bits = omega.bits
    total = 0
    for idx, v in f.items():
        neg = sum(1 for i in idx if not (bits >> (i - 1)) & 1)
        total += -v if neg & 1 else v
    return math.factorial(f.order) * total


def evaluate(dec: ChaosDecomposition, omega: RademacherPoint) -> Number:
    if dec.coordinates() and max(dec.coordinates()) > omega.dimension:
        raise DimensionTooSmall("decomposition reaches beyond the point's dimension")
    return dec.mean + sum((evaluate_multiple_integral(k, omega) for k in dec.kernels.values()), 0)


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along a length ``2**d`` vector.

    Works on float and object (exact) arrays alike.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if n & (n - 1):
        raise BadTableLength(f"length {n} is not a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0, :] + a[:, 1, :], a[:, 0, :] - a[:, 1, :]], axis=1)
        h *= 2
    return a.reshape(n)


def _popcounts(d: int) -> np.ndarray:
    idx = np.arange(1 << d, dtype=np.int64)
    pc = np.zeros(1 << d, dtype=np.int64)
    for k in range(d):
        pc += (idx >> k) & 1
    return pc


def _mask_to_tuple(mask: int) -> Tuple[int, ...]:
    out = []
    k = 1
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


def _is_exact_table(t: np.ndarray) -> bool:
    if t.dtype.kind in "iu":
        return True
    if t.dtype.kind == "O":
        return all(isinstance(v, (int, Fraction)) for v in t)
    return False


def as_table(values, d: int | None = None, max_dim: int = MAX_DIMENSION) -> Tuple[np.ndarray, int, bool]:
    """Validate a truth table; return ``(array, d, exact)``."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise BadTableLength("truth tables are one-dimensional")
    length = arr.shape[0]
    if d is None:
        if length == 0 or length & (length - 1):
            raise BadTableLength(f"length {length} is not a power of two")
        d = length.bit_length() - 1
    if d > max_dim:
        raise DimensionLimit(f"d={d} exceeds the limit {max_dim}")
    if length != 1 << d:
        raise BadTableLength(f"expected {1 << d} values for d={d}, got {length}")
    exact = _is_exact_table(arr)
    if exact:
        arr = np.array([int(v) if isinstance(v, (int, np.integer)) else v for v in arr], dtype=object)
    else:
        arr = arr.astype(float)
    return arr, d, exact


def decompose_walsh(table, d: int | None = None, atol: float = 1e-13, max_dim: int = MAX_DIMENSION) -> ChaosDecomposition:
    """Chaos decomposition of a truth table by one fast Walsh-Hadamard transform.

    ``n! f_n(i_1..i_n) = E[F X_{i_1}...X_{i_n}]``.  In float mode coefficients
    with absolute value ``<= atol`` are treated as zero.
    """
    t, d, exact = as_table(table, d, max_dim)
    w = fwht(t.copy())
    pc = _popcounts(d)
    size = 1 << d
    coeffs: Dict[int, dict] = {}
    mean = w[0] / size if not exact else Fraction(w[0], size) if isinstance(w[0], int) else w[0] / size
    if exact:
        nz = [s for s in range(1, size) if w[s] != 0]
    else:
        cand = np.abs(w) / size > atol
        cand[0] = False
        nz = np.nonzero(cand)[0].tolist()
    for s in nz:
        n = int(pc[s])
        c = w[s] if n % 2 == 0 else -w[s]
        denom = size * math.factorial(n)
        val = (Fraction(c, denom) if isinstance(c, int) else c / denom) if exact else float(c) / denom
        coeffs.setdefault(n, {})[_mask_to_tuple(s)] = val
    if exact and isinstance(mean, Fraction) and mean.denominator == 1:
        mean = int(mean)
    return ChaosDecomposition(d, mean if exact else float(mean), {n: SymmetricKernel(n, e) for n, e in coeffs.items()})


def to_table(dec: ChaosDecomposition, d: int | None = None, exact: bool | None = None,
             max_dim: int = MAX_DIMENSION) -> np.ndarray:
    """Truth table of a decomposition over ``{-1,+1}^d`` (default: its dimension)."""
    d = dec.dimension if d is None else d
    if d > max_dim:
        raise DimensionLimit(f"d={d} exceeds the limit {max_dim}")
    if dec.coordinates() and max(dec.coordinates()) > d:
        raise DimensionTooSmall("decomposition reaches beyond d")
    exact = dec.is_exact if exact is None else exact
    size = 1 << d
    a = np.zeros(size, dtype=object) if exact else np.zeros(size)
    if exact:
        a[:] = 0
    a[0] = dec.mean
    for n, k in dec.kernels.items():
        nf = math.factorial(n)
        sgn = -1 if n % 2 else 1
        for idx, v in k.items():
            mask = 0
            for i in idx:
                mask |= 1 << (i - 1)
            a[mask] = a[mask] + sgn * nf * v
    return fwht(a)


def decompose_hoeffding(table, d: int | None = None, atol: float = 1e-13, max_dim: int = MAX_DIMENSION) -> ChaosDecomposition:
    """Chaos decomposition through conditional expectations and Moebius inversion.

    ``n! f_n(J) X_J = sum_{I subset J} (-1)^{|J|-|I|} E[F - EF | X_i, i in I]``;
    both sides are evaluated at the all-plus point where ``X_J = 1``.  Cost is
    ``O(3^d)``.
    """
    t, d, exact = as_table(table, d, max_dim)
    cube = t.reshape((2,) * d) if d else t.reshape(())
    size = 1 << d

    def cond_mean_at_plus(mask: int):
        # E[F | X_I] at X_I = +1: average over the remaining coordinates
        sl = tuple(1 if (mask >> (d - 1 - ax)) & 1 else slice(None) for ax in range(d))
        sub = cube[sl]
        if exact:
            s = sum(np.asarray(sub).ravel().tolist(), 0)
            cnt = np.asarray(sub).size
            return Fraction(s, cnt) if isinstance(s, int) else s / cnt
        return float(np.mean(sub))

    g = [cond_mean_at_plus(m) for m in range(size)]
    mean = g[0]
    coeffs: Dict[int, dict] = {}
    for j in range(1, size):
        total = 0
        sub = j
        nj = bin(j).count("1")
        while True:
            if sub:
                term = g[sub] - mean
                total += term if (nj - bin(sub).count("1")) % 2 == 0 else -term
            if sub == 0:
                break
            sub = (sub - 1) & j
        if (total != 0) if exact else abs(total) > atol:
            nf = math.factorial(nj)
            val = Fraction(total, nf) if isinstance(total, int) else total / nf
            coeffs.setdefault(nj, {})[_mask_to_tuple(j)] = val
    if exact and isinstance(mean, Fraction) and mean.denominator == 1:
        mean = int(mean)
    return ChaosDecomposition(d, mean, {n: SymmetricKernel(n, e) for n, e in coeffs.items()})


# ---------------------------------------------------------------------------
# products and covariances


def product(f: SymmetricKernel, g: SymmetricKernel, dimension: int | None = None) -> ChaosDecomposition:
    """Decomposition of ``J_n(f) J_m(g)`` from the multiplication formula.

    The ``r``-th term is ``r! C(n,r) C(m,r) J_{n+m-2r}((f *_r^r g)~ 1_Delta)``.
    On sets, ``(f *_r^r g) 1_Delta`` at ``(x, y)`` is ``r! sum_A f(X+A) g(Y+A)``
    with ``A = T & U`` for representatives ``T = X+A`` and ``U = Y+A``; only
    pairs of representatives meeting in exactly ``r`` points contribute.
    """
    n, m = f.order, g.order
    dim = dimension if dimension is not None else max(f.support_bound, g.support_bound)
    acc: Dict[int, dict] = {}
    fi = [(frozenset(t), t, v) for t, v in f.items()]
    gi = [(frozenset(u), u, w) for u, w in g.items()]
    for ft, _, v in fi:
        for gu, _, w in gi:
            r = len(ft & gu)
            z = tuple(sorted(ft ^ gu))
            d_ = acc.setdefault(r, {})
            d_[z] = d_.get(z, 0) + v * w
    mean: Number = 0
    kernels: Dict[int, dict] = {}
    for r, sums in acc.items():
        k = n + m - 2 * r
        coef = math.factorial(r) * math.comb(n, r) * math.comb(m, r)
        # symmetrization weight of one (X, Y) split and the inner r! ordered A's
        weight = Fraction(math.factorial(r) * math.factorial(n - r) * math.factorial(m - r), math.factorial(k))
        for z, s in sums.items():
            val = _mul(coef * weight, s)
            if k == 0:
                mean += val
            elif val != 0:
                kernels.setdefault(k, {})
                kernels[k][z] = kernels[k].get(z, 0) + val
    return ChaosDecomposition(dim, mean, {k: SymmetricKernel(k, e) for k, e in kernels.items()})


def _mul(c: Fraction, s: Number) -> Number:
    if isinstance(s, (int, Fraction)):
        out = c * s
        return int(out) if out.denominator == 1 else out
    return float(c) * s


def multiply(a: ChaosDecomposition, b: ChaosDecomposition) -> ChaosDecomposition:
    """Decomposition of the pointwise product of two decompositions."""
    dim = max(a.dimension, b.dimension)
    out = ChaosDecomposition(dim, a.mean * b.mean, {})
    if b.mean != 0:
        out = out + a.map_kernels(lambda n, k: k.scale(b.mean), mean=0).with_dimension(dim)
    if a.mean != 0:
        out = out + b.map_kernels(lambda n, k: k.scale(a.mean), mean=0).with_dimension(dim)
    for fk in a.kernels.values():
        for gk in b.kernels.values():
            out = out + product(fk, gk, dim)
    return out


def covariance(a: ChaosDecomposition, b: ChaosDecomposition) -> Number:
    """``sum_q q! <f_q, g_q>`` over common orders."""
    return sum((math.factorial(q) * inner(a.kernels[q], b.kernels[q]) for q in a.kernels if q in b.kernels), 0)


def variance(a: ChaosDecomposition) -> Number:
    return covariance(a, a)


def compress(dec: ChaosDecomposition) -> Tuple[ChaosDecomposition, Tuple[int, ...]]:
    """Relabel the coordinates a decomposition actually uses onto ``1..s``."""
    coords = tuple(sorted(dec.coordinates()))
    pos = {c: i + 1 for i, c in enumerate(coords)}
    kernels = {n: SymmetricKernel(n, {tuple(pos[i] for i in idx): v for idx, v in k.items()})
               for n, k in dec.kernels.items()}
    return ChaosDecomposition(len(coords), dec.mean, kernels), coords
