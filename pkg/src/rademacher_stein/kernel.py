"""Sparse kernels on tuples of positive integers.

Two representations are used throughout the package:

* :class:`SymmetricKernel` is an element of the space of square-summable
  symmetric functions on ``N^q`` vanishing on diagonals.  Only the canonical
  (strictly increasing) representative of each symmetry class is stored and
  every permuted lookup is answered from it.
* :class:`GeneralKernel` is an arbitrary finitely supported function on
  ``N^p``.  Star contractions produce these: they may be asymmetric and may
  charge tuples with repeated coordinates.

Coefficients are plain Python numbers.  Floats are the default; passing
:class:`fractions.Fraction` values gives an exact mode in which identities
such as the isometry or the product formula hold with ``==``.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Tuple, Union

from .errors import ConflictingValues, DiagonalEntry, OrderMismatch

Number = Union[int, float, Fraction]
Index = Tuple[int, ...]

DEFAULT_ATOL = 1e-12


def _check_coords(idx: Index) -> None:
    if any((not isinstance(i, (int,))) or i < 1 for i in idx):
        raise ValueError(f"coordinates must be positive integers, got {idx!r}")


def _is_zero(value: Number) -> bool:
    return value == 0


class GeneralKernel:
    """Finitely supported function on ``N^order``; missing entries are zero.

    ``order == 0`` encodes a scalar stored under the empty tuple.
    """

    __slots__ = ("order", "_entries")

    def __init__(self, order: int, entries: Mapping[Index, Number] | None = None):
        if order < 0:
            raise ValueError("order must be >= 0")
        clean = {}
        for idx, value in (entries or {}).items():
            idx = tuple(idx)
            if len(idx) != order:
                raise OrderMismatch(f"tuple {idx} has length {len(idx)}, expected {order}")
            _check_coords(idx)
            if not _is_zero(value):
                clean[idx] = value
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_entries", MappingProxyType(clean))

    def __setattr__(self, name, value):
        raise AttributeError("kernels are immutable")

    @property
    def entries(self) -> Mapping[Index, Number]:
        return self._entries

    def __getitem__(self, idx: Iterable[int]) -> Number:
        return self._entries.get(tuple(idx), 0)

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    @property
    def support_bound(self) -> int:
        return max((max(idx) for idx in self._entries if idx), default=0)

    def scalar(self) -> Number:
        """Value of an order-0 kernel."""
        if self.order != 0:
            raise OrderMismatch("scalar() is only defined for order-0 kernels")
        return self._entries.get((), 0)

    def __repr__(self) -> str:
        return f"GeneralKernel(order={self.order}, nnz={len(self)})"


class SymmetricKernel:
    """Symmetric kernel vanishing on diagonals, stored on sorted tuples."""

    __slots__ = ("order", "_entries")

    def __init__(self, order: int, entries: Mapping[Index, Number] | None = None):
        # Trusted constructor: keys must already be strictly increasing.
        # Use make_symmetric_kernel for raw input.
        if order < 1:
            raise ValueError("symmetric kernels have order >= 1")
        clean = {}
        for idx, value in (entries or {}).items():
            idx = tuple(idx)
            if len(idx) != order:
                raise OrderMismatch(f"tuple {idx} has length {len(idx)}, expected {order}")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"stored tuples must be strictly increasing, got {idx}")
            _check_coords(idx)
            if not _is_zero(value):
                clean[idx] = value
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_entries", MappingProxyType(clean))

    def __setattr__(self, name, value):
        raise AttributeError("kernels are immutable")

    @property
    def entries(self) -> Mapping[Index, Number]:
        """Canonical entries keyed by strictly increasing tuples."""
        return self._entries

    def __getitem__(self, idx: Iterable[int]) -> Number:
        key = tuple(sorted(idx))
        if len(key) != self.order:
            raise OrderMismatch(f"expected {self.order} coordinates")
        if any(a == b for a, b in zip(key, key[1:])):
            return 0
        return self._entries.get(key, 0)

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def full_items(self) -> Iterator[Tuple[Index, Number]]:
        """Every ordered tuple in the support with its value (``q!`` per class)."""
        for idx, value in self._entries.items():
            for perm in itertools.permutations(idx):
                yield perm, value

    @property
    def support_bound(self) -> int:
        return max((idx[-1] for idx in self._entries), default=0)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self._entries.values())

    def to_general(self) -> GeneralKernel:
        return GeneralKernel(self.order, dict(self.full_items()))

    def scale(self, c: Number) -> "SymmetricKernel":
        return SymmetricKernel(self.order, {k: c * v for k, v in self._entries.items()})

    def __add__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        if other.order != self.order:
            raise OrderMismatch("cannot add kernels of different orders")
        out = dict(self._entries)
        for k, v in other._entries.items():
            out[k] = out.get(k, 0) + v
        return SymmetricKernel(self.order, out)

    def __neg__(self) -> "SymmetricKernel":
        return self.scale(-1)

    def __sub__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        return self + (-other)

    def section(self, j: int) -> Union["SymmetricKernel", Number]:
        """The kernel ``f(j, .)`` of order ``q-1``; a scalar when ``q == 1``."""
        if self.order == 1:
            return self._entries.get((j,), 0)
        out = {}
        for idx, value in self._entries.items():
            if j in idx:
                out[tuple(i for i in idx if i != j)] = value
        return SymmetricKernel(self.order - 1, out)

    def coordinates(self) -> set:
        return {i for idx in self._entries for i in idx}

    def __repr__(self) -> str:
        return f"SymmetricKernel(order={self.order}, nnz={len(self)})"


AnyKernel = Union[SymmetricKernel, GeneralKernel]


def make_symmetric_kernel(order: int, raw_entries: Iterable[Tuple[Iterable[int], Number]]) -> SymmetricKernel:
    """Build a symmetric kernel from ``(tuple, value)`` pairs in any coordinate order.

    Raises :class:`DiagonalEntry` for repeated coordinates, :class:`OrderMismatch`
    for wrong tuple lengths and :class:`ConflictingValues` when two permutations
    of one tuple carry different values.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    canon: dict = {}
    for idx, value in raw_entries:
        idx = tuple(int(i) for i in idx)
        if len(idx) != order:
            raise OrderMismatch(f"tuple {idx} has length {len(idx)}, expected {order}")
        _check_coords(idx)
        key = tuple(sorted(idx))
        if len(set(key)) != order:
            raise DiagonalEntry(f"tuple {idx} has a repeated coordinate")
        if key in canon and canon[key] != value:
            raise ConflictingValues(f"{key}: {canon[key]!r} vs {value!r}")
        canon[key] = value
    return SymmetricKernel(order, canon)


def as_general(k: AnyKernel) -> GeneralKernel:
    return k.to_general() if isinstance(k, SymmetricKernel) else k


def symmetrize(k: AnyKernel) -> GeneralKernel:
    """Canonical symmetrization ``(1/n!) sum_sigma k o sigma``."""
    g = as_general(k)
    n = g.order
    if n == 0:
        return g
    nfact = math.factorial(n)
    acc: dict = {}
    for idx, value in g.items():
        for perm in set(itertools.permutations(idx)):
            acc[perm] = acc.get(perm, 0) + value
    # A multiset with repeats has fewer than n! distinct orderings; each distinct
    # ordering of idx receives the orbit average with the right multiplicity.
    out = {}
    for perm, total in acc.items():
        counts = _multiplicity(perm)
        out[perm] = _div(total * counts, nfact)
    return GeneralKernel(n, out)


def _multiplicity(idx: Index) -> int:
    # number of permutations sigma fixing idx as a tuple
    m = 1
    for c in _counts(idx).values():
        m *= math.factorial(c)
    return m


def _counts(idx: Index) -> dict:
    out: dict = {}
    for i in idx:
        out[i] = out.get(i, 0) + 1
    return out


def _div(a: Number, b: int) -> Number:
    if isinstance(a, (int, Fraction)):
        return Fraction(a, b) if isinstance(a, int) else a / b
    return a / b


def sq_norm(k: AnyKernel) -> Number:
    """Squared l2 norm over all of ``N^q``; exact when the coefficients are."""
    if isinstance(k, SymmetricKernel):
        # each sorted class expands to q! distinct ordered tuples
        return math.factorial(k.order) * sum((v * v for v in k.entries.values()), 0)
    return sum((v * v for v in k.entries.values()), 0)


def l2_norm(k: AnyKernel) -> float:
    return math.sqrt(float(sq_norm(k)))


def inner(f: AnyKernel, g: AnyKernel) -> Number:
    """``<f, g>`` in ``l2(N)^{(x) q}``."""
    if f.order != g.order:
        raise OrderMismatch("inner product needs equal orders")
    if isinstance(f, SymmetricKernel) and isinstance(g, SymmetricKernel):
        small, big = (f, g) if len(f) <= len(g) else (g, f)
        s = sum((v * big.entries.get(k, 0) for k, v in small.entries.items()), 0)
        return math.factorial(f.order) * s
    fg, gg = as_general(f), as_general(g)
    return sum((v * gg[k] for k, v in fg.items()), 0)


def influence(f: SymmetricKernel, j: int) -> Number:
    """Influence of coordinate ``j``: ``sum_b f(j, b)^2`` over ``N^{q-1}``."""
    total = sum((v * v for idx, v in f.entries.items() if j in idx), 0)
    return math.factorial(f.order - 1) * total


def influences(f: SymmetricKernel) -> dict:
    """All nonzero influences, keyed by coordinate."""
    acc: dict = {}
    for idx, v in f.entries.items():
        for j in idx:
            acc[j] = acc.get(j, 0) + v * v
    w = math.factorial(f.order - 1)
    return {j: w * s for j, s in acc.items()}


def max_influence(f: SymmetricKernel) -> Number:
    return max(influences(f).values(), default=0)


def restrict_off_diagonal(k: AnyKernel) -> GeneralKernel:
    """Multiply by the indicator of tuples with pairwise distinct coordinates."""
    g = as_general(k)
    return GeneralKernel(g.order, {i: v for i, v in g.items() if len(set(i)) == len(i)})


def restrict_diagonal(k: AnyKernel) -> GeneralKernel:
    """Multiply by the indicator of tuples with at least one repeated coordinate."""
    g = as_general(k)
    return GeneralKernel(g.order, {i: v for i, v in g.items() if len(set(i)) != len(i)})


def to_symmetric(g: GeneralKernel, atol: float = DEFAULT_ATOL) -> SymmetricKernel:
    """Convert a symmetric, off-diagonal general kernel to canonical storage."""
    out = {}
    for idx, v in g.items():
        if len(set(idx)) != len(idx):
            if abs(v) > atol:
                raise DiagonalEntry(f"{idx} charges a diagonal")
            continue
        key = tuple(sorted(idx))
        if key in out:
            if abs(out[key] - v) > atol:
                raise ConflictingValues(f"kernel is not symmetric at {key}")
        else:
            out[key] = v
    return SymmetricKernel(g.order, out)


def kernels_equal(a: AnyKernel, b: AnyKernel, atol: float = DEFAULT_ATOL) -> bool:
    """Entrywise equality under an absolute tolerance (pass 0 for exact)."""
    if a.order != b.order:
        return False
    ga, gb = as_general(a), as_general(b)
    for key in set(ga.entries) | set(gb.entries):
        diff = ga[key] - gb[key]
        if (diff != 0) if atol == 0 else (abs(diff) > atol):
            return False
    return True


def to_exact(k: AnyKernel) -> AnyKernel:
    """Replace float coefficients by their exact rational values."""
    conv = {i: Fraction(v) for i, v in k.items()}
    return type(k)(k.order, conv)


def relabel(k: AnyKernel, offset: int) -> AnyKernel:
    """Shift every coordinate by ``offset`` (maps e.g. a Z-indexed window onto N)."""
    shifted = {tuple(i + offset for i in idx): v for idx, v in k.items()}
    return type(k)(k.order, shifted)
