"""Star contractions of symmetric kernels and the norm estimates they satisfy.

``star(f, g, r, l)`` materializes ``f *_r^l g`` as a :class:`GeneralKernel` on
ordered tuples ``(x, c, y)``: ``x`` are the ``n-r`` free variables of ``f``,
``c`` the ``r-l`` identified-but-kept variables and ``y`` the ``m-r`` free
variables of ``g``.  This is exact for rational coefficients but expands
every permutation, so it is meant for small kernels.

:func:`contraction_norms` computes the squared norms needed by the bounds
(full, on/off the diagonal, and of the symmetrized off-diagonal part) from
the sorted representatives only.  It works on sets: because ``f`` and ``g``
are symmetric and vanish on diagonals, ``f *_r^l g (x, c, y)`` only depends on
the sets ``X, C, Y`` and equals ``l! sum_A f(X+C+A) g(Y+C+A)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List

import numpy as np

from .errors import ContractionOutOfRange, OrderMismatch
from .kernel import (
    GeneralKernel,
    Number,
    SymmetricKernel,
    influences,
    restrict_off_diagonal,
    sq_norm,
)

PAIR_CHUNK = 4_000_000


def _check_range(n: int, m: int, r: int, l: int) -> None:
    if not (0 <= l <= r <= min(n, m)):
        raise ContractionOutOfRange(f"need 0 <= l <= r <= min(n, m); got n={n} m={m} r={r} l={l}")


def star(f: SymmetricKernel, g: SymmetricKernel, r: int, l: int) -> GeneralKernel:
    """The contraction ``f *_r^l g`` of order ``n + m - r - l``."""
    n, m = f.order, g.order
    _check_range(n, m, r, l)
    # inverted index of g on its last r coordinates: (c, a) -> [(y, value)]
    index: dict = {}
    for u, w in g.full_items():
        index.setdefault(u[m - r:], []).append((u[: m - r], w))
    out: dict = {}
    for t, v in f.full_items():
        x, c, a = t[: n - r], t[n - r : n - l], t[n - l :]
        if len(set(a)) != len(a):
            continue
        for y, w in index.get(c + a, ()):
            key = x + c + y
            out[key] = out.get(key, 0) + v * w
    return GeneralKernel(n + m - r - l, out)


def trace_power4(f: SymmetricKernel) -> Number:
    """``Trace([f]^4) = ||f *_1^1 f||^2`` for a kernel of order 2."""
    if f.order != 2:
        raise OrderMismatch("trace_power4 needs an order-2 kernel")
    if not f.is_exact:
        return contraction_norms(f, f, 1, 1).full
    return sq_norm(star(f, f, 1, 1))


# ---------------------------------------------------------------------------
# set-based norm engine


@dataclass(frozen=True)
class ContractionNorms:
    """Squared norms of ``h = f *_r^l g`` and of its pieces."""

    full: Number
    off_diagonal: Number  # ||h 1_Delta||^2
    diagonal: Number  # ||h 1_{Delta^c}||^2
    sym_off_diagonal: Number  # ||(h~) 1_Delta||^2


def _reps(f: SymmetricKernel):
    if len(f) == 0:
        return np.zeros((0, f.order), dtype=np.int64), np.zeros(0)
    keys = np.array(list(f.entries.keys()), dtype=np.int64).reshape(len(f), f.order)
    vals = np.array([float(v) for v in f.entries.values()])
    return keys, vals


def _encode(rows: np.ndarray, base: int) -> np.ndarray:
    code = np.zeros(rows.shape[0], dtype=np.int64)
    for col in range(rows.shape[1]):
        code = code * base + rows[:, col]
    return code


def _reduce(keys: np.ndarray, vals: np.ndarray):
    if keys.size == 0:
        return keys, vals
    uniq, inv = np.unique(keys, return_inverse=True)
    return uniq, np.bincount(inv.ravel(), weights=vals, minlength=uniq.size)


def _reduce_rows(rows: np.ndarray, vals: np.ndarray, base: int):
    """Sum ``vals`` over equal rows; rows are encoded to int64 when they fit."""
    if rows.shape[1] == 0:
        return np.zeros(1, dtype=np.int64), np.array([vals.sum()])
    if rows.shape[1] * math.log2(base) < 62:
        return _reduce(_encode(rows, base), vals)
    uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    return uniq, np.bincount(inv.ravel(), weights=vals, minlength=uniq.shape[0])


def _split(keys: np.ndarray, vals: np.ndarray, q: int, r: int):
    """All (K, rest) splits of each representative with |K| = r."""
    ks, rests, vs = [], [], []
    for pos in itertools.combinations(range(q), r):
        comp = [i for i in range(q) if i not in pos]
        ks.append(keys[:, list(pos)])
        rests.append(keys[:, comp])
        vs.append(vals)
    return np.concatenate(ks), np.concatenate(rests), np.concatenate(vs)


def _pair_chunks(left: np.ndarray, right: np.ndarray):
    """Yield index arrays ``(i, j)`` of all pairs with ``left[i] == right[j]``."""
    order = np.argsort(right, kind="stable")
    rs = right[order]
    uniq, start, counts = np.unique(rs, return_index=True, return_counts=True)
    if uniq.size == 0:
        return
    pos = np.searchsorted(uniq, left)
    pos_c = np.minimum(pos, uniq.size - 1)
    valid = (pos < uniq.size) & (uniq[pos_c] == left)
    li = np.nonzero(valid)[0]
    gi = pos_c[valid]
    c = counts[gi]
    cum = np.cumsum(c)
    lo = 0
    while lo < li.size:
        base = cum[lo - 1] if lo else 0
        hi = int(np.searchsorted(cum, base + PAIR_CHUNK, side="right"))
        hi = max(hi, lo + 1)
        cc = c[lo:hi]
        total = int(cc.sum())
        i = np.repeat(li[lo:hi], cc)
        first = np.repeat(np.cumsum(cc) - cc, cc)
        j = order[np.repeat(start[gi[lo:hi]], cc) + np.arange(total) - first]
        yield i, j
        lo = hi


def _norms_numpy(f: SymmetricKernel, g: SymmetricKernel, r: int, l: int) -> ContractionNorms:
    n, m = f.order, g.order
    tf, vf = _reps(f)
    tg, vg = _reps(g)
    base = max(f.support_bound, g.support_bound, 1) + 1
    kf, xf, wf = _split(tf, vf, n, r)
    kg, yg, wg = _split(tg, vg, m, r)
    if r * math.log2(base) >= 62:
        raise OverflowError("contraction keys do not fit in 64 bits")
    keyf = _encode(kf, base)
    keyg = _encode(kg, base)
    splits = list(itertools.combinations(range(r), r - l))  # positions of C inside K
    lfact = math.factorial(l)
    width = (n - r) + (r - l) + (m - r)
    acc_keys: List[np.ndarray] = []
    acc_vals: List[np.ndarray] = []
    acc_dis: List[np.ndarray] = []
    sym_keys: List[np.ndarray] = []
    sym_vals: List[np.ndarray] = []
    for i, j in _pair_chunks(keyf, keyg):
        x, y, k = xf[i], yg[j], kf[i]
        val = wf[i] * wg[j] * lfact
        disjoint = np.ones(i.size, dtype=bool)
        for a in range(x.shape[1]):
            for b in range(y.shape[1]):
                disjoint &= x[:, a] != y[:, b]
        for cpos in splits:
            c = k[:, list(cpos)]
            rows = np.concatenate([x, c, y], axis=1)
            # disjointness does not depend on the split; keep it alongside the key
            kk, vv = _reduce_rows(np.concatenate([rows, disjoint[:, None].astype(np.int64)], axis=1), val, base)
            acc_keys.append(kk)
            acc_vals.append(vv)
            if np.any(disjoint):
                z = np.sort(rows[disjoint], axis=1)
                sk, sv = _reduce_rows(z, val[disjoint], base)
                sym_keys.append(sk)
                sym_vals.append(sv)
    mult = math.factorial(n - r) * math.factorial(r - l) * math.factorial(m - r)
    if acc_keys:
        keys, h = _merge(acc_keys, acc_vals)
        dis = (keys % base == 1) if keys.ndim == 1 else (keys[:, -1] == 1)
        off = mult * float(np.sum(h[dis] ** 2))
        diag = mult * float(np.sum(h[~dis] ** 2))
    else:
        off = diag = 0.0
    if sym_keys:
        _, s = _merge(sym_keys, sym_vals)
        sym = float(np.sum((mult * s) ** 2)) / math.factorial(width)
    else:
        sym = 0.0
    return ContractionNorms(off + diag, off, diag, sym)


def _merge(keys: List[np.ndarray], vals: List[np.ndarray]):
    k = np.concatenate(keys)
    v = np.concatenate(vals)
    if k.ndim == 1:
        return _reduce(k, v)
    uniq, inv = np.unique(k, axis=0, return_inverse=True)
    return uniq, np.bincount(inv.ravel(), weights=v, minlength=uniq.shape[0])


def _integer_scaled(f: SymmetricKernel):
    den = 1
    for v in f.entries.values():
        den = math.lcm(den, Fraction(v).denominator)
    return SymmetricKernel(f.order, {k: int(v * den) for k, v in f.entries.items()}), den


def _norms_exact(f: SymmetricKernel, g: SymmetricKernel, r: int, l: int) -> ContractionNorms:
    # contraction is bilinear: work with integer multiples and divide once
    fi, df = _integer_scaled(f)
    gi, dg = _integer_scaled(g)
    scale = (df * dg) ** 2
    h = star(fi, gi, r, l)
    off = restrict_off_diagonal(h)
    diag = sq_norm(h) - sq_norm(off)

    def back(x):
        q = Fraction(x) / scale
        return int(q) if q.denominator == 1 else q

    return ContractionNorms(
        full=back(sq_norm(h)),
        off_diagonal=back(sq_norm(off)),
        diagonal=back(diag),
        sym_off_diagonal=back(_sym_sq_norm(off)),
    )


def _sym_sq_norm(off: GeneralKernel) -> Number:
    # on distinct-coordinate tuples the symmetrization is constant on each set,
    # equal to the orbit sum over k!, so its squared norm is sum (orbit sum)^2 / k!
    sums: dict = {}
    for idx, v in off.items():
        key = tuple(sorted(idx))
        sums[key] = sums.get(key, 0) + v
    total = sum((v * v for v in sums.values()), 0)
    k = math.factorial(off.order)
    return Fraction(total, k) if isinstance(total, int) else total / k


def contraction_norms(f: SymmetricKernel, g: SymmetricKernel, r: int, l: int, exact: bool | None = None) -> ContractionNorms:
    """Squared norms of ``f *_r^l g`` without materializing it.

    With exact (rational) coefficients, or ``exact=True``, the kernel is
    materialized through :func:`star` and every norm is an exact rational.
    """
    _check_range(f.order, g.order, r, l)
    if exact is None:
        exact = f.is_exact and g.is_exact
    if exact:
        return _norms_exact(f, g, r, l)
    if len(f) == 0 or len(g) == 0:
        return ContractionNorms(0.0, 0.0, 0.0, 0.0)
    return _norms_numpy(f, g, r, l)


# ---------------------------------------------------------------------------
# Lemma-type estimate chains


@dataclass
class EstimateRow:
    id: str
    lhs: float
    rhs: float
    passed: bool
    relation: str = "<="


@dataclass
class EstimateReport:
    n: int
    m: int
    rows: List[EstimateRow] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> List[EstimateRow]:
        return [r for r in self.rows if not r.passed]


def _le(a: Number, b: Number, exact: bool, rtol: float) -> bool:
    if exact:
        return a <= b
    return float(a) <= float(b) * (1 + rtol) + rtol


def _eq(a: Number, b: Number, exact: bool, rtol: float) -> bool:
    if exact:
        return a == b
    return abs(float(a) - float(b)) <= rtol * max(1.0, abs(float(b)))


def _section_star_sq(f: SymmetricKernel, g: SymmetricKernel, j: int, p: int, exact: bool) -> Number:
    """``||f(j,.) *_p^p g(j,.)||^2`` allowing order-0 sections."""
    fs, gs = f.section(j), g.section(j)
    f0, g0 = not isinstance(fs, SymmetricKernel), not isinstance(gs, SymmetricKernel)
    if f0 or g0:
        # p must be 0 here: a scalar section only tensors with the other side
        a = fs * fs if f0 else sq_norm(fs)
        b = gs * gs if g0 else sq_norm(gs)
        return a * b
    if p == 0:
        return sq_norm(fs) * sq_norm(gs)
    return contraction_norms(fs, gs, p, p, exact=exact).full


def check_estimates(f: SymmetricKernel, g: SymmetricKernel, rtol: float = 1e-10) -> EstimateReport:
    """Evaluate every inequality of the contraction estimate lemma for ``(f, g)``.

    Violations are reported in the rows rather than raised.  Comparisons are
    made between squared norms so they are exact for rational kernels.
    """
    n, m = f.order, g.order
    exact = f.is_exact and g.is_exact
    rep = EstimateReport(n, m)
    nf, ng = sq_norm(f), sq_norm(g)

    def add(id_, lhs, rhs, ok, rel="<="):
        rep.rows.append(EstimateRow(id_, float(lhs), float(rhs), bool(ok), rel))

    cache: dict = {}

    def norms(a, b, r, l, tag):
        key = (tag, r, l)
        if key not in cache:
            cache[key] = contraction_norms(a, b, r, l, exact=exact)
        return cache[key]

    # point 1
    for r in range(min(n, m) + 1):
        for l in range(r + 1):
            lhs = norms(f, g, r, l, "fg").full
            add(f"1:r={r},l={l}", math.sqrt(float(lhs)), math.sqrt(float(nf * ng)), _le(lhs, nf * ng, exact, rtol))

    if n >= 2:
        infl = influences(f)
        mx = max(infl.values(), default=0)
        top = norms(f, f, n, n - 1, "ff").full  # ||f *_n^{n-1} f||^2
        add("2:maxinf^2<=||f*_n^{n-1}f||^2", mx * mx, top, _le(mx * mx, top, exact, rtol))
        add("2:||f*_n^{n-1}f||^2<=||f||^2 maxinf", top, nf * mx, _le(top, nf * mx, exact, rtol))
        for l in range(1, min(n, m) + 1):
            lhs = norms(f, g, l, l - 1, "fg").full
            coords = f.coordinates() & g.coordinates()
            rhs_sum = sum((_section_star_sq(f, g, j, l - 1, exact) for j in coords), 0)
            add(f"2:fubini l={l}", lhs, rhs_sum, _eq(lhs, rhs_sum, exact, rtol), "==")
            # ||f *_l^{l-1} g||^2 <= ||f *_n^{n-1} f|| ||g||^2, compared after squaring
            ok = _le(lhs * lhs, top * ng * ng, exact, rtol)
            add(f"2:MODALX l={l}", lhs, math.sqrt(float(top)) * float(ng), ok)

        t10 = norms(f, f, 1, 0, "ff").full
        add("3:||f*_1^0f||==||f*_n^{n-1}f||", math.sqrt(float(t10)), math.sqrt(float(top)), _eq(t10, top, exact, rtol), "==")
        for l in range(2, n + 1):
            a = norms(f, f, l, l - 1, "ff").full
            b = norms(f, f, l - 1, l - 1, "ff")
            add(f"3:l={l} first", math.sqrt(float(a)), math.sqrt(float(b.diagonal)), _le(a, b.diagonal, exact, rtol))
            add(f"3:l={l} second", math.sqrt(float(b.diagonal)), math.sqrt(float(b.full)), _le(b.diagonal, b.full, exact, rtol))
    return rep


def to_fraction(x: Number) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)
