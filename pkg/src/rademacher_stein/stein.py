"""Explicit normal-approximation bounds.

Every bound has the shape ``min(4||h||, ||h''||) * B1 + ||h''|| * B2`` with

* ``B1 = E|1 - <DF, -DL^-1 F>|`` (or its Cauchy-Schwarz upper bound), and
* ``B2 = (20/3) E sum_k |D_k L^-1 F| |D_k F|^3``,

either enumerated from a decomposition or written in closed form through
kernels, contractions and weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from .chaos import ChaosDecomposition, compress, covariance, to_table
from .contraction import contraction_norms, trace_power4
from .errors import (
    DegenerateVariance,
    DimensionLimit,
    EmptySet,
    Inapplicable,
    MissingNorm,
    MissingTailCertificate,
    NotCentered,
    NotNormalized,
    OrderMismatch,
    ZeroMeasure,
)
from .kernel import SymmetricKernel, influences, relabel, sq_norm
from .malliavin import apply_L_inverse, gamma_decomposition, gradient, gradient_tables
from .sparse import SparseIndexSet, multilinear_kernel, sharp_pairs
from .testfunctions import TestFunction

ENUM_LIMIT = 16
NORMALIZATION_TOL = 1e-9


@dataclass
class SteinBound:
    B1: float
    B1_variance_form: float
    B2: float
    total: float
    breakdown: Dict[str, float] = field(default_factory=dict)
    method: str = ""

    def to_json(self) -> dict:
        return {"B1": self.B1, "B1_variance_form": self.B1_variance_form, "B2": self.B2,
                "total": self.total, "breakdown": dict(self.breakdown), "method": self.method}


def _min_term(h: TestFunction) -> float:
    if h.sup_h is None or h.sup_h2 is None:
        raise MissingNorm(f"{h.name}: both ||h|| and ||h''|| must be certified")
    return min(4.0 * h.sup_h, h.sup_h2)


def _assemble(h: TestFunction, b1: float, b1v: float, b2: float, method: str, extra=None) -> SteinBound:
    mt = _min_term(h)
    first = mt * b1
    second = h.sup_h2 * b2
    bd = {"min(4|h|,|h''|)": mt, "min(4|h|,|h''|)*B1": first, "|h''|*B2": second}
    if extra:
        bd.update(extra)
    return SteinBound(float(b1), float(b1v), float(b2), float(first + second), bd, method)


# ---------------------------------------------------------------------------
# weight sequences


@dataclass(frozen=True)
class TailCertificate:
    """Upper bounds for the omitted part of a truncated infinite sequence."""

    sum_sq: float
    sum_4: float
    sum_abs: float = math.inf
    note: str = ""


@dataclass(frozen=True)
class WeightSequence:
    """Weights ``alpha_i`` for ``i = offset, offset+1, ...`` with an optional tail."""

    values: Tuple[float, ...]
    offset: int = 1
    tail: Optional[TailCertificate] = None

    def __init__(self, values: Sequence[float], offset: int = 1, tail: Optional[TailCertificate] = None):
        object.__setattr__(self, "values", tuple(values))
        object.__setattr__(self, "offset", int(offset))
        object.__setattr__(self, "tail", tail)

    def __len__(self) -> int:
        return len(self.values)

    def items(self) -> Iterator[Tuple[int, float]]:
        for i, v in enumerate(self.values):
            yield self.offset + i, v

    def get(self, i: int) -> float:
        j = i - self.offset
        return self.values[j] if 0 <= j < len(self.values) else 0

    def sum_sq(self):
        return sum((v * v for v in self.values), 0)

    def sum_4(self):
        return sum((v ** 4 for v in self.values), 0)

    @property
    def truncated(self) -> bool:
        return self.tail is not None

    def as_kernel(self, shift: int = 0) -> SymmetricKernel:
        """Order-1 kernel; coordinates shifted by ``shift`` (to reach ``N`` from ``Z``)."""
        return SymmetricKernel(1, {(i + shift,): v for i, v in self.items() if v != 0})

    @classmethod
    def ones(cls, n: int, scale: float = 1.0) -> "WeightSequence":
        return cls([scale] * n)

    @classmethod
    def partial_sum(cls, n: int) -> "WeightSequence":
        """``alpha_i = n^{-1/2}`` for ``i <= n``."""
        return cls([1.0 / math.sqrt(n)] * n)

    @classmethod
    def inverse_tail(cls, r: int, length: Optional[int] = None) -> "WeightSequence":
        """``alpha_i = sqrt(r)/i`` for ``i >= r``, truncated with certified tails.

        Beyond the last index ``M``, ``sum r/i^2 <= r/M`` and ``sum r^2/i^4 <= r^2/(3 M^3)``.
        """
        if r < 2:
            raise ValueError("r must be >= 2")
        length = 100 * r * r if length is None else length
        idx = np.arange(r, r + length, dtype=float)
        vals = math.sqrt(r) / idx
        M = r + length - 1
        tail = TailCertificate(sum_sq=r / M, sum_4=r * r / (3.0 * M ** 3), note=f"integral tails beyond i={M}")
        return cls(vals.tolist(), offset=r, tail=tail)


def parse_weights(spec: str) -> WeightSequence:
    """``ones:n=100``, ``partial:n=100``, ``inv:r=50`` or ``file:path`` (JSON list or ``{"values", "offset"}``)."""
    import json

    kind, _, rest = spec.partition(":")
    if kind == "file":
        with open(rest) as fh:
            data = json.load(fh)
        if isinstance(data, list):
            return WeightSequence(data)
        return WeightSequence(data["values"], data.get("offset", 1))
    kw = dict(part.split("=", 1) for part in rest.split(",") if part)
    if kind == "ones":
        return WeightSequence.ones(int(kw["n"]), float(kw.get("scale", 1.0)))
    if kind == "partial":
        return WeightSequence.partial_sum(int(kw["n"]))
    if kind == "inv":
        return WeightSequence.inverse_tail(int(kw["r"]), int(kw["length"]) if "length" in kw else None)
    raise ValueError(f"unknown weight spec {spec!r}")


# ---------------------------------------------------------------------------
# general decompositions


def bound_general(dec: ChaosDecomposition, h: TestFunction, enum_limit: int = ENUM_LIMIT) -> SteinBound:
    """Master bound from a centered decomposition.

    When the decomposition uses at most ``enum_limit`` coordinates everything
    is enumerated from pathwise gradients.  Otherwise ``<DF, -DL^-1 F>`` is
    decomposed with the product formula (its second moment then follows from
    the isometry) and ``B2`` is enumerated coordinate by coordinate over the
    variables that ``D_k F`` and ``D_k L^-1 F`` actually use.
    """
    if not dec.is_centered:
        raise NotCentered(f"mean is {dec.mean!r}")
    _min_term(h)
    small, _ = compress(dec)
    if small.dimension <= enum_limit:
        return _bound_enumerated(small, h)
    return _bound_structural(dec, h, enum_limit)


def _bound_enumerated(dec: ChaosDecomposition, h: TestFunction) -> SteinBound:
    t = to_table(dec, exact=False)
    dF = gradient_tables(t)
    dL = gradient_tables(to_table(apply_L_inverse(dec), exact=False))
    w = -(dF * dL).sum(axis=0) if dF.size else np.zeros_like(t)
    dev = 1.0 - w
    b1 = float(np.mean(np.abs(dev)))
    b1v = math.sqrt(float(np.mean(dev * dev)))
    b2 = 20.0 / 3.0 * float(np.mean((np.abs(dL) * np.abs(dF) ** 3).sum(axis=0))) if dF.size else 0.0
    return _assemble(h, b1, b1v, b2, "enumeration")


def _bound_structural(dec: ChaosDecomposition, h: TestFunction, enum_limit: int) -> SteinBound:
    gam = gamma_decomposition(dec)
    dev = gam.map_kernels(lambda n, k: k.scale(-1), mean=1 - gam.mean)
    b1v = math.sqrt(float((1 - gam.mean) ** 2 + covariance(gam, gam)))
    gsmall, _ = compress(dev)
    method = "product formula"
    if not gsmall.kernels:
        b1 = abs(float(dev.mean))
    elif gsmall.dimension <= enum_limit:
        b1 = float(np.mean(np.abs(to_table(gsmall, exact=False))))
    else:
        b1 = b1v
        method += "; B1 replaced by its Cauchy-Schwarz bound"
    grad = gradient(dec)
    ginv = gradient(apply_L_inverse(dec))
    acc = 0.0
    for k, dk in grad.items():
        coords = sorted(dk.coordinates() | ginv[k].coordinates())
        if len(coords) > enum_limit:
            raise DimensionLimit(f"D_{k}F uses {len(coords)} coordinates")
        pos = {c: i + 1 for i, c in enumerate(coords)}
        a = _relabel_dec(dk, pos, len(coords))
        b = _relabel_dec(ginv[k], pos, len(coords))
        ta = to_table(a, exact=False)
        tb = to_table(b, exact=False)
        acc += float(np.mean(np.abs(tb) * np.abs(ta) ** 3))
    return _assemble(h, b1, b1v, 20.0 / 3.0 * acc, method)


def _relabel_dec(dec: ChaosDecomposition, pos: Dict[int, int], d: int) -> ChaosDecomposition:
    ks = {n: SymmetricKernel(n, {tuple(pos[i] for i in idx): v for idx, v in k.items()}) for n, k in dec.kernels.items()}
    return ChaosDecomposition(d, dec.mean, ks)


# ---------------------------------------------------------------------------
# Rademacher averages


def average_terms(alpha: WeightSequence) -> Tuple[float, float]:
    """Certified upper bounds for ``|1 - sum alpha^2|`` and ``sum alpha^4``."""
    s2 = float(alpha.sum_sq())
    s4 = float(alpha.sum_4())
    if alpha.tail is None:
        return abs(1.0 - s2), s4
    # the omitted squares lie in [0, tail.sum_sq]
    dev = max(abs(1.0 - s2), abs(1.0 - s2 - alpha.tail.sum_sq))
    return dev, s4 + alpha.tail.sum_4


def bound_average(alpha, h: TestFunction, require_tail: bool = False) -> float:
    """``min(4||h||, ||h''||) |1 - sum alpha^2| + (20/3) ||h''|| sum alpha^4``.

    ``alpha`` is a :class:`WeightSequence` (or a plain sequence).  Set
    ``require_tail`` to refuse a sequence that describes an infinite family
    without a tail certificate.
    """
    if not isinstance(alpha, WeightSequence):
        alpha = WeightSequence(list(alpha))
    if require_tail and alpha.tail is None:
        raise MissingTailCertificate("truncated infinite weights need a tail certificate")
    mt = _min_term(h)
    dev, s4 = average_terms(alpha)
    return mt * dev + 20.0 / 3.0 * h.sup_h2 * s4


# ---------------------------------------------------------------------------
# fixed chaos


def fixed_chaos_terms(f: SymmetricKernel) -> Dict[str, object]:
    """Closed forms for ``E(1 - ||DF||^2/q)^2`` (exact and its upper bound) and
    the upper bound for ``E||DF||^4_{l^4}``, for ``F = J_q(f)``.
    """
    q = f.order
    if q < 2:
        raise OrderMismatch("fixed-chaos bounds need q >= 2")
    exact = f.is_exact
    nf = sq_norm(f)
    head = (1 - math.factorial(q) * nf) ** 2
    mww = head
    mww2 = head
    parts = {}
    for p in range(1, q):
        c = (math.factorial(p - 1) * math.comb(q - 1, p - 1) ** 2) ** 2 * math.factorial(2 * q - 2 * p) * q * q
        cn = contraction_norms(f, f, p, p, exact=exact)
        mww += c * cn.sym_off_diagonal
        mww2 += c * cn.off_diagonal
        parts[f"|(f*_{p}^{p} f)~1_D|^2"] = cn.sym_off_diagonal
        parts[f"|f*_{p}^{p} f 1_D|^2"] = cn.off_diagonal
    mww4 = 0
    for p in range(1, q + 1):
        c = (math.factorial(p - 1) * math.comb(q - 1, p - 1) ** 2) ** 2 * math.factorial(2 * q - 2 * p) * q ** 4
        full = contraction_norms(f, f, p, p - 1, exact=exact).full
        mww4 += c * full
        parts[f"|f*_{p}^{p - 1} f|^2"] = full
    return {"Mww": mww, "Mww2": mww2, "Mww4": mww4, "norms": parts}


def bound_fixed_chaos(f: SymmetricKernel, h: TestFunction) -> SteinBound:
    """``min(4||h||, ||h''||) sqrt(Mww) + ||h''|| (20/(3q)) Mww4`` for ``F = J_q(f)``.

    ``B1`` and ``B1_variance_form`` both hold ``sqrt(Mww)``: the closed form
    controls the second moment of ``1 - ||DF||^2/q``, not its first absolute moment.
    """
    terms = fixed_chaos_terms(f)
    q = f.order
    root = math.sqrt(float(terms["Mww"]))
    b2 = 20.0 / (3 * q) * float(terms["Mww4"])
    extra = {"Mww": float(terms["Mww"]), "Mww2": float(terms["Mww2"]), "Mww4": float(terms["Mww4"])}
    extra.update({k: float(v) for k, v in terms["norms"].items()})
    return _assemble(h, root, root, b2, "fixed chaos closed form", extra)


# ---------------------------------------------------------------------------
# double integrals


@dataclass
class DoubleIntegralBound:
    value: float  # smaller of the two contraction variants
    star21_variant: float
    diagonal_variant: float
    trace_chain: float
    trace: float
    norms: Dict[str, float] = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _check_double(f: SymmetricKernel, tol: float) -> None:
    if f.order != 2:
        raise OrderMismatch("need an order-2 kernel")
    if abs(2 * float(sq_norm(f)) - 1) > tol:
        raise NotNormalized(f"2||f||^2 = {2 * float(sq_norm(f))!r}, expected 1")


def bound_double_integral(f: SymmetricKernel, h: TestFunction, tol: float = NORMALIZATION_TOL) -> DoubleIntegralBound:
    """Both displayed double-integral bounds and the trace-based chain.

    ``4 sqrt(2) m ||f*_1^1 f 1_D|| + 160 ||h''|| X`` with ``X`` equal to
    ``||f*_2^1 f||^2`` or ``||f*_1^1 f 1_{D^c}||^2``, and
    ``4 sqrt(2) m sqrt(Tr[f]^4) + 160 ||h''|| Tr[f]^4`` where ``m = min(4||h||, ||h''||)``.
    """
    _check_double(f, tol)
    mt = _min_term(h)
    c11 = contraction_norms(f, f, 1, 1)
    c21 = contraction_norms(f, f, 2, 1)
    tr = float(trace_power4(f))
    lead = 4 * math.sqrt(2) * mt * math.sqrt(float(c11.off_diagonal))
    a = lead + 160 * h.sup_h2 * float(c21.full)
    b = lead + 160 * h.sup_h2 * float(c11.diagonal)
    chain = 4 * math.sqrt(2) * mt * math.sqrt(tr) + 160 * h.sup_h2 * tr
    norms = {"|f*_1^1 f 1_D|": math.sqrt(float(c11.off_diagonal)), "|f*_2^1 f|^2": float(c21.full),
             "|f*_1^1 f 1_Dc|^2": float(c11.diagonal), "Trace([f]^4)": tr}
    return DoubleIntegralBound(min(a, b), a, b, chain, tr, norms)


def chatterjee_bound(f: SymmetricKernel) -> float:
    """``sqrt(Tr[f]^4 / 2) + (5/2) sum_j (sum_i f(i,j)^2)^{3/2}``."""
    if f.order != 2:
        raise OrderMismatch("need an order-2 kernel")
    tr = float(trace_power4(f))
    rows = sum(float(v) ** 1.5 for v in influences(f).values())
    return math.sqrt(tr / 2) + 2.5 * rows


# ---------------------------------------------------------------------------
# single plus double integrals and 2-runs


def _as_order1(fvec) -> SymmetricKernel:
    if isinstance(fvec, SymmetricKernel):
        if fvec.order != 1:
            raise OrderMismatch("f must have order 1")
        return fvec
    if isinstance(fvec, WeightSequence):
        return fvec.as_kernel()
    return SymmetricKernel(1, {(i + 1,): v for i, v in enumerate(fvec) if v != 0})


def single_plus_double_terms(f: SymmetricKernel, g: SymmetricKernel) -> Dict[str, float]:
    empty1 = len(f) == 0
    c_gg = contraction_norms(g, g, 1, 1) if len(g) else None
    g11 = math.sqrt(float(c_gg.off_diagonal)) if c_gg else 0.0
    fg = math.sqrt(float(contraction_norms(f, g, 1, 1).full)) if (len(g) and not empty1) else 0.0
    col: Dict[int, float] = {}
    for (i, j), v in g.items():
        col[i] = col.get(i, 0.0) + abs(float(v))
        col[j] = col.get(j, 0.0) + abs(float(v))
    ks = set(col) | {i for (i,) in f.entries}
    fourth = sum(float(f[(k,)]) ** 4 + 16 * col.get(k, 0.0) ** 4 for k in ks)
    return {"|g*_1^1 g 1_D|": g11, "|f*_1^1 g|": fg, "sum_k[f^4+16(sum_i|g|)^4]": fourth}


def bound_single_plus_double(fvec, g: SymmetricKernel, h: TestFunction, tol: float = NORMALIZATION_TOL) -> float:
    """``m (2 sqrt2 ||g*_1^1 g 1_D|| + 3 ||f*_1^1 g||) + (160/3) ||h''|| sum_k [f(k)^4 + 16 (sum_i |g(i,k)|)^4]``.

    Needs ``Var F = ||f||^2 + 2||g||^2 = 1``.  Kernels indexed by ``Z`` must be
    shifted onto positive coordinates first (see :func:`relabel`).
    """
    f = _as_order1(fvec)
    if g.order != 2:
        raise OrderMismatch("g must have order 2")
    var = float(sq_norm(f)) + 2 * float(sq_norm(g))
    if abs(var - 1) > tol:
        raise NotNormalized(f"Var F = {var!r}, expected 1")
    mt = _min_term(h)
    t = single_plus_double_terms(f, g)
    return mt * (2 * math.sqrt(2) * t["|g*_1^1 g 1_D|"] + 3 * t["|f*_1^1 g|"]) + 160.0 / 3.0 * h.sup_h2 * t["sum_k[f^4+16(sum_i|g|)^4]"]


def two_runs_variance(alpha: WeightSequence):
    """``Var G = (3/16) sum alpha_i^2 + (1/8) sum alpha_i alpha_{i+1}``."""
    vals = alpha.values
    exact = all(isinstance(v, (int, Fraction)) for v in vals)
    a, b = (Fraction(3, 16), Fraction(1, 8)) if exact else (3 / 16, 1 / 8)
    s2 = sum((v * v for v in vals), 0)
    s11 = sum((vals[i] * vals[i + 1] for i in range(len(vals) - 1)), 0)
    return a * s2 + b * s11


def two_runs_variance_bruteforce(alpha: WeightSequence) -> Fraction:
    """``Var(sum alpha_i xi_i xi_{i+1})`` by enumerating the Bernoulli vector."""
    vals = [Fraction(v) for v in alpha.values]
    n = len(vals)
    if n == 0:
        return Fraction(0)
    size = 1 << (n + 1)
    s1 = Fraction(0)
    s2 = Fraction(0)
    for bits in range(size):
        g = sum((vals[i] for i in range(n) if (bits >> i) & 1 and (bits >> (i + 1)) & 1), Fraction(0))
        s1 += g
        s2 += g * g
    m = s1 / size
    return s2 / size - m * m


def two_runs_decomposition(alpha: WeightSequence) -> Tuple[SymmetricKernel, SymmetricKernel, int]:
    """Kernels ``(f, g)`` with ``(G - EG)/sqrt(Var G) = J_1(f) + J_2(g)``.

    Coordinates are shifted so the smallest index used is 1; the shift is
    returned as the third element.
    """
    var = float(two_runs_variance(alpha))
    if var <= 0:
        raise DegenerateVariance("Var G_n must be positive")
    s = math.sqrt(var)
    shift = 1 - alpha.offset
    f: Dict[Tuple[int], float] = {}
    g: Dict[Tuple[int, int], float] = {}
    for a, v in alpha.items():
        if v == 0:
            continue
        i = a + shift
        for k in (i, i + 1):
            f[(k,)] = f.get((k,), 0.0) + float(v) / (4 * s)
        g[(i, i + 1)] = g.get((i, i + 1), 0.0) + float(v) / (8 * s)
    return SymmetricKernel(1, f), SymmetricKernel(2, g), shift


def bound_two_runs(alpha: WeightSequence, h: TestFunction) -> Tuple[float, float]:
    """``(7/16) m / VarG sqrt(sum alpha^4) + (35/24) ||h''|| / VarG^2 sum alpha^4`` and ``VarG``."""
    var = float(two_runs_variance(alpha))
    if not var > 0:
        raise DegenerateVariance(f"Var G_n = {var}")
    mt = _min_term(h)
    s4 = float(alpha.sum_4())
    bound = 7.0 / 16.0 * mt / var * math.sqrt(s4) + 35.0 / 24.0 * h.sup_h2 / var ** 2 * s4
    return bound, var


# ---------------------------------------------------------------------------
# Wasserstein distance


def wasserstein_bound(B1: float, B2: float, EabsF: float) -> float:
    """``sqrt(2 (B1 + B2)(5 + E|F|))``, valid when ``4 (B1 + B2) <= 5``."""
    s = B1 + B2
    if 4 * s > 5:
        raise Inapplicable(f"4(B1+B2) = {4 * s} > 5")
    return math.sqrt(2 * s * (5 + EabsF))


# ---------------------------------------------------------------------------
# sparse sets


def bound_sparse_stats(F: SparseIndexSet, h: TestFunction) -> Tuple[float, float, SteinBound]:
    """``(|F#|^{1/2}/|F|, (max_j |F*_j| / |F|)^{1/4}, fixed-chaos bound for f_N)``."""
    if not len(F):
        raise EmptySet("the index set is empty")
    card = F.cardinality
    stat1 = math.sqrt(F.sharp) / card
    stat2 = (F.max_star / card) ** 0.25
    return stat1, stat2, bound_fixed_chaos(multilinear_kernel(F), h)


def bound_weighted_sparse(beta: WeightSequence, F: SparseIndexSet, h: Optional[TestFunction] = None) -> Tuple[float, float]:
    """Measure-weighted versions of the two sparse statistics.

    ``m(A) = sum_{i in A} beta_i^2`` with product weights on tuples; all sums run
    over the full symmetric sets.
    """
    dfact = math.factorial(F.d)

    def weight(t):
        w = 1
        for i in t:
            b = beta.get(i)
            w *= b * b
        return w

    wts = {t: weight(t) for t in F.tuples}
    total = dfact * sum(wts.values(), 0)
    if total == 0:
        raise ZeroMeasure("beta gives the index set zero mass")
    per_j: Dict[int, float] = {}
    for t, w in wts.items():
        for j in t:
            per_j[j] = per_j.get(j, 0) + w
    sup_star = dfact * max(per_j.values())
    sharp = dfact * dfact * sum((wts[a] * wts[b] for a, b in sharp_pairs(F)), 0)
    stat1 = math.sqrt(float(sharp)) / float(total)
    stat2 = (float(sup_star) / float(total)) ** 0.25
    return stat1, stat2
