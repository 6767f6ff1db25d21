"""JSON formats for kernels, decompositions, truth tables, index sets and estimates.

Numbers are read as floats, or as exact rationals in ``rational`` mode, where
strings such as ``"1/3"`` are also accepted.  The rational writer emits
non-integers as ``"p/q"`` strings.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .chaos import ChaosDecomposition
from .engine import Estimate
from .kernel import GeneralKernel, SymmetricKernel, make_symmetric_kernel
from .sparse import SparseIndexSet


class FormatError(ValueError):
    """Malformed input document."""


def parse_number(x: Any, exact: bool):
    if isinstance(x, bool):
        raise FormatError(f"expected a number, got {x!r}")
    if exact:
        if isinstance(x, int):
            return x
        if isinstance(x, (float, str)):
            try:
                v = Fraction(str(x))
            except ValueError as exc:
                raise FormatError(f"bad number {x!r}") from exc
            return int(v) if v.denominator == 1 else v
        raise FormatError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x))
        except ValueError as exc:
            raise FormatError(f"bad number {x!r}") from exc
    raise FormatError(f"expected a number, got {x!r}")


def dump_number(v):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return v
    return float(v)


def _need(doc, key, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise FormatError(f"missing field {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise FormatError(f"field {key!r} has the wrong type")
    return val


# kernels


def kernel_from_json(doc, exact: bool = False) -> SymmetricKernel:
    order = _need(doc, "order", int)
    entries = _need(doc, "entries", list)
    raw = []
    for item in entries:
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], list)):
            raise FormatError(f"bad kernel entry {item!r}")
        raw.append((item[0], parse_number(item[1], exact)))
    return make_symmetric_kernel(order, raw)


def general_kernel_from_json(doc, exact: bool = False) -> GeneralKernel:
    order = _need(doc, "order", int)
    ents = {}
    for item in _need(doc, "entries", list):
        ents[tuple(item[0])] = parse_number(item[1], exact)
    return GeneralKernel(order, ents)


def kernel_to_json(k) -> dict:
    return {"order": k.order, "entries": [[list(i), dump_number(v)] for i, v in sorted(k.items())]}


# decompositions


def decomposition_from_json(doc, exact: bool = False) -> ChaosDecomposition:
    d = _need(doc, "dimension", int)
    mean = parse_number(doc.get("mean", 0), exact)
    kernels = [kernel_from_json(k, exact) for k in _need(doc, "kernels", list)]
    return ChaosDecomposition(d, mean, kernels)


def decomposition_to_json(dec: ChaosDecomposition) -> dict:
    return {"dimension": dec.dimension, "mean": dump_number(dec.mean),
            "kernels": [kernel_to_json(k) for k in dec.kernels.values()]}


# truth tables


def table_from_json(doc, exact: bool = False):
    d = _need(doc, "d", int)
    values = _need(doc, "values", list)
    if len(values) != 1 << d:
        raise FormatError(f"expected {1 << d} values for d={d}, got {len(values)}")
    return d, [parse_number(v, exact) for v in values]


def table_to_json(d: int, values) -> dict:
    return {"d": d, "values": [dump_number(v) for v in values]}


# index sets


def set_from_json(doc) -> SparseIndexSet:
    return SparseIndexSet(_need(doc, "d", int), _need(doc, "N", int), _need(doc, "tuples", list))


def set_to_json(F: SparseIndexSet) -> dict:
    return {"d": F.d, "N": F.N, "tuples": [list(t) for t in F.sorted_tuples()]}


# estimates


def estimate_to_json(e: Estimate) -> dict:
    return e.to_json()


def estimate_from_json(doc) -> Estimate:
    return Estimate(float(_need(doc, "value")), float(_need(doc, "std_error")), int(_need(doc, "samples")), int(_need(doc, "seed")))


def load(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save(path: str, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=False)
        fh.write("\n")
