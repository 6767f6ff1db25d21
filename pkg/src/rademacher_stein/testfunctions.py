"""Test functions ``h`` with certified sup-norms of ``h, h', h'', h'''``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """A test function with certified upper bounds on its sup-norms.

    ``derivatives`` holds callables for ``h', h'', h'''`` (any may be ``None``).
    ``support`` marks a compactly supported ``h``; quadrature then integrates
    over that interval.  ``gaussian_mean`` is a closed form for ``E h(Z)`` used
    as an oracle when known.
    """

    __test__ = False  # not a pytest class

    name: str
    eval: Fn
    sup_h: Optional[float] = None
    sup_h1: Optional[float] = None
    sup_h2: Optional[float] = None
    sup_h3: Optional[float] = None
    derivatives: Tuple[Optional[Fn], Optional[Fn], Optional[Fn]] = (None, None, None)
    support: Optional[Tuple[float, float]] = None
    gaussian_mean: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def d1(self, x):
        return self._deriv(0, x)

    def d2(self, x):
        return self._deriv(1, x)

    def d3(self, x):
        return self._deriv(2, x)

    def _deriv(self, i, x):
        fn = self.derivatives[i]
        if fn is None:
            raise ValueError(f"{self.name} has no derivative of order {i + 1}")
        return fn(np.asarray(x, dtype=float))

    def norm(self, k: int) -> Optional[float]:
        return (self.sup_h, self.sup_h1, self.sup_h2, self.sup_h3)[k]


def cosine(a: float = 1.0, b: float = 0.0) -> TestFunction:
    """``h(x) = cos(a x + b)``."""
    a, b = float(a), float(b)
    return TestFunction(
        name=f"cos:a={a:g},b={b:g}",
        eval=lambda x: np.cos(a * x + b),
        sup_h=1.0,
        sup_h1=abs(a),
        sup_h2=a * a,
        sup_h3=abs(a) ** 3,
        derivatives=(
            lambda x: -a * np.sin(a * x + b),
            lambda x: -a * a * np.cos(a * x + b),
            lambda x: a ** 3 * np.sin(a * x + b),
        ),
        gaussian_mean=math.exp(-a * a / 2) * math.cos(b),
        params={"kind": "cos", "a": a, "b": b},
    )


def sine(a: float = 1.0, b: float = 0.0) -> TestFunction:
    """``h(x) = sin(a x + b)``."""
    a, b = float(a), float(b)
    return TestFunction(
        name=f"sin:a={a:g},b={b:g}",
        eval=lambda x: np.sin(a * x + b),
        sup_h=1.0,
        sup_h1=abs(a),
        sup_h2=a * a,
        sup_h3=abs(a) ** 3,
        derivatives=(
            lambda x: a * np.cos(a * x + b),
            lambda x: -a * a * np.sin(a * x + b),
            lambda x: -a ** 3 * np.cos(a * x + b),
        ),
        gaussian_mean=math.exp(-a * a / 2) * math.sin(b),
        params={"kind": "sin", "a": a, "b": b},
    )


def cube() -> TestFunction:
    """``h(x) = x^3``; unbounded, so only ``||h'''|| = 6`` is certified."""
    return TestFunction(
        name="cube",
        eval=lambda x: x ** 3,
        sup_h3=6.0,
        derivatives=(lambda x: 3 * x ** 2, lambda x: 6 * x, lambda x: 6.0 + 0 * x),
        gaussian_mean=0.0,
        params={"kind": "cube"},
    )


def linear(a: float = 1.0, b: float = 0.0) -> TestFunction:
    a, b = float(a), float(b)
    return TestFunction(
        name=f"linear:a={a:g},b={b:g}",
        eval=lambda x: a * x + b,
        sup_h1=abs(a),
        sup_h2=0.0,
        sup_h3=0.0,
        derivatives=(lambda x: a + 0 * x, lambda x: 0 * x, lambda x: 0 * x),
        gaussian_mean=b,
        params={"kind": "linear", "a": a, "b": b},
    )


def _poly_sup(p: Polynomial) -> float:
    """Max of ``|p|`` on ``[-1, 1]`` from its critical points."""
    pts = [-1.0, 1.0]
    for r in p.deriv().roots():
        if abs(r.imag) < 1e-12 and -1 <= r.real <= 1:
            pts.append(r.real)
    return max(abs(p(x)) for x in pts)


def bump(width: float = 2.0, center: float = 0.0) -> TestFunction:
    """``h(x) = (1 - u^2)^4`` for ``|u| < 1`` with ``u = (x - center)/width``, else 0.

    The fourth-order zeros at ``u = +-1`` make ``h`` three times continuously
    differentiable.  Sup-norms come from the exact critical points of each
    polynomial derivative, inflated by a relative ``1e-12``.
    """
    w, c = float(width), float(center)
    base = Polynomial([1.0, 0.0, -1.0]) ** 4
    polys = [base, base.deriv(1), base.deriv(2), base.deriv(3)]

    def make(k):
        p = polys[k]
        scale = w ** -k

        def fn(x):
            u = (np.asarray(x, dtype=float) - c) / w
            return np.where(np.abs(u) < 1, p(u) * scale, 0.0)

        return fn

    sups = [_poly_sup(polys[k]) * w ** -k * (1 + 1e-12) for k in range(4)]
    return TestFunction(
        name=f"bump:w={w:g},c={c:g}",
        eval=make(0),
        sup_h=sups[0],
        sup_h1=sups[1],
        sup_h2=sups[2],
        sup_h3=sups[3],
        derivatives=(make(1), make(2), make(3)),
        support=(c - w, c + w),
        params={"kind": "bump", "w": w, "c": c},
    )


def custom(name: str, fn: Fn, sup_h=None, sup_h1=None, sup_h2=None, sup_h3=None, derivatives=(None, None, None)) -> TestFunction:
    """A caller-certified test function; the norms are taken on trust."""
    return TestFunction(name, fn, sup_h, sup_h1, sup_h2, sup_h3, tuple(derivatives), params={"kind": "custom"})


def sampled_sup(h: TestFunction, k: int, lo: float = -20.0, hi: float = 20.0, points: int = 200_001) -> float:
    """Dense-grid estimate of ``sup |h^(k)|``; used to spot-check certificates."""
    x = np.linspace(lo, hi, points)
    fn = h.eval if k == 0 else h.derivatives[k - 1]
    return float(np.max(np.abs(fn(x))))


def parse_test_function(spec: str) -> TestFunction:
    """Parse ``cos:a=1,b=0``, ``sin:a=2``, ``bump:w=2,c=0``, ``cube``."""
    kind, _, rest = spec.partition(":")
    kw = {}
    for part in filter(None, rest.split(",")):
        key, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"bad parameter {part!r} in {spec!r}")
        kw[key.strip()] = float(val)
    makers = {"cos": cosine, "sin": sine, "bump": lambda **k: bump(k.get("w", 2.0), k.get("c", 0.0)),
              "cube": cube, "linear": linear}
    if kind not in makers:
        raise ValueError(f"unknown test function {kind!r}")
    return makers[kind](**kw)
