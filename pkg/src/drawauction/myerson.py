"""Closed-form optimal (Myerson) auction for the bimodal-uniform prior.

With ``q = F(v)`` the virtual value is ``h(q) = F^-1(q) - (1 - q) / f(F^-1(q))``
and its integral ``H`` is piecewise quadratic::

    H1(q) = a/p1 (q^2 - q)                                        on [0, p1]
    H2(q) = a (q - 1) + (b - a)/eps (q^2 - (1 + p1) q + p1)       on (p1, p1 + eps]
    H3(q) = b (q - 1) + (1 - b)/p2 (q^2 - (1 + p1 + eps) q + p1 + eps)   on (p1 + eps, 1]

``H`` fails to be convex only at ``q = p1``, so its lower convex hull ``G``
replaces a single stretch ``(z0, y0]`` by a line.  The bridging line is picked
from a short list of candidates: common tangents of ``H1`` and ``H3``, the
tangent from ``H1`` to the corner ``(p1 + eps, H3(p1 + eps))``, and the chord
from the origin to that corner.  When ``b < 1/2`` or ``eps > 0`` the bridge can
instead end on the interior of ``H3`` with its left end at the origin, or on
``H2``; those candidates are tried only when the first four fail to support
``H``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .mechanisms import Outcome, as_bids, descending_order, unsold, _single
from .model import BimodalSpec, SpecificationError, inv_cdf, pdf

SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class _Parabola:
    """``c0 (q - 1) + K (q^2 - S q + T)`` restricted to ``[lo, hi]``."""

    c0: float
    K: float
    S: float
    T: float
    lo: float
    hi: float

    def __call__(self, q):
        return self.c0 * (q - 1) + self.K * (q * q - self.S * q + self.T)

    def slope(self, q):
        return self.c0 + self.K * (2 * q - self.S)

    def min_gap(self, alpha: float, beta: float) -> float:
        """Minimum of ``self(q) - alpha - beta q`` over the piece's interval."""
        q = min(max(((beta - self.c0) / self.K + self.S) / 2, self.lo), self.hi)
        return min(self(t) - alpha - beta * t for t in (q, self.lo, self.hi))


def _tangent_roots(left: _Parabola, right: _Parabola):
    """Common tangents of ``H1`` (left) and a right-hand piece.

    Matching slopes gives ``z = A y - B``; matching intercepts then gives
    ``C y^2 + D y + E = 0``.  Returns ``(A, B, C, D, E, roots)`` where roots
    is a list of ``(z, y)`` pairs, possibly empty.
    """
    r = left.K  # a / p1
    A = right.K / r
    B = -((right.c0 - right.K * right.S) / (2 * r) + 0.5)
    C = -r * A * A + right.K
    D = 2 * r * A * B
    E = -r * B * B + right.c0 - right.K * right.T
    disc = D * D - 4 * C * E
    if abs(C) < 1e-300:
        ys = [-E / D] if D != 0 else []
    elif disc < 0:
        ys = []
    else:
        sq = math.sqrt(disc)
        ys = [(-D + sq) / (2 * C), (-D - sq) / (2 * C)]
    return A, B, C, D, E, [(A * y - B, y) for y in ys]


@dataclass(frozen=True)
class MyersonCurves:
    spec: BimodalSpec
    A: float
    B: float
    C: float
    D: float
    E: float
    y1: float | None
    y2: float | None
    z1: float | None
    z2: float | None
    z3: float | None
    lines: dict
    z0: float
    y0: float
    alpha0: float
    beta0: float
    selected: str

    # pieces of H --------------------------------------------------------
    def H1(self, q):
        s = self.spec
        return s.a / s.p1 * (q * q - q)

    def H2(self, q):
        s = self.spec
        return s.a * (q - 1) + (s.b - s.a) / s.eps * (q * q - (1 + s.p1) * q + s.p1)

    def H3(self, q):
        s = self.spec
        y = s.p1 + s.eps
        return s.b * (q - 1) + (1 - s.b) / s.p2 * (q * q - (1 + y) * q + y)

    def _dH(self, q):
        s = self.spec
        y = s.p1 + s.eps
        d1 = s.a / s.p1 * (2 * q - 1)
        d3 = s.b + (1 - s.b) / s.p2 * (2 * q - (1 + y))
        if s.eps > 0:
            d2 = s.a + (s.b - s.a) / s.eps * (2 * q - (1 + s.p1))
        else:
            d2 = d3
        return np.select([q <= s.p1, q <= y], [d1, d2], d3)

    def H(self, q):
        q = np.asarray(q, dtype=float)
        s = self.spec
        y = s.p1 + s.eps
        with np.errstate(divide="ignore", invalid="ignore"):
            mid = self.H2(q) if s.eps > 0 else self.H3(q)
        out = np.select([q <= s.p1, q <= y], [self.H1(q), mid], self.H3(q))
        return float(out) if out.ndim == 0 else out

    def G(self, q):
        q = np.asarray(q, dtype=float)
        inside = (q > self.z0) & (q <= self.y0)
        out = np.where(inside, self.alpha0 + self.beta0 * q, self.H(q))
        return float(out) if out.ndim == 0 else out

    def g(self, q):
        """Ironed virtual value ``G'``, the right derivative at ``q = 0``."""
        q = np.asarray(q, dtype=float)
        start = (q >= self.z0) if self.z0 == 0.0 else (q > self.z0)
        inside = start & (q <= self.y0)
        out = np.where(inside, self.beta0, self._dH(q))
        return float(out) if out.ndim == 0 else out

    def h(self, q):
        """Virtual value ``H'`` (unironed)."""
        q = np.asarray(q, dtype=float)
        out = self._dH(q)
        return float(out) if out.ndim == 0 else out


def virtual_value(spec: BimodalSpec, q):
    """``F^-1(q) - (1 - q) / f(F^-1(q))`` straight from the distribution."""
    v = inv_cdf(spec, q)
    return v - (1 - np.asarray(q)) / pdf(spec, v)


def _pieces(spec: BimodalSpec):
    y = spec.p1 + spec.eps
    h1 = _Parabola(0.0, spec.a / spec.p1, 1.0, 0.0, 0.0, spec.p1)
    h3 = _Parabola(spec.b, (1 - spec.b) / spec.p2, 1 + y, y, y, 1.0)
    h2 = None
    if spec.eps > 0:
        h2 = _Parabola(spec.a, (spec.b - spec.a) / spec.eps, 1 + spec.p1, spec.p1, spec.p1, y)
    return h1, h2, h3


def _line(h1: _Parabola, right, z: float, y: float):
    if y == z:
        return None
    beta = (right(y) - h1(z)) / (y - z)
    return h1(z) - beta * z, beta


def myerson_curves(spec: BimodalSpec) -> MyersonCurves:
    h1, h2, h3 = _pieces(spec)
    p1, Y = spec.p1, spec.p1 + spec.eps
    if h2 is not None and h2.slope(Y) > h3.slope(Y) + 1e-12:
        raise SpecificationError(
            "H is non-convex at p1 + eps as well; the single-bridge hull does not apply "
            f"(need eps <= (b - a) p2 / (1 - b) = {(spec.b - spec.a) * spec.p2 / (1 - spec.b):.6g})")

    A, B, C, D, E, roots = _tangent_roots(h1, h3)
    (z1, y1), (z2, y2) = (roots + [(None, None)] * 2)[:2]
    disc = Y * Y - Y - p1 / spec.a * h3(Y)
    z3 = Y - math.sqrt(disc) if disc >= 0 else None

    lines = {
        "r1": _line(h1, h3, z1, y1) if z1 is not None else None,
        "r2": _line(h1, h3, z2, y2) if z2 is not None else None,
        "r3": _line(h1, h3, z3, Y) if z3 is not None else None,
        "r4": (0.0, h3(Y) / Y),
    }

    pieces = [p for p in (h1, h2, h3) if p is not None]

    def supports(line) -> bool:
        return line is not None and all(p.min_gap(*line) >= -SUPPORT_TOL for p in pieces)

    def in_left(z):
        return z is not None and 0.0 <= z <= p1

    if h2 is not None and h2.slope(p1) >= h1.slope(p1) - 1e-12:
        # no concave kink at p1: H is already convex
        return MyersonCurves(spec, A, B, C, D, E, y1, y2, z1, z2, z3, lines,
                             p1, p1, h1(p1) - h1.slope(p1) * p1, h1.slope(p1), "convex")

    candidates = [
        ("r1", z1, y1, in_left(z1) and y1 is not None and Y <= y1 <= 1),
        ("r2", z2, y2, in_left(z2) and y2 is not None and Y <= y2 <= 1),
        ("r3", z3, Y, in_left(z3)),
        ("r4", 0.0, Y, True),
    ]
    for label, z, y, ok in candidates:
        if ok and supports(lines[label]):
            return MyersonCurves(spec, A, B, C, D, E, y1, y2, z1, z2, z3, lines,
                                 z, y, *lines[label], label)

    # bridges the four candidates above cannot express
    extra = []
    t = h3.T - h3.c0 / h3.K
    if t >= 0 and Y <= math.sqrt(t) <= 1:
        extra.append(("origin-H3", 0.0, math.sqrt(t), h3))
    if h2 is not None:
        for z, y in _tangent_roots(h1, h2)[5]:
            if in_left(z) and p1 <= y <= Y:
                extra.append(("tangent-H2", z, y, h2))
        t = h2.T - h2.c0 / h2.K
        if t >= 0 and p1 <= math.sqrt(t) <= Y:
            extra.append(("origin-H2", 0.0, math.sqrt(t), h2))
    for label, z, y, piece in extra:
        line = _line(h1, piece, z, y)
        if supports(line):
            lines = {**lines, label: line}
            return MyersonCurves(spec, A, B, C, D, E, y1, y2, z1, z2, z3, lines,
                                 z, y, *line, label)
    raise RuntimeError(f"no supporting bridge found for {spec}")


@dataclass(frozen=True)
class MyersonParams:
    x_min: float
    x_ll: float
    x_cut: float
    beta0: float
    z0: float
    y0: float

    def to_record(self) -> dict:
        return asdict(self)

    @classmethod
    def from_record(cls, rec: dict) -> "MyersonParams":
        return cls(**{k: float(rec[k]) for k in ("x_min", "x_ll", "x_cut", "beta0", "z0", "y0")})


def params_from_hull(spec: BimodalSpec, z0: float, y0: float, beta0: float) -> MyersonParams:
    """Decision thresholds implied by a bridge ``(z0, y0)`` of slope ``beta0``."""
    x_ll = spec.a * z0 / spec.p1
    # F(x) <= y0 must cover every bid in the draw; with eps == 0 and y0 == p1
    # that is all of (a, b], hence the right-continuous quantile.
    x_cut = x_ll if y0 <= z0 else inv_cdf(spec, min(y0, 1.0), right=True)
    return MyersonParams(spec.a / (2 * spec.p1), x_ll, x_cut, beta0, z0, y0)


def myerson_params(spec: BimodalSpec, curves: MyersonCurves | None = None) -> MyersonParams:
    c = curves or myerson_curves(spec)
    return params_from_hull(spec, c.z0, c.y0, c.beta0)


def myerson_allocate(params: MyersonParams, x) -> Outcome:
    x = as_bids(x)
    n = x.size
    order = descending_order(x)
    i1 = order[0]
    x1, x2 = x[i1], x[order[1]]
    x_min, x_ll, x_cut = params.x_min, params.x_ll, params.x_cut

    if params.beta0 < 0:
        if x1 >= x_cut and x2 < x_cut:
            return _single(n, i1, x_cut)
        if x2 >= x_cut:
            return _single(n, i1, x2)
        return unsold(n)

    def in_draw(v):
        return x_ll < v <= x_cut

    if x1 >= x_min and x2 < x_min:
        return _single(n, i1, x_min)
    if x_min <= x2 and x1 <= x_ll:
        return _single(n, i1, x2)
    if in_draw(x1) and x_min <= x2 <= x_ll:
        return _single(n, i1, x2)
    if in_draw(x1) and in_draw(x2):
        members = np.flatnonzero((x > x_ll) & (x <= x_cut))
        alloc, pay = np.zeros(n), np.zeros(n)
        alloc[members] = 1.0 / members.size
        pay[members] = x_ll / members.size
        return Outcome(alloc, pay)
    if x1 > x_cut and in_draw(x2):
        m = int(np.count_nonzero((x > x_ll) & (x <= x_cut)))
        return _single(n, i1, x_cut - (x_cut - x_ll) / (m + 1))
    if x1 > x_cut:
        return _single(n, i1, x2)
    return unsold(n)


@dataclass(frozen=True)
class MyersonAuction:
    params: MyersonParams
    name: str = "myerson"

    @classmethod
    def for_spec(cls, spec: BimodalSpec) -> "MyersonAuction":
        return cls(myerson_params(spec))

    def outcome(self, x) -> Outcome:
        return myerson_allocate(self.params, x)

    def revenue(self, s: np.ndarray) -> np.ndarray:
        p = self.params
        x1, x2 = s[:, 0], s[:, 1]
        if p.beta0 < 0:
            return np.where(x1 < p.x_cut, 0.0, np.where(x2 >= p.x_cut, x2, p.x_cut))
        draw = (s > p.x_ll) & (s <= p.x_cut)
        m = draw.sum(axis=1)
        d1, d2 = draw[:, 0], draw[:, 1]
        conds = [
            (x1 >= p.x_min) & (x2 < p.x_min),
            (x_min_le := p.x_min <= x2) & (x1 <= p.x_ll),
            d1 & x_min_le & (x2 <= p.x_ll),
            d1 & d2,
            (x1 > p.x_cut) & d2,
            x1 > p.x_cut,
        ]
        prices = [p.x_min, x2, x2, p.x_ll, p.x_cut - (p.x_cut - p.x_ll) / (m + 1), x2]
        return np.select(conds, prices, 0.0)
