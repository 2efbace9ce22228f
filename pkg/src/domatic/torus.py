"""Open pairs on tori via semicircle preimages.

A triple of circle points whose cyclic gaps are all below ½ meets both open
semicircles ``E₀ = (0, ½)`` and ``E₁ = (½, 1)`` after any rotation. On
``(ℝ/ℤ)^d`` the linear forms ``b_j = (1, j, …, j^{d-1})`` reduce everything
to the circle, and a multiplier n spreads a triple into acute position.

Reals are handled as integers scaled by ``2^P``. Values that are not exactly
representable carry an error bound, and every strict comparison must clear
that bound by a margin, otherwise the result is reported as indeterminate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

DEFAULT_PRECISION = 96


class Indeterminate(ArithmeticError):
    """A verdict depends on digits beyond the working precision."""


class NoWitness(ValueError):
    """Bounded search finished without a certified answer."""


@dataclass(frozen=True)
class Fixed:
    """``value / 2^P`` in [0, 1), with ``exact`` False when rounded."""

    value: int
    precision: int
    exact: bool = True

    def as_fraction(self) -> Fraction:
        return Fraction(self.value, 1 << self.precision)


def fixed(x, precision: int = DEFAULT_PRECISION) -> Fixed:
    """Reduce a real mod 1 to P-bit fixed point (floor), recording exactness."""
    if isinstance(x, Fixed):
        if x.precision != precision:
            raise ValueError("mixed precisions")
        return x
    q = Fraction(x) if not isinstance(x, str) else Fraction(x.strip())
    q -= math.floor(q)
    scaled = q * (1 << precision)
    v = math.floor(scaled)
    return Fixed(v, precision, v == scaled)


def fixed_sqrt(n: int, precision: int = DEFAULT_PRECISION, offset: int = 0, scale: int = 1) -> Fixed:
    """Fractional part of ``scale·√n + offset`` at precision P."""
    root = math.isqrt(n * scale * scale << (2 * precision))
    exact = root * root == n * scale * scale << (2 * precision)
    v = (root + (offset << precision)) % (1 << precision)
    return Fixed(v, precision, exact)


@dataclass(frozen=True)
class AcuteResult:
    acute: bool
    margin: Fraction

    def __bool__(self):
        return self.acute


def _gaps(vals, modulus):
    a, b, c = sorted(v % modulus for v in vals)
    return (b - a, c - b, modulus - (c - a))


def _threshold(precision: int, err_units: int) -> Fraction:
    # err_units bounds the absolute error of each scaled value, in units of 2^-P
    if err_units == 0:
        return Fraction(0)
    return max(Fraction(16, 1 << precision), Fraction(4 * err_units, 1 << precision))


def _acute_scaled(vals, precision, err_units) -> AcuteResult:
    full = 1 << precision
    if len(set(v % full for v in vals)) < 3:
        if err_units:
            raise Indeterminate("coincident points at this precision")
        return AcuteResult(False, Fraction(0))
    gaps = _gaps(vals, full)
    margin = Fraction(full // 2 - max(gaps), full)
    if err_units and abs(margin) <= _threshold(precision, err_units):
        raise Indeterminate(f"acuteness margin {float(margin):.3g} within precision slack")
    return AcuteResult(margin > 0, margin)


def is_acute(triple: Sequence, precision: int = DEFAULT_PRECISION) -> AcuteResult:
    """All three cyclic gaps strictly below ½; margin is ``½ − max gap``.

    Coincident points are degenerate (not acute, margin 0).
    """
    if len(triple) != 3:
        raise ValueError("need exactly three points")
    fx = [fixed(t, precision) for t in triple]
    err = 0 if all(f.exact for f in fx) else 1
    return _acute_scaled([f.value for f in fx], precision, err)


def find_acute_multiplier(triples: Sequence[Sequence], n_max: int, precision: int = DEFAULT_PRECISION) -> int:
    """Least ``1 ≤ n ≤ n_max`` putting every scaled triple in certified acute position."""
    fx = [[fixed(t, precision) for t in tri] for tri in triples]
    for tri in fx:
        if len(tri) != 3:
            raise ValueError("need triples")
        if len({f.value for f in tri}) < 3:
            raise ValueError("triple has coincident points")
    return _multiplier_with_weight(fx, n_max, precision, 1)


def vandermonde_vector(j: int, d: int) -> tuple:
    return tuple(j**i for i in range(d))


def vandermonde_det(js: Sequence[int]) -> int:
    """Determinant of the matrix with rows ``(1, j, …, j^{d-1})``, by the product formula."""
    det = 1
    for a in range(len(js)):
        for b in range(a + 1, len(js)):
            det *= js[b] - js[a]
    return det


def _form(b, point: Sequence[Fixed]) -> tuple:
    """``b·x`` mod 1 in scaled units, with its error bound in units of 2^-P."""
    full = 1 << point[0].precision
    val = sum(bi * c.value for bi, c in zip(b, point)) % full
    err = sum(abs(bi) for bi, c in zip(b, point) if not c.exact)
    return val, err


def _as_points(samples, precision):
    out = []
    for pts in samples:
        fx = [tuple(fixed(c, precision) for c in p) for p in pts]
        dims = {len(p) for p in fx}
        if len(dims) != 1:
            raise ValueError("sample points of one set differ in dimension")
        out.append(fx)
    dims = {len(p[0]) for p in out if p}
    if len(dims) > 1:
        raise ValueError("sample sets differ in dimension")
    return out


def _injective(b, pts, precision) -> Optional[bool]:
    """True if images are certified distinct; False if two certainly coincide; None if unsure."""
    full = 1 << precision
    imgs = [_form(b, p) for p in pts]
    unsure = False
    for i in range(len(imgs)):
        for j in range(i):
            (v1, e1), (v2, e2) = imgs[i], imgs[j]
            diff = (v1 - v2) % full
            dist = min(diff, full - diff)
            if e1 + e2 == 0:
                if dist == 0:
                    return False
            elif dist <= 2 * (e1 + e2) + 16:
                if dist == 0 and all(c.exact for c in pts[i]) and all(c.exact for c in pts[j]):
                    return False
                unsure = True
    return None if unsure else True


def select_good_vector(samples, precision: int = DEFAULT_PRECISION, scan_bound: Optional[int] = None) -> tuple:
    """First ``b_j = (1, j, …, j^{d-1})`` that is injective on every sample set.

    Injectivity on samples stands in for the form having uncountable image
    on the perfect set.
    """
    pts = _as_points(samples, precision)
    for i, ps in enumerate(pts):
        if len(set(ps)) < len(ps):
            raise ValueError(f"sample set {i} has repeated points")
    d = len(pts[0][0]) if pts and pts[0] else 1
    k = len(pts)
    bound = (d - 1) * k + 1 if scan_bound is None else scan_bound
    unsure = False
    for j in range(bound + 1):
        b = vandermonde_vector(j, d)
        verdicts = [_injective(b, ps, precision) for ps in pts]
        if all(v is True for v in verdicts):
            return b
        unsure |= any(v is None for v in verdicts)
    raise NoWitness(f"no injective Vandermonde form for j ≤ {bound}"
                    + (" (some forms indeterminate at this precision)" if unsure else ""))


@dataclass(frozen=True)
class TorusPairWitness:
    b: tuple
    n: int
    margin: Fraction
    precision: int
    triples: tuple  # indices of the sample points used per set

    def value(self, x) -> Fraction:
        fx = [fixed(c, self.precision) for c in x]
        v, _ = _form(self.b, fx)
        return Fraction((self.n * v) % (1 << self.precision), 1 << self.precision)

    def side(self, x) -> Optional[int]:
        """0 if x ∈ A₀, 1 if x ∈ A₁, None on the boundary."""
        v = self.value(x)
        if 0 < v < Fraction(1, 2):
            return 0
        if v > Fraction(1, 2):
            return 1
        return None

    def to_json(self) -> dict:
        return {"format": "domatic.torus_pair/1", "b": list(self.b), "n": self.n,
                "margin": str(self.margin), "margin_float": float(self.margin), "precision": self.precision,
                "E0": [0, 0.5], "E1": [0.5, 1], "triples": [list(t) for t in self.triples],
                "goodness": "injective on samples (finite stand-in for uncountable image)"}


def torus_open_pair(samples, n_max: int = 10**4, precision: int = DEFAULT_PRECISION,
                    scan_bound: Optional[int] = None) -> TorusPairWitness:
    """Good Vandermonde form, then a multiplier putting one image triple per set in acute position."""
    pts = _as_points(samples, precision)
    for i, ps in enumerate(pts):
        if len(ps) < 3:
            raise ValueError(f"sample set {i} needs at least 3 points")
    b = select_good_vector(samples, precision, scan_bound)
    triples, idx = [], []
    full = 1 << precision
    for ps in pts:
        imgs = [_form(b, p)[0] for p in ps]
        pick = next(((0, 1, i) for i in range(2, len(ps)) if imgs[i] != imgs[0] and imgs[i] != imgs[1]), None)
        if pick is None or imgs[0] == imgs[1]:
            raise ValueError("sample set has no triple with distinct images")
        idx.append(pick)
        triples.append([Fixed(imgs[i], precision, all(c.exact for c in ps[i])) for i in pick])
    # image errors scale with |b|; fold them into the per-value bound used by the multiplier search
    weight = sum(abs(x) for x in b)
    n = _multiplier_with_weight(triples, n_max, precision, weight)
    margin = min(_acute_scaled([n * f.value for f in tri], precision, 0).margin for tri in triples)
    return TorusPairWitness(b, n, margin, precision, tuple(idx))


def _multiplier_with_weight(triples, n_max, precision, weight):
    inexact = not all(f.exact for tri in triples for f in tri)
    skipped = 0
    for n in range(1, n_max + 1):
        err = n * weight if inexact else 0
        try:
            if all(_acute_scaled([n * f.value for f in tri], precision, err) for tri in triples):
                return n
        except Indeterminate:
            skipped += 1
    raise NoWitness(f"no acute multiplier up to {n_max}"
                    + (f" ({skipped} multipliers indeterminate at precision {precision})" if skipped else ""))
