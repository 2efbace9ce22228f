"""Disjoint clopen pairs meeting every translate of finitely many perfect sets.

Given k perfect sets, pick n points in each, separate all k·n points at a
common depth ℓ, and 2-color the quotient ``Γ' = ∏_{i<ℓ} Γ_i`` so that for
every x no group ``{π(q_j^m)·x : m < n}`` is monochromatic. The coloring is
found by Moser–Tardos resampling; since the color classes are depth-ℓ
cylinder unions, the finite check covers all of Γ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .profinite import ClopenSet, GroupSpec, Point, as_prefix
from .resample import DEFAULT_BUDGET, run_translation
from .scheme import SchemeError

# rational upper bound on e (e = 2.718281828459045235...)
E_UPPER = Fraction(2718281828459045236, 10**18)


def choose_parameters(k: int) -> int:
    """Least n with ``2ek[(kn)² + 1] < 2ⁿ``, using an upper bound on e."""
    if k < 1:
        raise ValueError("k must be at least 1")
    n = 1
    while 2 * E_UPPER * k * ((k * n) ** 2 + 1) >= 2**n:
        n += 1
    return n


def lll_bookkeeping(k: int, n: int) -> dict:
    """Event probability, dependency bound and whether ``e·p·(d+1) < 1`` holds."""
    p = Fraction(k, 2 ** (n - 1))
    d = (k * n) ** 2
    return {"p": p, "d": d, "holds": E_UPPER * p * (d + 1) < 1}


@dataclass(frozen=True)
class SchemeSubtree:
    """The perfect set of branch limits of ``scheme`` below node ``s``."""

    scheme: object
    s: str = ""

    def limit(self, u: str) -> Point:
        return self.scheme.limit(self.s + u)


@dataclass
class PointFamily:
    k: int
    n: int
    points: list  # points[j][m]
    depth: int
    branches: Optional[list] = None  # branches[j][m]: u with points[j][m] the limit of s⁀u⁀0^ω

    def words(self) -> list:
        return [[as_prefix(p, self.depth) for p in grp] for grp in self.points]

    def to_json(self) -> dict:
        return {"k": self.k, "n": self.n, "depth": self.depth,
                "points": [[p.to_json() for p in grp] for grp in self.points],
                "branches": self.branches}


def _separation_depth(points: Sequence[Point]) -> int:
    if len(points) <= 1:
        return 0
    span = max(len(p.head) for p in points) + math.lcm(*(len(p.tail) for p in points))
    words = sorted(p.prefix(span) for p in points)
    best = 0
    for a, b in zip(words, words[1:]):
        lcp = next((i for i, (x, y) in enumerate(zip(a, b)) if x != y), None)
        if lcp is None:
            raise ValueError("points are not distinct")
        best = max(best, lcp + 1)
    return best


def _candidates(n: int, extra: int = 12):
    width = max(1, math.ceil(math.log2(n))) if n > 1 else 1
    for i in range(2**width):
        yield format(i, f"0{width}b")
    for length in range(width + 1, width + 1 + extra):
        for i in range(2 ** (length - 1)):
            yield format(i, f"0{length - 1}b") + "1"


def select_points(sets: Sequence, n: int) -> PointFamily:
    """Pick n branch limits from each perfect set, all pairwise distinct.

    Candidates below s are the limits of ``s⁀u⁀0^ω`` for u in length-then-
    lexicographic order (longer u must end in 1 to give a new limit).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    chosen, branches, flat, seen = [], [], [], set()
    for j, ps in enumerate(sets):
        grp, us = [], []
        for u in _candidates(n):
            try:
                p = ps.limit(u)
            except SchemeError:
                continue
            key = p.normalized()
            if key in seen:
                continue
            seen.add(key)
            grp.append(p)
            us.append(u)
            flat.append(p)
            if len(grp) == n:
                break
        if len(grp) < n:
            raise ValueError(f"perfect set {j} exhausted after {len(grp)} distinct points (needed {n})")
        chosen.append(grp)
        branches.append(us)
    return PointFamily(len(sets), n, chosen, _separation_depth(flat), branches)


def family_from_words(words: Sequence[Sequence[Sequence[int]]], depth: Optional[int] = None) -> PointFamily:
    """PointFamily from explicit finite words (padded with 0s)."""
    points = [[Point(tuple(w), (0,)) for w in grp] for grp in words]
    flat = [p for grp in points for p in grp]
    sep = _separation_depth(flat)
    depth = sep if depth is None else depth
    if depth < sep:
        raise ValueError(f"points are only separated at depth {sep}")
    ns = {len(g) for g in points}
    return PointFamily(len(points), ns.pop() if len(ns) == 1 else 0, points, depth)


@dataclass
class OpenPairWitness:
    a0: ClopenSet
    a1: ClopenSet
    depth: int
    seed: int
    resample_count: int
    flagged: bool = False

    def color_array(self) -> np.ndarray:
        return self.a1.lift(self.depth).astype(np.int32)

    def to_json(self) -> dict:
        return {"format": "domatic.open_pair/1", "depth": self.depth, "seed": self.seed,
                "resample_count": self.resample_count, "flagged": self.flagged,
                "a0": self.a0.to_json(), "a1": self.a1.to_json()}

    @classmethod
    def from_json(cls, spec: GroupSpec, data: dict) -> "OpenPairWitness":
        return cls(ClopenSet.from_json(spec, data["a0"]), ClopenSet.from_json(spec, data["a1"]),
                   int(data["depth"]), int(data["seed"]), int(data["resample_count"]),
                   bool(data.get("flagged", False)))


def _translation_tables(spec: GroupSpec, fam: PointFamily):
    q = spec.quotient(fam.depth)
    words = [w for grp in fam.words() for w in grp]
    lh, ll, r_lo = q.left_tables(words)
    ih, il, _ = q.left_tables([spec.inverse(w) for w in words])
    ptr = np.zeros(len(fam.points) + 1, dtype=np.int64)
    np.cumsum([len(g) for g in fam.points], out=ptr[1:])
    return lh, ll, ih, il, r_lo, ptr


def moser_tardos_two_coloring(spec: GroupSpec, fam: PointFamily, seed: int,
                              budget: int = DEFAULT_BUDGET) -> OpenPairWitness:
    """Resample the least violated event x until no point group is monochromatic at any x."""
    lh, ll, ih, il, r_lo, ptr = _translation_tables(spec, fam)
    res = run_translation(lh, ih, ll, il, r_lo, ptr, seed, budget)
    colors = res.colors.astype(bool)
    size = colors.shape[0]
    return OpenPairWitness(
        ClopenSet(spec, fam.depth, ~colors), ClopenSet(spec, fam.depth, colors),
        fam.depth, seed, res.resamples, flagged=res.resamples > 10 * size,
    )


@dataclass
class OpenPairCheck:
    ok: bool
    counterexample: Optional[dict] = None

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "counterexample": self.counterexample}


def verify_open_pair(spec: GroupSpec, fam: PointFamily, w: OpenPairWitness) -> OpenPairCheck:
    """Exhaustive check over Γ' that every translated point group meets both colors."""
    if w.depth < fam.depth or w.a0.depth > w.depth or w.a1.depth > w.depth:
        return OpenPairCheck(False, {"reason": "inconsistent depths"})
    if not (w.a0 & w.a1).is_empty():
        return OpenPairCheck(False, {"reason": "A0 and A1 intersect"})
    if not (w.a0 | w.a1).is_full():
        return OpenPairCheck(False, {"reason": "A0 and A1 do not cover the group"})
    depth = w.depth
    deep = PointFamily(fam.k, fam.n, fam.points, depth, fam.branches)
    lh, ll, _, _, r_lo, ptr = _translation_tables(spec, deep)
    colors = np.ascontiguousarray(w.a1.lift(depth), dtype=np.int32)
    if fam.k == 0:
        return OpenPairCheck(True)
    bad = _backend.kernels.translation_violations(lh, ll, r_lo, ptr, colors)
    hits = np.flatnonzero(bad)
    if hits.size == 0:
        return OpenPairCheck(True)
    x = int(hits[0])
    xw = spec.unrank(x, depth)
    for j, grp in enumerate(deep.words()):
        vals = {int(colors[spec.rank(spec.multiply(q, xw))]) for q in grp}
        if len(vals) == 1:
            return OpenPairCheck(False, {"x": list(xw), "group": j, "color": vals.pop()})
    raise AssertionError("kernel reported a violation that does not reproduce")


def verify_open_pair_by_colors(spec: GroupSpec, fam: PointFamily, w: OpenPairWitness) -> bool:
    """Independent check: for each color j, ``⋃_q q⁻¹·A_j`` must be all of Γ."""
    for grp in fam.points:
        words = [as_prefix(p, w.depth) for p in grp]
        for a in (w.a0, w.a1):
            lifted = ClopenSet(spec, w.depth, a.lift(w.depth))
            cover = ClopenSet.empty(spec)
            for q in words:
                cover = cover | lifted.translate_left(spec.inverse(q))
            if not cover.is_full():
                return False
    return True
