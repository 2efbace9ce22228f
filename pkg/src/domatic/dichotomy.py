"""Both sides of the dichotomy for Schreier graphs on profinite groups.

Uncountable side: level-by-level construction of clopen pairs ``A⁰_n, A¹_n``
from Cantor schemes, giving pairwise disjoint clopen sets
``D_n = A¹_n ∩ ⋂_{0<m<n} A⁰_m`` together with per-vertex domination
certificates.

Countable side: for a continuous (piecewise clopen) coloring and a marked set
that is a finite union of convergent sequences, compute the finite set of
colors seen on ``S·x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .openpair import (
    OpenPairWitness,
    SchemeSubtree,
    choose_parameters,
    moser_tardos_two_coloring,
    select_points,
)
from .profinite import ClopenSet, GroupSpec, Point, as_prefix
from .resample import DEFAULT_BUDGET
from .scheme import ExplicitScheme, SchemeError, scheme_from_json, validate_scheme

SCHEME_CHECK_DEPTH = 6


class LevelInvariantError(RuntimeError):
    """A built level fails its exhaustive check."""


def level_seed(seed: int, level: int) -> int:
    return int(np.random.SeedSequence([seed, level]).generate_state(1, np.uint64)[0])


def _extensions_gather(spec: GroupSpec, word, target: ClopenSet, depth: int) -> np.ndarray:
    """Bitset over Γ'(depth) of γ with ``cyl(word)·γ ⊆ target``."""
    q = spec.quotient(depth)
    bits = target.lift(depth)
    if len(word) >= depth:
        return bits[q.left_perm(word[:depth])]
    out = np.ones(q.size, dtype=bool)
    rest = spec.orders(depth)[len(word):]
    for tail in np.ndindex(*rest):
        out &= bits[q.left_perm(tuple(word) + tuple(tail))]
    return out


def translate_inside(spec: GroupSpec, word, x, target: ClopenSet) -> bool:
    """Whether ``cyl(word)·x ⊆ target`` for an element x of sufficient depth."""
    d = target.depth
    xs = as_prefix(x, d)
    if len(word) >= d:
        return target.contains(spec.multiply(word[:d], xs))
    rest = spec.orders(d)[len(word):]
    for tail in np.ndindex(*rest):
        if not target.contains(spec.multiply(tuple(word) + tuple(tail), xs)):
            return False
    return True


@dataclass
class Level:
    strings: list                 # L_{n+1}
    a0: ClopenSet
    a1: ClopenSet
    depth: int                    # depth of the quotient the pair lives on
    n_points: int
    seed: int
    resamples: int
    witnesses: dict               # (s, k) -> list of t
    verified: bool = False

    def to_json(self) -> dict:
        return {
            "strings": self.strings, "depth": self.depth, "n_points": self.n_points,
            "seed": self.seed, "resamples": self.resamples, "verified": self.verified,
            "a0": self.a0.to_json(), "a1": self.a1.to_json(),
            "witnesses": [{"s": s, "k": k, "t": ts} for (s, k), ts in sorted(self.witnesses.items())],
        }

    @classmethod
    def from_json(cls, spec: GroupSpec, data: dict) -> "Level":
        return cls(list(data["strings"]), ClopenSet.from_json(spec, data["a0"]),
                   ClopenSet.from_json(spec, data["a1"]), int(data["depth"]), int(data["n_points"]),
                   int(data["seed"]), int(data["resamples"]),
                   {(w["s"], int(w["k"])): list(w["t"]) for w in data["witnesses"]},
                   bool(data.get("verified", False)))


@dataclass
class LevelData:
    spec: GroupSpec
    schemes: list
    seed: int
    levels: list = field(default_factory=list)  # levels[n-1] holds L_n, A⁰_n, A¹_n

    @property
    def N(self) -> int:
        return len(self.levels)

    def strings(self, n: int) -> list:
        return [""] if n == 0 else self.levels[n - 1].strings

    def pair(self, n: int):
        if n == 0:
            raise ValueError("A⁰₀ and A¹₀ are undefined")
        lv = self.levels[n - 1]
        return lv.a0, lv.a1

    def required_depth(self, n: int) -> int:
        return max((lv.depth for lv in self.levels[:n]), default=0)

    def size_ledger(self) -> list:
        return [{"level": i + 1, "strings": len(lv.strings), "n_points": lv.n_points, "depth": lv.depth,
                 "quotient_size": self.spec.quotient_size(lv.depth), "resamples": lv.resamples}
                for i, lv in enumerate(self.levels)]

    def to_json(self) -> dict:
        return {"format": "domatic.levels/1", "group": self.spec.to_json(),
                "schemes": [s.to_json() for s in self.schemes], "seed": self.seed,
                "levels": [lv.to_json() for lv in self.levels]}

    @classmethod
    def from_json(cls, data: dict) -> "LevelData":
        spec = GroupSpec.from_json(data["group"])
        schemes = [scheme_from_json(spec, s) for s in data["schemes"]]
        return cls(spec, schemes, int(data["seed"]), [Level.from_json(spec, lv) for lv in data["levels"]])


def _witness_node(scheme, s: str, u: str, point: Point, depth: int) -> str:
    t = s + u
    while scheme.node(t).depth < depth:
        t += "0"
    if scheme.node(t).word[:depth] != point.prefix(depth):
        raise SchemeError(f"scheme node {t!r} does not lie in the cylinder of its branch limit")
    return t


def verify_level(data: LevelData, n: int) -> Optional[dict]:
    """Exhaustive invariant check of level n (1-based); returns the first failure or None."""
    spec = data.spec
    lv = data.levels[n - 1]
    if not lv.a0.isdisjoint(lv.a1):
        return {"level": n, "reason": "A0 and A1 intersect"}
    depth = max(lv.depth, lv.a0.depth, lv.a1.depth)
    children = sorted(set(lv.strings))
    for s in data.strings(n - 1):
        below = [t for t in children if t.startswith(s)]
        for k, scheme in enumerate(data.schemes):
            for j, target in enumerate((lv.a0, lv.a1)):
                cover = np.zeros(spec.quotient_size(depth), dtype=bool)
                for t in below:
                    cover |= _extensions_gather(spec, scheme.node(t).word, target, depth)
                    if cover.all():
                        break
                if not cover.all():
                    gamma = spec.unrank(int(np.flatnonzero(~cover)[0]), depth)
                    return {"level": n, "s": s, "k": k, "j": j, "gamma": list(gamma)}
    return None


def build_levels(spec: GroupSpec, schemes: Sequence, N: int, seed: int,
                 budget: int = DEFAULT_BUDGET, verify: bool = True) -> LevelData:
    """Construct levels 1..N; each level's invariant is checked exhaustively when ``verify``."""
    if N < 0:
        raise ValueError("number of levels must be non-negative")
    if not schemes:
        raise ValueError("need at least one scheme")
    for i, sch in enumerate(schemes):
        bad = validate_scheme(sch, sch.complete_depth() if isinstance(sch, ExplicitScheme) else SCHEME_CHECK_DEPTH)
        if bad is not None:
            raise SchemeError(f"scheme {i} invalid at node {bad.node!r}: {bad.reason}")
    data = LevelData(spec, list(schemes), seed)
    for n in range(N):
        sources = [(s, k) for s in data.strings(n) for k in range(len(schemes))]
        sets = [SchemeSubtree(schemes[k], s) for s, k in sources]
        n_pts = choose_parameters(len(sets))
        fam = select_points(sets, n_pts)
        lseed = level_seed(seed, n + 1)
        w: OpenPairWitness = moser_tardos_two_coloring(spec, fam, lseed, budget)
        witnesses, strings = {}, []
        for (s, k), pts, us in zip(sources, fam.points, fam.branches):
            ts = [_witness_node(schemes[k], s, u, p, fam.depth) for u, p in zip(us, pts)]
            witnesses[(s, k)] = ts
            strings.extend(ts)
        uniq = sorted(set(strings), key=lambda t: (len(t), t))
        data.levels.append(Level(uniq, w.a0, w.a1, fam.depth, n_pts, lseed, w.resample_count, witnesses))
        if verify:
            fail = verify_level(data, n + 1)
            if fail is not None:
                raise LevelInvariantError(f"level {n + 1} invariant fails: {fail}")
            data.levels[-1].verified = True
    return data


def emit_domatic_sets(data: LevelData, N: Optional[int] = None) -> list:
    """``[D_1, …, D_N]`` with ``D_n = A¹_n ∩ ⋂_{0<m<n} A⁰_m``."""
    N = data.N if N is None else N
    if N > data.N:
        raise ValueError(f"levels only built to {data.N}")
    out = []
    zeros = ClopenSet.full(data.spec)
    for n in range(1, N + 1):
        a0, a1 = data.pair(n)
        out.append(a1 & zeros)
        zeros = zeros & a0
    return out


def pairwise_disjoint(sets: Sequence[ClopenSet]) -> bool:
    return all(sets[i].isdisjoint(sets[j]) for i in range(len(sets)) for j in range(i))


@dataclass
class Certificate:
    n: int
    k: int
    chain: list
    gamma: Point

    def to_json(self) -> dict:
        return {"format": "domatic.certificate/1", "n": self.n, "k": self.k, "chain": self.chain,
                "gamma": self.gamma.to_json()}


def domination_certificate(data: LevelData, n: int, x, k: int = 0) -> Certificate:
    """A marked point γ = q_{s_n} of scheme k with ``γ·x ∈ D_n``.

    Walks ε = s₀ ⊆ s₁ ⊆ … ⊆ s_n through the recorded witnesses, keeping
    ``U_{s_m}·x ⊆ A⁰_m`` for 0<m<n and ending with ``U_{s_n}·x ⊆ A¹_n``.
    """
    if not 1 <= n <= data.N:
        raise ValueError(f"color {n} outside built levels 1..{data.N}")
    if not 0 <= k < len(data.schemes):
        raise ValueError(f"scheme index {k} out of range")
    spec, scheme = data.spec, data.schemes[k]
    need = data.required_depth(n)
    xs = as_prefix(x, need)
    chain, s = [""], ""
    for m in range(1, n + 1):
        lv = data.levels[m - 1]
        target = lv.a1 if m == n else lv.a0
        pick = next((t for t in lv.witnesses[(s, k)] if translate_inside(spec, scheme.node(t).word, xs, target)),
                    None)
        if pick is None:
            raise LevelInvariantError(f"no witness below {s!r} at level {m} for x")
        s = pick
        chain.append(s)
    gamma = scheme.node(s).point
    d = emit_domatic_sets(data, n)[-1]
    depth = max(d.depth, need)
    if not d.contains(spec.multiply(gamma.prefix(depth), as_prefix(x, depth))):
        raise LevelInvariantError("certificate point does not land in D_n")
    return Certificate(n, k, chain, gamma)


# ---------------------------------------------------------------- countable side

class UncoveredLimit(ValueError):
    """A limit point s·x lies outside every piece, so the coloring is not continuous there."""

    def __init__(self, sequence: int, word):
        super().__init__(f"limit of sequence {sequence} times x is not covered by any piece")
        self.sequence = sequence
        self.word = word


@dataclass(frozen=True)
class PiecewiseColoring:
    """Partial coloring given by pairwise disjoint clopen pieces."""

    spec: GroupSpec
    pieces: tuple  # ((ClopenSet, color), ...)

    def __post_init__(self):
        sets = [p for p, _ in self.pieces]
        if not pairwise_disjoint(sets):
            raise ValueError("coloring pieces must be pairwise disjoint")

    def locate(self, y) -> Optional[int]:
        """Index of the piece containing y, or None."""
        for i, (piece, _) in enumerate(self.pieces):
            if piece.contains(as_prefix(y, piece.depth)):
                return i
        return None

    def color(self, y) -> Optional[int]:
        i = self.locate(y)
        return None if i is None else self.pieces[i][1]

    def to_json(self) -> dict:
        return {"format": "domatic.piecewise/1",
                "pieces": [{"set": p.to_json(), "color": c} for p, c in self.pieces]}

    @classmethod
    def from_json(cls, spec: GroupSpec, data: dict) -> "PiecewiseColoring":
        return cls(spec, tuple((ClopenSet.from_json(spec, p["set"]), int(p["color"])) for p in data["pieces"]))


def first_one_coloring(spec: GroupSpec, depth: int) -> PiecewiseColoring:
    """Color x by the index of its first nonzero coordinate (defined below ``depth``)."""
    pieces = []
    for n in range(depth):
        pieces.append((ClopenSet.cylinder(spec, (0,) * n + (1,)), n))
    return PiecewiseColoring(spec, tuple(pieces))


@dataclass(frozen=True)
class ConvergentSequence:
    """``s_k → limit`` with ``π_ℓ(s_k) = π_ℓ(limit)`` for all ``k ≥ modulus(ℓ)``."""

    limit: Point
    element: Callable[[int], Point]
    modulus: Callable[[int], int]
    description: dict = field(default_factory=dict)

    @classmethod
    def perturbation(cls, limit: Point, value: int = 1, offset: int = 0, step: int = 1) -> "ConvergentSequence":
        """s_k = limit with coordinate ``offset + k·step`` replaced by ``value``."""
        if step < 1:
            raise ValueError("step must be positive")

        def element(k):
            return _replace_coordinate(limit, offset + k * step, value)

        def modulus(depth):
            return max(0, -(-(depth - offset) // step))

        return cls(limit, element, modulus,
                   {"type": "perturbation", "limit": limit.to_json(), "value": value, "offset": offset,
                    "step": step})

    @classmethod
    def eventually_constant(cls, limit: Point, elements: Sequence[Point]) -> "ConvergentSequence":
        elems = tuple(elements)

        def element(k):
            return elems[k] if k < len(elems) else limit

        return cls(limit, element, lambda depth: len(elems),
                   {"type": "eventually_constant", "limit": limit.to_json(),
                    "elements": [e.to_json() for e in elems]})

    @classmethod
    def from_json(cls, data: dict) -> "ConvergentSequence":
        kind = data.get("type")
        limit = Point.from_json(data.get("limit", {"head": [], "tail": [0]}))
        if kind == "perturbation":
            return cls.perturbation(limit, int(data.get("value", 1)), int(data.get("offset", 0)),
                                    int(data.get("step", 1)))
        if kind == "eventually_constant":
            return cls.eventually_constant(limit, [Point.from_json(e) for e in data["elements"]])
        raise ValueError(f"unknown sequence type {kind!r}")

    def check_modulus(self, depths: Sequence[int], probe: int = 8) -> bool:
        for d in depths:
            m = self.modulus(d)
            target = self.limit.prefix(d)
            if any(self.element(k).prefix(d) != target for k in range(m, m + probe)):
                return False
        return True


def _replace_coordinate(p: Point, pos: int, value: int) -> Point:
    length = max(pos + 1, len(p.head))
    head = list(p.prefix(length))
    head[pos] = value
    shift = (length - len(p.head)) % len(p.tail)
    return Point(tuple(head), p.tail[shift:] + p.tail[:shift])


@dataclass(frozen=True)
class ConvergentFamily:
    sequences: tuple

    def to_json(self) -> dict:
        return {"format": "domatic.convergent_family/1", "sequences": [s.description for s in self.sequences]}

    @classmethod
    def from_json(cls, data: dict) -> "ConvergentFamily":
        return cls(tuple(ConvergentSequence.from_json(s) for s in data["sequences"]))


@dataclass
class VisionReport:
    colors: list
    tail_index: int
    per_sequence: list
    undefined: list

    def to_json(self) -> dict:
        return {"format": "domatic.vision/1", "colors": self.colors, "tail_index": self.tail_index,
                "per_sequence": self.per_sequence, "undefined": self.undefined}


def _product_point(spec: GroupSpec, a: Point, b: Point, depth: int) -> tuple:
    return spec.multiply(a.prefix(depth), b.prefix(depth))


def finite_vision(coloring: PiecewiseColoring, fam: ConvergentFamily, x) -> VisionReport:
    """The exact finite set ``f[S·x]`` with the index past which each sequence is constant.

    For each sequence the piece containing ``s·x`` has depth d; past
    ``m(ℓ*)`` with ``ℓ* = max(d, length of x's non-periodic head)`` every ``s_k·x``
    lies in that piece, so only finitely many terms need evaluating.
    """
    spec = coloring.spec
    xp = x if isinstance(x, Point) else Point(tuple(x), (0,))
    colors, per_seq, undefined = set(), [], []
    tail_index = 0
    for i, seq in enumerate(fam.sequences):
        cap = max((p.depth for p, _ in coloring.pieces), default=0)
        limit_word = _product_point(spec, seq.limit, xp, cap)
        piece = coloring.locate(limit_word)
        if piece is None:
            raise UncoveredLimit(i, limit_word)
        d = coloring.pieces[piece][0].depth
        depth = max(d, xp.normalized().materialized_depth)
        tail = seq.modulus(depth)
        seen = {coloring.pieces[piece][1]}
        for k in range(tail):
            c = coloring.color(_product_point(spec, seq.element(k), xp, cap))
            if c is None:
                undefined.append([i, k])
            else:
                seen.add(c)
        colors |= seen
        tail_index = max(tail_index, tail)
        per_seq.append({"colors": sorted(seen), "tail_index": tail, "limit_color": coloring.pieces[piece][1]})
    return VisionReport(sorted(colors), tail_index, per_seq, undefined)
