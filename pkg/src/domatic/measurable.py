"""Finite-certificate versions of the ω-domatic constructions for smooth graphs,
inverse-function graphs and ω-regular graphs on probability spaces.

Uniformizing choices are always "least enumerated index", so every object is
deterministic and can be replayed. Weighted carriers use exact fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence


class StageBudgetExceeded(RuntimeError):
    def __init__(self, message, progress=None):
        super().__init__(message)
        self.progress = progress


class StreamError(ValueError):
    """A neighbor stream violates its declared regularity."""


def pairing_decode(n: int) -> tuple:
    """Inverse of ``(a, b) ↦ (a+b)(a+b+1)/2 + a``; every fiber of either coordinate is infinite."""
    if n < 0:
        raise ValueError("pairing is defined on non-negative integers")
    w = (math.isqrt(8 * n + 1) - 1) // 2
    a = n - w * (w + 1) // 2
    return a, w - a


def pi(n: int) -> int:
    """Surjection ω → ω with infinite fibers and ``pi(n) ≤ n``."""
    return pairing_decode(n)[0]


def fiber_of_pi(i: int, count: int) -> list:
    """First ``count`` elements of ``pi⁻¹{i}`` in increasing order."""
    return [(w * (w + 1)) // 2 + i for w in range(i, i + count)]


# ---------------------------------------------------------------- streams

class RoundRobin:
    """Circle-method tournament on an even carrier; round r is a perfect matching."""

    def __init__(self, vertex_count: int):
        if vertex_count < 2 or vertex_count % 2:
            raise ValueError("round-robin streams need an even carrier of size ≥ 2")
        self.vertex_count = vertex_count

    def __call__(self, v: int, i: int) -> int:
        n = self.vertex_count
        r = i % (n - 1)
        if v == n - 1:
            return r
        if v == r:
            return n - 1
        return (2 * r - v) % (n - 1)

    def to_json(self):
        return {"type": "round_robin"}


class Progression:
    """``neighbor(v, i) = (v + offset + step·i) mod V``."""

    def __init__(self, vertex_count: int, offset: int = 1, step: int = 1):
        self.vertex_count, self.offset, self.step = vertex_count, offset, step

    def __call__(self, v: int, i: int) -> int:
        return (v + self.offset + self.step * i) % self.vertex_count

    def to_json(self):
        return {"type": "progression", "offset": self.offset, "step": self.step}


class ExplicitStreams:
    """Per-vertex prefix followed by a repeated period."""

    def __init__(self, prefix: Sequence[Sequence[int]], period: Sequence[Sequence[int]]):
        self.prefix = [list(p) for p in prefix]
        self.period = [list(p) for p in period]
        if len(self.prefix) != len(self.period) or any(not p for p in self.period):
            raise ValueError("every vertex needs a prefix and a non-empty period")

    def __call__(self, v: int, i: int) -> int:
        pre = self.prefix[v]
        if i < len(pre):
            return pre[i]
        per = self.period[v]
        return per[(i - len(pre)) % len(per)]

    def to_json(self):
        return {"type": "explicit", "prefix": self.prefix, "period": self.period}


def stream_from_json(vertex_count: int, data: dict):
    kind = data.get("type")
    if kind == "round_robin":
        return RoundRobin(vertex_count)
    if kind == "progression":
        return Progression(vertex_count, int(data.get("offset", 1)), int(data.get("step", 1)))
    if kind == "explicit":
        return ExplicitStreams(data["prefix"], data["period"])
    raise ValueError(f"unknown stream rule {kind!r}")


def _check_weights(w: Sequence, n: int) -> tuple:
    fr = tuple(Fraction(x) for x in w)
    if len(fr) != n:
        raise ValueError(f"weight vector has {len(fr)} entries for {n} vertices")
    if any(x < 0 for x in fr):
        raise ValueError("weights must be non-negative")
    if sum(fr) != 1:
        raise ValueError(f"weights sum to {sum(fr)}, not 1")
    return fr


@dataclass
class LazyGraph:
    """Finite weighted carrier with an infinite out-neighbor stream per vertex."""

    vertex_count: int
    neighbor: Callable[[int, int], int]
    weights: tuple = None
    aux_weights: tuple = ()

    def __post_init__(self):
        n = self.vertex_count
        self.weights = _check_weights(self.weights if self.weights is not None else [Fraction(1, n)] * n, n)
        self.aux_weights = tuple(_check_weights(w, n) for w in self.aux_weights)

    def mass(self, vertices, weights=None) -> Fraction:
        w = self.weights if weights is None else weights
        return sum((w[v] for v in vertices), Fraction(0))

    def neighbors(self, v: int, count: int) -> list:
        return [self.neighbor(v, i) for i in range(count)]

    def to_json(self) -> dict:
        return {"format": "domatic.lazy_graph/1", "vertices": self.vertex_count,
                "stream": self.neighbor.to_json() if hasattr(self.neighbor, "to_json") else None,
                "weights": [str(w) for w in self.weights]}

    @classmethod
    def from_json(cls, data: dict) -> "LazyGraph":
        n = int(data["vertices"])
        w = data.get("weights")
        return cls(n, stream_from_json(n, data["stream"]), None if w is None else tuple(Fraction(x) for x in w),
                   tuple(tuple(Fraction(x) for x in aw) for aw in data.get("aux_weights", ())))


# ---------------------------------------------------------------- smooth graphs

class AllOthers:
    """Vertex j's stream lists every other index in increasing order."""

    def __call__(self, j: int, i: int) -> int:
        return i if i < j else i + 1

    def to_json(self):
        return {"type": "all_others"}


class Shift:
    """Vertex j's stream is ``j + offset + step·i``."""

    def __init__(self, offset: int = 1, step: int = 1):
        if offset < 1 or step < 1:
            raise ValueError("offset and step must be positive")
        self.offset, self.step = offset, step

    def __call__(self, j: int, i: int) -> int:
        return j + self.offset + self.step * i

    def to_json(self):
        return {"type": "shift", "offset": self.offset, "step": self.step}


@dataclass
class ClassSpace:
    """Vertices ``(c, j)`` with ν(c, j) = j; each class has its own index stream."""

    streams: dict  # class id -> callable (j, i) -> j'
    scan_limit: int = 10**5

    def nu(self, v) -> int:
        return v[1]

    def neighbor(self, v, i):
        c, j = v
        return c, self.streams[c](j, i)


@dataclass
class SmoothWitness:
    x: tuple
    color: int
    stage: int
    neighbor: tuple
    stream_index: int
    stages: list = field(default_factory=list)  # A_0..A_stage within x's class

    def to_json(self):
        return {"x": list(self.x), "color": self.color, "stage": self.stage, "neighbor": list(self.neighbor),
                "stream_index": self.stream_index}


def smooth_domatic_query(cs: ClassSpace, x, i: int, stage_budget: int) -> SmoothWitness:
    """A neighbor of x lying in ``A_n ⊆ D_i`` for the first ``n > ν(x)`` with ``pi(n) = i``.

    Stages inside x's class: ``A_0 = ν⁻¹{0}``; ``A_{n+1} = f[E_n] ∪ (ν⁻¹{n+1} ∖ E_n)``
    with ``E_n = A_0 ∪ … ∪ A_n`` and ``f(y)`` the first neighbor of y outside ``E_n``.
    """
    x = tuple(x)
    c = x[0]
    target = cs.nu(x) + 1
    while pi(target) != i:
        target += 1
    if target > stage_budget:
        raise StageBudgetExceeded(f"color {i} at {x} needs stage {target} > budget {stage_budget}",
                                  {"needed_stage": target, "budget": stage_budget})
    stages = [{(c, 0)}]
    seen = {(c, 0)}
    choice = {}
    for n in range(target):
        image = set()
        for y in sorted(seen):
            for idx in range(cs.scan_limit):
                z = cs.neighbor(y, idx)
                if z not in seen:
                    break
            else:
                raise StreamError(f"stream of {y} has no vertex outside E_{n} within {cs.scan_limit} entries")
            image.add(z)
            if y == x and n == target - 1:
                choice = {"neighbor": z, "index": idx}
        fresh = image | ({(c, n + 1)} - seen)
        stages.append(fresh)
        seen |= fresh
    if x not in set().union(*stages[:target]):
        raise AssertionError("x not covered by the stages below its witness")
    y = choice["neighbor"]
    if cs.neighbor(x, choice["index"]) != y or y not in stages[target]:
        raise AssertionError("witness check failed")
    return SmoothWitness(x, i, target, y, choice["index"], stages)


# ---------------------------------------------------------------- inverse-function graphs

class FiberTooSmall(ValueError):
    pass


def fiber_rank_coloring(fun: Callable, fiber: Callable, k: int, x) -> Optional[int]:
    """Rank of x within the enumeration of ``fun⁻¹{fun(x)}``; None when the rank is ≥ k."""
    members = list(fiber(fun(x)))
    if len(members) < k:
        raise FiberTooSmall(f"fiber of {fun(x)!r} has {len(members)} < {k} elements")
    try:
        d = members.index(x)
    except ValueError:
        raise ValueError(f"{x!r} is missing from the enumeration of its own fiber") from None
    return d if d < k else None


def fiber_rank_witnesses(fun: Callable, fiber: Callable, k: int, y) -> list:
    """For each i < k a neighbor of y in the inverse-function graph carrying color i."""
    members = list(fiber(y))
    if len(members) < k:
        raise FiberTooSmall(f"fiber of {y!r} has {len(members)} < {k} elements")
    out = []
    for i in range(k):
        z = members[i]
        if fun(z) != y or fiber_rank_coloring(fun, fiber, k, z) != i:
            raise AssertionError("fiber enumeration inconsistent with fun")
        out.append(z)
    return out


# ---------------------------------------------------------------- edge grabbing

def materialize_edges(lg: LazyGraph, T: int) -> list:
    """First T undirected edges ``(layer, u, v)``, u < v, in stream order.

    Layer i contributes ``{v, neighbor(v, i)}`` for each v; a pair listed from
    both ends in the same layer is one edge.
    """
    edges, layer = [], 0
    idle = 0
    while len(edges) < T:
        seen = set()
        added = 0
        for v in range(lg.vertex_count):
            y = lg.neighbor(v, layer)
            if not 0 <= y < lg.vertex_count:
                raise StreamError(f"stream of {v} leaves the carrier at index {layer}")
            if y == v:
                raise StreamError(f"stream of {v} has a self-loop at index {layer}")
            key = (min(v, y), max(v, y))
            if key in seen:
                continue
            seen.add(key)
            edges.append((layer, key[0], key[1]))
            added += 1
            if len(edges) == T:
                break
        idle = idle + 1 if added == 0 else 0
        if idle > lg.vertex_count:
            raise StreamError("streams stopped producing edges")
        layer += 1
    return edges


def greedy_edge_coloring(vertex_count: int, edges: Sequence) -> list:
    """First color unused at both endpoints, edges in the given order."""
    used = [set() for _ in range(vertex_count)]
    out = []
    for _, u, v in edges:
        c = 0
        while c in used[u] or c in used[v]:
            c += 1
        used[u].add(c)
        used[v].add(c)
        out.append(c)
    return out


def greedy_mis(vertex_count: int, adj: Sequence[set]) -> set:
    chosen = set()
    for v in range(vertex_count):
        if not adj[v] & chosen:
            chosen.add(v)
    return chosen


def a_bound(k: int) -> Fraction:
    return 1 - Fraction(k + 1, 2**k)


@dataclass
class Orientation:
    edges: list          # (layer, u, v)
    colors: list         # proper edge color per edge
    eta: list            # chosen endpoint per edge, None outside the built stages
    stage_of_edge: list  # block index i of each edge, None if beyond the last block
    n: list              # n_0 < n_1 < ...
    M: list
    B0: list
    C: list
    vertex_count: int

    @property
    def stage_count(self) -> int:
        return len(self.C)

    def out_edges(self, x: int) -> list:
        return [e for e, h in enumerate(self.eta) if h == x]

    def symmetric(self) -> bool:
        return all(h is None or h in (self.edges[e][1], self.edges[e][2]) for e, h in enumerate(self.eta))

    def E(self, i: int, m: int) -> set:
        out = set()
        for n in range(i, m):
            out |= self.C[n] & self.M[n]
        return out

    def ledger(self) -> dict:
        return {"n": self.n, "M": [sorted(m) for m in self.M], "B0": [sorted(b) for b in self.B0],
                "C": [sorted(c) for c in self.C]}


@dataclass
class GrabReport:
    fiber: int
    m: list
    measures: list
    bounds: list
    chain_ok: list
    ok: bool

    def to_json(self):
        return {"fiber": self.fiber, "m": self.m, "measures": [str(x) for x in self.measures],
                "bounds": [str(x) for x in self.bounds], "chain_ok": self.chain_ok, "ok": self.ok}


def _blocks(lg, edges, colors, select_next):
    A = {}
    for (_, u, v), c in zip(edges, colors):
        A.setdefault(c, set()).update((u, v))
    top = max(colors, default=-1) + 1
    ns = [0]
    while True:
        nxt = select_next(len(ns) - 1, ns[-1], A, top)
        if nxt is None:
            break
        ns.append(nxt)
    return A, ns


def _orient(lg, edges, colors, ns, A, choose_c):
    n_stages = len(ns) - 1
    stage_of_color = {}
    for i in range(n_stages):
        for c in range(ns[i], ns[i + 1]):
            stage_of_color[c] = i
    M, B0, C = [], [], []
    for i in range(n_stages):
        m = set()
        for c in range(ns[i], ns[i + 1]):
            m |= A.get(c, set())
        adj = [set() for _ in range(lg.vertex_count)]
        for (_, u, v), c in zip(edges, colors):
            if stage_of_color.get(c) == i:
                adj[u].add(v)
                adj[v].add(u)
        b0 = greedy_mis(lg.vertex_count, adj)
        M.append(m)
        B0.append(b0)
        C.append(choose_c(i, m, b0, M, C))
    eta, stage = [], []
    for (_, u, v), c in zip(edges, colors):
        i = stage_of_color.get(c)
        stage.append(i)
        if i is None:
            eta.append(None)
            continue
        inside = (u in C[i], v in C[i])
        eta.append(u if inside == (True, False) else v if inside == (False, True) else min(u, v))
    return Orientation(list(edges), list(colors), eta, stage, ns, M, B0, C, lg.vertex_count)


def edge_grab(lg: LazyGraph, T: int, k_report: int, fiber: int = 0):
    """Orientation from T materialized edges plus the measure report for one p-fiber.

    Returns ``(orientation, report)``; the report lists ``μ(E_{m_k})`` against
    ``a_k = 1 − (k+1)/2^k`` for ``k ≤ k_report``.
    """
    edges = materialize_edges(lg, T)
    colors = greedy_edge_coloring(lg.vertex_count, edges)

    def sigma(i, m, A, top):
        eps = Fraction(1, 2 ** (i + 1))
        cover = set()
        for s in range(m, top):
            cover |= A.get(s, set())
            if lg.mass(cover) > 1 - eps:
                return s + 1
        return None

    A, ns = _blocks(lg, edges, colors, sigma)

    def choose(i, m, b0, M, C):
        covered = set()
        for n in range(pi(i), i):
            covered |= C[n] & M[n]
        d = set(range(lg.vertex_count)) - covered
        b1 = set(range(lg.vertex_count)) - b0
        return b0 if 2 * lg.mass(b0 & d) >= lg.mass(d) else b1

    o = _orient(lg, edges, colors, ns, A, choose)
    ms = fiber_of_pi(fiber, k_report + 1)
    if ms[-1] > o.stage_count:
        raise StageBudgetExceeded(
            f"report up to k={k_report} needs {ms[-1]} stages; {T} edges give {o.stage_count}",
            {"stages": o.stage_count, "needed": ms[-1]})
    measures = [lg.mass(o.E(fiber, m)) for m in ms]
    bounds = [a_bound(k) for k in range(k_report + 1)]
    chain = [measures[k + 1] >= Fraction(1, 2) * (1 + measures[k] - Fraction(1, 2**k)) for k in range(k_report)]
    ok = all(mu >= a for mu, a in zip(measures, bounds)) and all(chain)
    return o, GrabReport(fiber, ms, measures, bounds, chain, ok)


class NotGrabbed(ValueError):
    def __init__(self, x, have, k, failing_weight):
        super().__init__(f"vertex {x} has {have} < {k} out-oriented edges; "
                         f"vertices short of {k} carry weight {failing_weight}")
        self.failing_weight = failing_weight


def edge_rank_colors(o: Orientation) -> list:
    """Color each oriented edge by its rank among the out-edges of its head."""
    rank = {}
    out = []
    for h in o.eta:
        if h is None:
            out.append(None)
            continue
        out.append(rank.get(h, 0))
        rank[h] = rank.get(h, 0) + 1
    return out


def edge_domatic_from_orientation(o: Orientation, lg: LazyGraph, k: int, x: int) -> list:
    """Edges ``e_0, …, e_{k-1}`` incident to x with ``e_i`` of rank-color i."""
    mine = o.out_edges(x)
    if len(mine) < k:
        short = [v for v in range(o.vertex_count) if len(o.out_edges(v)) < k]
        raise NotGrabbed(x, len(mine), k, lg.mass(short))
    colors = edge_rank_colors(o)
    picks = mine[:k]
    assert [colors[e] for e in picks] == list(range(k))
    return [o.edges[e] for e in picks]


@dataclass
class MultiweightReport:
    masses: list     # masses[j][i] = w_j(⋃_{i ≤ n < stages} C_n ∩ M_n), None where truncation leaves it uncertified
    positive: list   # positive[j]: every certified entry is > 0 (and there is at least one)
    analog: str = "finite multi-weight analog of relative non-meagerness"

    def to_json(self):
        return {"masses": [[None if x is None else str(x) for x in row] for row in self.masses],
                "positive": self.positive, "analog": self.analog}


def edge_grab_multiweight(lg: LazyGraph, weights: Sequence, T: int, fibers: Optional[int] = None):
    """Stages where each M_i has positive mass under ``w_0 … w_i`` (indices mod the list)."""
    ws = [_check_weights(w, lg.vertex_count) for w in weights]
    if not ws:
        raise ValueError("need at least one weight")
    W = len(ws)
    edges = materialize_edges(lg, T)
    colors = greedy_edge_coloring(lg.vertex_count, edges)

    def tau(m, k, A, top):
        cover = set()
        for s in range(m, top):
            cover |= A.get(s, set())
            if lg.mass(cover, ws[k % W]) > 0:
                return s + 1
        return None

    def select(i, m, A, top):
        n = m
        for k in range(i + 1):
            n = tau(n, k, A, top)
            if n is None:
                return None
        return n

    A, ns = _blocks(lg, edges, colors, select)

    def choose(i, m, b0, M, C):
        w = ws[pairing_decode(i)[1] % W]  # i is the k-th element of its pi-fiber, k = second coordinate
        return b0 if lg.mass(b0 & m, w) > 0 else set(range(lg.vertex_count)) - b0

    o = _orient(lg, edges, colors, ns, A, choose)
    top = o.stage_count if fibers is None else min(fibers, o.stage_count)
    masses = []
    for j, w in enumerate(ws):
        row = []
        for i in range(top):
            # fiber i certifies weight j once the j-th element of its pi-fiber is a built stage
            m_j = fiber_of_pi(i, j + 1)[-1]
            row.append(lg.mass(o.E(i, o.stage_count), w) if m_j < o.stage_count else None)
        masses.append(row)
    positive = [any(x is not None for x in row) and all(x is None or x > 0 for x in row) for row in masses]
    return o, MultiweightReport(masses, positive)
