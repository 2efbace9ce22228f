"""Finite-palette domatic colorings: random pieces, local-lemma resampling, path decompositions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .graph import Coloring, Graph, GraphError
from .measurable import LazyGraph
from .resample import DEFAULT_BUDGET, ColorStream, run_explicit


def e_bounds(terms: int = 30) -> tuple:
    """Rational ``lo < e < hi`` from the first ``terms`` factorial series terms."""
    lo, fact = Fraction(0), 1
    for j in range(terms):
        if j:
            fact *= j
        lo += Fraction(1, fact)
    # tail Σ_{j≥m} 1/j! < 2/m! for m ≥ 1
    return lo, lo + Fraction(2, fact * terms)


# ---------------------------------------------------------------- approximate domaticity

def approx_pieces_count(k: int, eps) -> int:
    """Least N with ``k(1 − 1/k)^N < ε/3``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    e = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    if not 0 < e:
        raise ValueError("epsilon must be positive")
    q = 1 - Fraction(1, k)
    n = 0
    while k * q**n >= e / 3:
        n += 1
    return n


@dataclass
class ApproxReport:
    k: int
    eps: Fraction
    N: int
    attempts: int
    fraction: Fraction
    seed: int
    accepted: bool

    def to_json(self) -> dict:
        return {"format": "domatic.approx_report/1", "k": self.k, "eps": str(self.eps), "N": self.N,
                "attempts": self.attempts, "fraction": str(self.fraction),
                "fraction_float": float(self.fraction), "seed": self.seed, "accepted": self.accepted}


def _first_neighbors(g, n: int) -> np.ndarray:
    """V×n table of the first n distinct enumerated neighbors (the subgraph H)."""
    if isinstance(g, Graph):
        deg = g.out_degree
        short = np.flatnonzero(deg < n)
        if short.size:
            raise GraphError(f"vertex {int(short[0])} has {int(deg[short[0]])} neighbors, fewer than N={n}")
        return np.stack([g.indices[g.indptr[v]:g.indptr[v] + n] for v in range(g.vertex_count)]) \
            if g.vertex_count else np.zeros((0, n), dtype=np.int32)
    table = np.zeros((g.vertex_count, n), dtype=np.int64)
    cap = 64 * n + 64
    for v in range(g.vertex_count):
        got, seen, i = 0, set(), 0
        while got < n:
            if i >= cap:
                raise GraphError(f"vertex {v}: stream gave only {got} distinct neighbors in {cap} entries (need {n})")
            u = g.neighbor(v, i)
            i += 1
            if u not in seen:
                seen.add(u)
                table[v, got] = u
                got += 1
    return table


def _weights_of(g, weights):
    n = g.vertex_count
    if weights is not None:
        w = tuple(Fraction(x) for x in weights)
    elif isinstance(g, LazyGraph):
        w = g.weights
    else:
        w = (Fraction(1, n),) * n
    if len(w) != n or any(x < 0 for x in w) or sum(w) != 1:
        raise ValueError("weights must be a probability vector over the vertices")
    return w


def approx_domatic(g, k: int, eps, seed: int, max_attempts: int = 10, weights=None):
    """Random coloring on singleton pieces, k-domatic on mass ≥ 1 − ε of the vertices.

    Every vertex keeps its first N enumerated neighbors. Colors are drawn from one
    seeded stream, so a retry continues the stream rather than reseeding.
    Returns ``(coloring, report)``; when no attempt reaches 1 − ε the best one
    is returned with ``report.accepted`` False.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    e = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    n_pick = approx_pieces_count(k, e)
    w = _weights_of(g, weights)
    table = _first_neighbors(g, n_pick)
    V = g.vertex_count
    uniform = len(set(w)) <= 1
    stream = ColorStream(seed, k)
    best, best_frac, attempts = None, Fraction(-1), 0
    for attempts in range(1, max_attempts + 1):
        colors = stream.take(V)
        seen = colors[table]
        good = np.ones(V, dtype=bool)
        for c in range(k):
            good &= (seen == c).any(axis=1)
        if uniform:
            frac = Fraction(int(good.sum()), V) if V else Fraction(1)
        else:
            frac = sum((w[v] for v in np.flatnonzero(good).tolist()), Fraction(0))
        if frac > best_frac:
            best, best_frac = colors, frac
        if frac >= 1 - e:
            break
    accepted = best_frac >= 1 - e
    return Coloring(best, k), ApproxReport(k, e, n_pick, attempts, best_frac, seed, accepted)


# ---------------------------------------------------------------- local lemma thresholds

def _mt_holds(p: Fraction, d: int, terms: int) -> Optional[bool]:
    lo, hi = e_bounds(terms)
    if hi * p * (d + 1) < 1:
        return True
    if lo * p * (d + 1) >= 1:
        return False
    return None


def lll_threshold(k: int, c: int, flavor: str = "moser_tardos", terms: int = 30) -> int:
    """Least n with ``k(1−1/k)^n (cn²+1)^8 ≤ 2^-15`` (strong) or ``p(cn²+1) < 1/e`` (moser_tardos).

    Everything is exact rational arithmetic; e is bracketed by series bounds and
    the bracket is refined whenever it cannot decide an n.
    """
    if k < 2 or c < 1:
        raise ValueError("need k ≥ 2 and c ≥ 1")
    if flavor not in ("strong", "moser_tardos"):
        raise ValueError(f"unknown flavor {flavor!r}")
    q = 1 - Fraction(1, k)
    n = 1
    while True:
        p = k * q**n
        d = c * n * n
        if flavor == "strong":
            if p * (d + 1) ** 8 <= Fraction(1, 2**15):
                return n
        else:
            t = terms
            verdict = _mt_holds(p, d, t)
            while verdict is None:
                t *= 2
                verdict = _mt_holds(p, d, t)
            if verdict:
                return n
        n += 1


# ---------------------------------------------------------------- Moser–Tardos

class ResampledColoring(Coloring):
    """Coloring carrying the number of resampling steps that produced it."""

    __slots__ = ("resamples",)

    def __init__(self, colors, k, resamples: int):
        super().__init__(colors, k)
        self.resamples = resamples


def _regular_degree(g: Graph, c: int, what: str = "graph") -> int:
    deg = g.out_degree
    if g.vertex_count == 0:
        raise GraphError(f"{what} has no vertices")
    n = int(deg[0])
    if (deg != n).any():
        v = int(np.flatnonzero(deg != n)[0])
        raise GraphError(f"{what} is not regular: vertex {v} has out-degree {int(deg[v])}, vertex 0 has {n}")
    indeg = g.in_degree
    if (indeg > c * n).any():
        v = int(np.flatnonzero(indeg > c * n)[0])
        raise GraphError(f"{what}: vertex {v} has in-degree {int(indeg[v])} > c·n = {c * n}")
    return n


def moser_tardos_domatic(g: Graph, k: int, seed: int, c: int = 1, budget: int = DEFAULT_BUDGET) -> ResampledColoring:
    """Resample the least violated neighborhood until every N(x) sees all k colors."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        deg = g.out_degree
        if (deg < 1).any():
            raise GraphError(f"vertex {int(np.flatnonzero(deg < 1)[0])} has no out-neighbors")
        return ResampledColoring(np.zeros(g.vertex_count, dtype=np.int64), 1, 0)
    n = _regular_degree(g, c)
    need = lll_threshold(k, c, "moser_tardos")
    if n < need:
        raise GraphError(f"degree {n} is below the local lemma threshold {need} for k={k}, c={c}")
    res = run_explicit(g.indptr, g.indices, g.vertex_count, k, seed, budget)
    return ResampledColoring(res.colors, k, res.resamples)


def union_dependency_degree(graphs: Sequence[Graph]) -> int:
    """Max number of other events (graph, vertex) whose neighborhoods share a vertex with a given one."""
    V = graphs[0].vertex_count
    domains = [set(g.neighbors(x).tolist()) for g in graphs for x in range(V)]
    by_var = [[] for _ in range(V)]
    for e, dom in enumerate(domains):
        for u in dom:
            by_var[u].append(e)
    best = 0
    for e, dom in enumerate(domains):
        touching = set()
        for u in dom:
            touching.update(by_var[u])
        touching.discard(e)
        best = max(best, len(touching))
    return best


@dataclass
class SimultaneousCheck:
    degrees: list
    dependency: int
    p: Fraction
    holds: bool


def simultaneous_conditions(graphs: Sequence[Graph], k: int, c: int = 1) -> SimultaneousCheck:
    degrees = [_regular_degree(g, c, f"graph {i}") for i, g in enumerate(graphs)]
    p = max(k * (1 - Fraction(1, k)) ** n for n in degrees)
    d = union_dependency_degree(graphs)
    lo, hi = e_bounds(30)
    return SimultaneousCheck(degrees, d, p, hi * p * (d + 1) < 1)


def simultaneous_domatic(graphs: Sequence[Graph], k: int, seed: int, c: int = 1,
                         budget: int = DEFAULT_BUDGET, strict: bool = True) -> ResampledColoring:
    """One coloring domatic for every graph; events are (graph, vertex) pairs in graph-major order.

    With ``strict`` the local lemma condition is checked against the dependency
    degree of the union; otherwise only per-graph regularity is validated and
    termination is left to the budget.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    V = graphs[0].vertex_count
    if any(g.vertex_count != V for g in graphs):
        raise GraphError("graphs must share one vertex set")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return _constant(graphs, k)
    check = simultaneous_conditions(graphs, k, c)
    if strict and not check.holds:
        raise GraphError(f"local lemma condition fails on the union: p={check.p}, dependency degree {check.dependency}")
    indptr, indices = _stack(graphs)
    res = run_explicit(indptr, indices, V, k, seed, budget)
    return ResampledColoring(res.colors, k, res.resamples)


def _stack(graphs):
    indptr = [np.zeros(1, dtype=np.int64)]
    off = 0
    for g in graphs:
        indptr.append(g.indptr[1:] + off)
        off += int(g.indptr[-1])
    return np.concatenate(indptr), np.concatenate([g.indices for g in graphs])


def _constant(graphs, k):
    for g in graphs:
        if (g.out_degree < 1).any():
            raise GraphError("a vertex has no out-neighbors")
    return ResampledColoring(np.zeros(graphs[0].vertex_count, dtype=np.int64), k, 0)


def random_regular_digraph(vertex_count: int, degree: int, seed: int) -> Graph:
    """Union of ``degree`` fixed-point-free permutations with no repeated edge (in = out = degree)."""
    if vertex_count <= 2 * degree + 1:
        raise ValueError("too few vertices for this degree")
    rng = np.random.default_rng(seed)
    adj = [set() for _ in range(vertex_count)]
    for _ in range(degree):
        p = rng.permutation(vertex_count)
        for x in range(vertex_count):
            while p[x] == x or p[x] in adj[x]:
                y = int(rng.integers(vertex_count))
                if p[y] != x and p[y] not in adj[x] and p[x] != y and p[x] not in adj[y]:
                    p[x], p[y] = p[y], p[x]
        for x in range(vertex_count):
            adj[x].add(int(p[x]))
    return Graph(vertex_count, [sorted(a) for a in adj])


def circulant(m: int, generators: Sequence[int]) -> Graph:
    """Schreier graph of ℤ/m with marked set ``generators``: x → x + s."""
    gens = sorted({s % m for s in generators})
    if 0 in gens:
        raise ValueError("generator 0 gives a self-loop")
    return Graph(m, [[(x + s) % m for s in gens] for x in range(m)])


def circulant_pair(m1: int = 25, m2: int = 27, n: int = 12) -> list:
    """Two commuting circulants on ℤ/(m1·m2): steps a·m2 and a·m1 for a = 1..n."""
    m = m1 * m2
    return [circulant(m, [a * m2 for a in range(1, n + 1)]), circulant(m, [a * m1 for a in range(1, n + 1)])]


# ---------------------------------------------------------------- path decompositions

MIN_PATH, MAX_PATH = 6, 12


@dataclass
class PathDecomposition:
    """Paths colored in the listed order, plus colors fixed before the first path.

    Interior vertices of a path must be new; endpoints may be new or already
    colored (by the context or an earlier path).
    """

    paths: list
    context: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"format": "domatic.paths/1", "paths": [list(p) for p in self.paths],
                "context": {str(v): c for v, c in sorted(self.context.items())}}

    @classmethod
    def from_json(cls, data: dict) -> "PathDecomposition":
        return cls([[int(v) for v in p] for p in data["paths"]],
                   {int(v): int(c) for v, c in data.get("context", {}).items()})


def validate_decomposition(host: Graph, decomp: PathDecomposition, k: int) -> None:
    if k < 2:
        raise GraphError("path coloring needs k ≥ 2")
    for v, c in decomp.context.items():
        if not 0 <= v < host.vertex_count:
            raise GraphError(f"context vertex {v} out of range")
        if not 0 <= c < k:
            raise GraphError(f"context color {c} at vertex {v} is outside range({k})")
    covered = set(decomp.context)
    deg = host.out_degree
    for i, p in enumerate(decomp.paths):
        length = len(p) - 1
        if not MIN_PATH <= length <= MAX_PATH:
            raise GraphError(f"path {i} has length {length}, outside [{MIN_PATH}, {MAX_PATH}]")
        if len(set(p)) != len(p):
            raise GraphError(f"path {i} repeats a vertex")
        for pos, v in enumerate(p):
            if not 0 <= v < host.vertex_count:
                raise GraphError(f"path {i}: vertex {v} out of range")
            if 0 < pos < length and v in covered:
                raise GraphError(f"path {i}: interior vertex {v} is already covered")
            if (host.neighbors(v) == v).any():
                raise GraphError(f"path {i}: self-loop at vertex {v}")
            if deg[v] < k + 1:
                raise GraphError(f"path {i}: vertex {v} has degree {int(deg[v])} < k+1 = {k + 1}")
        for a, b in zip(p, p[1:]):
            if not (host.neighbors(a) == b).any():
                raise GraphError(f"path {i}: {a} and {b} are not adjacent")
        covered.update(p)


def _missing(host: Graph, colors: np.ndarray, v: int, k: int) -> list:
    present = {int(c) for c in colors[host.neighbors(v)] if c >= 0}
    return [c for c in range(k) if c not in present]


def path_constraints(host: Graph, colors: np.ndarray, path: Sequence[int], k: int) -> tuple:
    """Allowed colors for the two endpoint-adjacent vertices (None when unconstrained)."""
    first = _missing(host, colors, path[0], k)
    last = _missing(host, colors, path[-1], k)
    return (set(first) if first else None), (set(last) if last else None)


def path_rules_hold(col: Sequence[int], allowed_first, allowed_last) -> bool:
    L = len(col) - 1
    if allowed_first is not None and col[1] not in allowed_first:
        return False
    if allowed_last is not None and col[L - 1] not in allowed_last:
        return False
    for i in range(1, L):
        nbrs = [j for j in (i - 1, i + 1) if 1 <= j <= L - 1]
        if all(col[j] == col[i] for j in nbrs):
            return False
    return True


def _least_interior(L: int, k: int, allowed_first, allowed_last) -> list:
    """Lexicographically least colors for positions 1..L-1 (endpoints enter no rule)."""
    col = [0] * (L + 1)

    def ok_at(i):
        # check every rule whose inputs are complete once position i is set
        if i == 1 and allowed_first is not None and col[1] not in allowed_first:
            return False
        if i == L - 1 and allowed_last is not None and col[L - 1] not in allowed_last:
            return False
        j = i - 1
        if j >= 1 and col[j] == col[i] and (j == 1 or col[j] == col[j - 1]):
            return False
        if i == L - 1 and col[L - 1] == col[L - 2]:
            return False
        return True

    def go(i):
        if i == L:
            return True
        for c in range(k):
            col[i] = c
            if ok_at(i) and go(i + 1):
                return True
        return False

    if not go(1):
        raise AssertionError("no path coloring satisfies the rules")
    return col[1:L]


def path_coloring(host: Graph, decomp: PathDecomposition, k: int) -> Coloring:
    """Color each path, in order, by the lexicographically least coloring meeting both rules.

    The endpoint rule asks the neighbor of an endpoint v to take a color still
    missing around v (when there is one); the interior rule asks every interior
    vertex to differ from some interior neighbor on the path. Endpoints that
    are already colored keep their color; new endpoints take color 0.
    """
    validate_decomposition(host, decomp, k)
    colors = np.full(host.vertex_count, -1, dtype=np.int64)
    for v, c in decomp.context.items():
        colors[v] = c
    for p in decomp.paths:
        a, b = path_constraints(host, colors, p, k)
        for v, c in zip(p[1:-1], _least_interior(len(p) - 1, k, a, b)):
            colors[v] = c
        for v in (p[0], p[-1]):
            if colors[v] < 0:
                colors[v] = 0
    return Coloring(colors, k)


def covered_region(host: Graph, decomp: PathDecomposition) -> list:
    """Path vertices all of whose host edges run along some path.

    These are the vertices the stage argument speaks about; a vertex with an
    edge outside the decomposition has neighbors the rules never see.
    """
    on_path = set()
    for p in decomp.paths:
        for a, b in zip(p, p[1:]):
            on_path.add((a, b))
            on_path.add((b, a))
    verts = sorted({v for p in decomp.paths for v in p})
    return [v for v in verts if all((v, int(u)) in on_path for u in host.neighbors(v))]


def random_decomposition(seed: int, k: int = 2, n_paths: int = 40, attach: float = 0.7):
    """Host graph grown path by path, padded with precolored leaves up to degree k+1.

    Each new path has fresh interior vertices and joins one or two earlier
    vertices. Returns ``(host, decomposition)``.
    """
    rng = np.random.default_rng(seed)
    L = int(rng.integers(MIN_PATH, MAX_PATH + 1))
    paths, nxt = [list(range(L + 1))], L + 1
    covered = list(range(L + 1))
    for _ in range(n_paths):
        a = covered[int(rng.integers(len(covered)))]
        if rng.random() < attach:
            b = a
            while b == a:
                b = covered[int(rng.integers(len(covered)))]
        else:
            b = None
        L = int(rng.integers(MIN_PATH, MAX_PATH + 1))
        inner = list(range(nxt, nxt + L - 1))
        nxt += L - 1
        covered.extend(inner)
        if b is None:
            b, nxt = nxt, nxt + 1
            covered.append(b)
        paths.append([a] + inner + [b])
    adj = {}
    for p in paths:
        for x, y in zip(p, p[1:]):
            adj.setdefault(x, set()).add(y)
            adj.setdefault(y, set()).add(x)
    context = {}
    for v in sorted(adj):
        while len(adj[v]) < k + 1:
            adj[v].add(nxt)
            adj[nxt] = {v}
            context[nxt] = int(rng.integers(k))
            nxt += 1
    host = Graph(nxt, [sorted(adj.get(v, ())) for v in range(nxt)])
    return host, PathDecomposition(paths, context)
