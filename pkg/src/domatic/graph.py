"""Finite directed graphs, partial colorings, and domatic verification/solvers.

Neighborhoods are out-neighborhoods throughout: a coloring is k-domatic at x
when every color ``< k`` appears on some vertex of ``N(x)``. Undirected graphs
are symmetric digraphs, and self-loops are allowed.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _backend

DEFAULT_SEARCH_BUDGET = 10**8


class GraphError(ValueError):
    """Structurally invalid graph or coloring."""


class SearchBudgetExceeded(RuntimeError):
    def __init__(self, budget):
        super().__init__(f"branch-and-bound exceeded {budget} node expansions")
        self.budget = budget


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


class Graph:
    """Immutable digraph in CSR form; ``neighbors(v)`` keeps the given order."""

    __slots__ = ("vertex_count", "indptr", "indices", "_in_degree")

    def __init__(self, vertex_count: int, out_neighbors: Sequence[Iterable[int]]):
        if vertex_count < 0:
            raise GraphError("vertex count must be non-negative")
        if len(out_neighbors) != vertex_count:
            raise GraphError(f"expected {vertex_count} neighbor lists, got {len(out_neighbors)}")
        lists = [list(map(int, nb)) for nb in out_neighbors]
        indptr = np.zeros(vertex_count + 1, dtype=np.int64)
        np.cumsum([len(nb) for nb in lists], out=indptr[1:])
        flat = [v for nb in lists for v in nb]
        self._init(vertex_count, indptr, np.array(flat, dtype=np.int64))

    def _init(self, n, indptr, indices):
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            bad = int(np.flatnonzero((indices < 0) | (indices >= n))[0])
            owner = int(np.searchsorted(indptr, bad, side="right") - 1)
            raise GraphError(f"vertex {owner} lists neighbor {int(indices[bad])} outside range({n})")
        deg = np.diff(indptr)
        if indices.size:
            owner = np.repeat(np.arange(n, dtype=np.int64), deg)
            keys = owner * max(n, 1) + indices
            uniq, counts = np.unique(keys, return_counts=True)
            if (counts > 1).any():
                dup = int(uniq[counts > 1][0])
                raise GraphError(f"vertex {dup // n} lists neighbor {dup % n} more than once")
        self.vertex_count = int(n)
        self.indptr = _frozen(indptr, np.int64)
        self.indices = _frozen(indices, np.int32)
        self._in_degree = None

    @classmethod
    def from_csr(cls, indptr, indices) -> "Graph":
        g = cls.__new__(cls)
        indptr = np.asarray(indptr, dtype=np.int64)
        g._init(indptr.shape[0] - 1, indptr, np.asarray(indices, dtype=np.int64))
        return g

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Sequence[int]]) -> "Graph":
        lists = [[] for _ in range(vertex_count)]
        for e in edges:
            u, v = e
            if not 0 <= u < vertex_count:
                raise GraphError(f"edge source {u} outside range({vertex_count})")
            lists[u].append(v)
        return cls(vertex_count, lists)

    @classmethod
    def from_json(cls, data: dict) -> "Graph":
        try:
            n = int(data["vertices"])
            edges = data["edges"]
        except (KeyError, TypeError):
            raise GraphError("graph JSON needs 'vertices' and 'edges'") from None
        return cls.from_edges(n, edges)

    def to_json(self) -> dict:
        return {"format": "domatic.graph/1", "vertices": self.vertex_count, "edges": self.edges()}

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> list:
        return [[u, int(v)] for u in range(self.vertex_count) for v in self.neighbors(u)]

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def in_degree(self) -> np.ndarray:
        if self._in_degree is None:
            d = np.bincount(self.indices, minlength=self.vertex_count).astype(np.int64)
            d.flags.writeable = False
            self._in_degree = d
        return self._in_degree

    def adjacency_lists(self) -> list:
        return [self.neighbors(v).tolist() for v in range(self.vertex_count)]

    def is_subgraph_of(self, other: "Graph") -> bool:
        if self.vertex_count != other.vertex_count:
            return False
        return all(set(self.neighbors(v).tolist()) <= set(other.neighbors(v).tolist())
                   for v in range(self.vertex_count))

    def union(self, other: "Graph") -> "Graph":
        if self.vertex_count != other.vertex_count:
            raise GraphError("graphs live on different vertex sets")
        lists = []
        for v in range(self.vertex_count):
            a = self.neighbors(v).tolist()
            seen = set(a)
            lists.append(a + [u for u in other.neighbors(v).tolist() if u not in seen])
        return Graph(self.vertex_count, lists)

    def in_neighbor_csr(self):
        order = np.argsort(self.indices, kind="stable")
        owner = np.repeat(np.arange(self.vertex_count, dtype=np.int32), self.out_degree)
        ptr = np.zeros(self.vertex_count + 1, dtype=np.int64)
        np.cumsum(self.in_degree, out=ptr[1:])
        return ptr, owner[order]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.vertex_count == other.vertex_count
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.vertex_count, self.indices.tobytes()))

    def __repr__(self):
        return f"Graph(vertices={self.vertex_count}, edges={self.indices.shape[0]})"


class Coloring:
    """Partial coloring; ``colors[v] == -1`` means unassigned, ``k=None`` means unbounded."""

    __slots__ = ("colors", "k")

    def __init__(self, colors, k: Optional[int] = None):
        arr = np.array([-1 if c is None else c for c in colors] if not isinstance(colors, np.ndarray) else colors,
                       dtype=np.int64)
        if arr.ndim != 1:
            raise GraphError("colors must be a flat sequence")
        if (arr < -1).any():
            raise GraphError("colors must be non-negative (or unassigned)")
        if k is not None:
            if k < 0:
                raise GraphError("color bound must be non-negative")
            if (arr >= k).any():
                v = int(np.flatnonzero(arr >= k)[0])
                raise GraphError(f"vertex {v} has color {int(arr[v])} >= bound {k}")
        self.colors = _frozen(arr, np.int32)
        self.k = k

    @classmethod
    def from_json(cls, data: dict) -> "Coloring":
        try:
            colors = data["colors"]
        except (KeyError, TypeError):
            raise GraphError("coloring JSON needs a 'colors' list") from None
        k = data.get("k")
        return cls(colors, None if k in (None, "unbounded") else int(k))

    def to_json(self) -> dict:
        return {
            "format": "domatic.coloring/1",
            "colors": [None if c < 0 else int(c) for c in self.colors],
            "k": "unbounded" if self.k is None else self.k,
        }

    def __len__(self):
        return self.colors.shape[0]

    def __getitem__(self, v):
        c = int(self.colors[v])
        return None if c < 0 else c

    def __eq__(self, other):
        if not isinstance(other, Coloring):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.colors, other.colors)

    def __repr__(self):
        return f"Coloring(n={len(self)}, k={self.k})"

    def color_classes(self, k: int) -> list:
        return [set(np.flatnonzero(self.colors == c).tolist()) for c in range(k)]


@dataclass
class DomaticReport:
    k: int
    missing: list
    ok: bool = field(init=False)
    counterexample: Optional[int] = field(init=False)

    def __post_init__(self):
        bad = [v for v, m in enumerate(self.missing) if m]
        self.ok = not bad
        self.counterexample = bad[0] if bad else None

    def is_domatic_at(self, v: int) -> bool:
        return not self.missing[v]

    def to_json(self) -> dict:
        out = {"format": "domatic.report/1", "k": self.k, "ok": self.ok,
               "counterexample": self.counterexample}
        if self.counterexample is not None:
            out["missing_at_counterexample"] = self.missing[self.counterexample]
        out["failing_vertices"] = sum(1 for m in self.missing if m)
        return out


def verify_domatic(g: Graph, c: Coloring, k: int) -> DomaticReport:
    """Per-vertex check that every color ``< k`` appears on ``N(x)``."""
    if len(c) != g.vertex_count:
        raise GraphError(f"coloring has {len(c)} entries for {g.vertex_count} vertices")
    if c.k is not None and c.k < k:
        raise GraphError(f"coloring bounded by {c.k} colors cannot be checked for {k}")
    n = g.vertex_count
    if k <= 0:
        return DomaticReport(k, [[] for _ in range(n)])
    ok = _backend.kernels.coverage_mask(g.indptr, g.indices, c.colors, k)
    missing = [[] for _ in range(n)]
    for v in np.flatnonzero(ok == 0).tolist():
        present = set(c.colors[g.neighbors(v)].tolist())
        missing[v] = [i for i in range(k) if i not in present]
    return DomaticReport(k, missing)


def dominating_sets_from(c: Coloring, k: int) -> list:
    return c.color_classes(k)


def is_dominating(g: Graph, d: set) -> bool:
    return all(any(int(u) in d for u in g.neighbors(v)) for v in range(g.vertex_count))


@dataclass
class GreedyFailure:
    vertex: int
    missing: list
    partial: Coloring

    def to_json(self) -> dict:
        return {"format": "domatic.greedy_failure/1", "vertex": self.vertex, "missing": self.missing}


def greedy_domatic(g: Graph, k: int, order: Optional[Sequence[int]] = None):
    """Fill each vertex's missing colors on its first uncolored neighbors.

    Returns a :class:`Coloring` on success or a :class:`GreedyFailure`
    naming the first vertex whose neighborhood could not be completed.
    """
    if k < 1:
        raise ValueError("greedy_domatic needs k >= 1")
    n = g.vertex_count
    order = range(n) if order is None else list(order)
    colors = [-1] * n
    adj = g.adjacency_lists()
    for x in order:
        nb = adj[x]
        present = {colors[y] for y in nb}
        free = (y for y in nb if colors[y] < 0)
        for col in range(k):
            if col in present:
                continue
            y = next(free, None)
            if y is None:
                missing = [i for i in range(k) if i not in {colors[z] for z in nb}]
                return GreedyFailure(x, missing, Coloring(colors, k))
            colors[y] = col
    return Coloring(colors, k)


def _domatic_search(adj, radj, order, k, budget, spent):
    """Search for a k-domatic partial coloring; returns colors or None."""
    n = len(adj)
    colors = [-1] * n
    cnt = [[0] * k for _ in range(n)]
    nmiss = [k] * n
    nfree = [len(a) for a in adj]
    if any(nmiss[v] > nfree[v] for v in range(n)):
        return None

    def assign(y, col):
        ok = True
        for z in radj[y]:
            nfree[z] -= 1
            if cnt[z][col] == 0:
                nmiss[z] -= 1
            cnt[z][col] += 1
            if nmiss[z] > nfree[z]:
                ok = False
        colors[y] = col
        return ok

    def unassign(y, col):
        for z in radj[y]:
            nfree[z] += 1
            cnt[z][col] -= 1
            if cnt[z][col] == 0:
                nmiss[z] += 1
        colors[y] = -1

    def solve(start):
        spent[0] += 1
        if spent[0] > budget:
            raise SearchBudgetExceeded(budget)
        i = start
        while i < n and nmiss[order[i]] == 0:
            i += 1
        if i == n:
            return True
        x = order[i]
        col = next(c for c in range(k) if cnt[x][c] == 0)
        for y in adj[x]:
            if colors[y] >= 0:
                continue
            if assign(y, col) and solve(i):
                return True
            unassign(y, col)
        return False

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n + 1000))
    try:
        return colors if solve(0) else None
    finally:
        sys.setrecursionlimit(limit)


def domatic_upper_bound(g: Graph) -> int:
    """min out-degree, and ⌊V / ⌈V / Δ_in⌉⌋ from the size of any dominating set."""
    n = g.vertex_count
    if n == 0:
        return 0
    bound = int(g.out_degree.min())
    max_in = int(g.in_degree.max())
    if max_in == 0:
        return 0
    min_dom = -(-n // max_in)
    return min(bound, n // min_dom)


def find_domatic_coloring(g: Graph, k: int, budget: int = DEFAULT_SEARCH_BUDGET) -> Optional[Coloring]:
    """Exact search for a k-domatic partial coloring (None if none exists)."""
    if k <= 0:
        return Coloring([-1] * g.vertex_count, max(k, 0))
    adj = g.adjacency_lists()
    radj = [[] for _ in range(g.vertex_count)]
    for v, nb in enumerate(adj):
        for u in nb:
            radj[u].append(v)
    order = sorted(range(g.vertex_count), key=lambda v: (len(adj[v]), v))
    found = _domatic_search(adj, radj, order, k, budget, [0])
    return None if found is None else Coloring(found, k)


def max_domatic_number(g: Graph, budget: int = DEFAULT_SEARCH_BUDGET):
    """Largest k admitting a k-domatic partial coloring, with a witness.

    Candidates are tried from the counting upper bound downwards; each failed
    k is refuted by exhaustive branch-and-bound, so the answer is exact.
    """
    if g.vertex_count < 1:
        raise GraphError("max_domatic_number needs at least one vertex")
    adj = g.adjacency_lists()
    radj = [[] for _ in range(g.vertex_count)]
    for v, nb in enumerate(adj):
        for u in nb:
            radj[u].append(v)
    order = sorted(range(g.vertex_count), key=lambda v: (len(adj[v]), v))
    spent = [0]
    for k in range(domatic_upper_bound(g), 0, -1):
        found = _domatic_search(adj, radj, order, k, budget, spent)
        if found is not None:
            return k, Coloring(found, k)
    return 0, Coloring([-1] * g.vertex_count, 0)
