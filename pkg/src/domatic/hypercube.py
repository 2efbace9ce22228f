"""Hypercube Q_n: n-domatic iff n is a power of two.

For n = 2^m, coloring x by the XOR of the indices of its set bits sends the
n neighbors of x to n distinct colors. Otherwise a counting argument rules
out n disjoint dominating sets.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .graph import Coloring, Graph


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def hypercube_graph(n: int) -> Graph:
    if not 1 <= n <= 20:
        raise ValueError(f"hypercube dimension must be in [1, 20], got {n}")
    size = 1 << n
    x = np.arange(size, dtype=np.int64)[:, None]
    bits = np.int64(1) << np.arange(n, dtype=np.int64)[None, :]
    indices = (x ^ bits).ravel()
    indptr = np.arange(0, size * n + 1, n, dtype=np.int64)
    return Graph.from_csr(indptr, indices)


def power_of_two_domatic(n: int) -> Coloring:
    """Linear coloring ``c(x) = XOR of {i : bit i of x set}``; rainbow on Q_n."""
    if not is_power_of_two(n):
        raise ValueError(f"{n} is not a power of two")
    if n > 20:
        raise ValueError(f"hypercube dimension must be in [1, 20], got {n}")
    size = 1 << n
    x = np.arange(size, dtype=np.int64)
    c = np.zeros(size, dtype=np.int64)
    for i in range(n):
        c ^= ((x >> i) & 1) * i
    return Coloring(c, n)


def is_rainbow(g: Graph, c: Coloring, k: int) -> bool:
    """Every neighborhood has exactly k vertices carrying each color < k once."""
    deg = g.out_degree
    if (deg != k).any():
        return False
    seen = np.sort(c.colors[g.indices].reshape(-1, k), axis=1)
    return bool((seen == np.arange(k)[None, :]).all())


@dataclass(frozen=True)
class CountingCertificate:
    n: int
    per_class_lower_bound: int
    total: int
    vertex_budget: int
    applicable: bool

    def to_json(self) -> dict:
        return {"format": "domatic.counting_certificate/1", **asdict(self)}


def nonexistence_certificate(n: int) -> CountingCertificate:
    """Each vertex lies in exactly n neighborhoods, so a dominating set has ≥ ⌈2ⁿ/n⌉ vertices."""
    if not 1 <= n <= 30:
        raise ValueError(f"dimension must be in [1, 30], got {n}")
    size = 1 << n
    lower = -(-size // n)
    return CountingCertificate(n, lower, n * lower, size, n * lower > size)
