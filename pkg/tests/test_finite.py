import itertools
import json
import statistics
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from domatic.finite import (MAX_PATH, MIN_PATH, PathDecomposition, _least_interior, approx_domatic,
                            approx_pieces_count, circulant, circulant_pair, covered_region, e_bounds,
                            lll_threshold, moser_tardos_domatic, path_coloring, random_decomposition,
                            random_regular_digraph, simultaneous_conditions, simultaneous_domatic,
                            union_dependency_degree, validate_decomposition)
from domatic.graph import Coloring, Graph, GraphError, verify_domatic
from domatic.measurable import LazyGraph, Progression
from domatic.resample import ResampleBudgetExceeded

F = Fraction


# ------------------------------------------------------------- approximate

def scan_pieces(k, eps):
    n = 0
    while k * (1 - F(1, k)) ** n >= F(eps) / 3:
        n += 1
    return n


def test_pieces_examples():
    assert approx_pieces_count(2, F(3, 10)) == 5
    assert approx_pieces_count(2, 0.3) == 5
    assert 2 * F(1, 2) ** 4 >= F(1, 10) > 2 * F(1, 2) ** 5
    assert approx_pieces_count(1, F(1, 100)) == 1


@pytest.mark.parametrize("k,eps", [(2, "0.3"), (3, "0.1"), (4, "0.05"), (5, "0.5"), (7, "0.01")])
def test_pieces_match_scan(k, eps):
    assert approx_pieces_count(k, F(eps)) == scan_pieces(k, F(eps))


def test_approx_k1_constant():
    g = random_regular_digraph(50, 3, 0)
    col, rep = approx_domatic(g, 1, F(1, 10), 0)
    assert rep.N == 1 and rep.fraction == 1 and rep.accepted
    assert set(col.colors.tolist()) == {0}


def test_approx_accepts_and_is_reproducible():
    g = random_regular_digraph(300, 8, 1)
    col, rep = approx_domatic(g, 2, F(3, 10), 5)
    assert rep.accepted and rep.fraction >= F(7, 10)
    # independent recount on the first N neighbors
    good = sum(1 for v in range(300) if {int(col.colors[u]) for u in g.neighbors(v)[:rep.N]} == {0, 1})
    assert F(good, 300) == rep.fraction
    col2, rep2 = approx_domatic(g, 2, F(3, 10), 5)
    assert np.array_equal(col.colors, col2.colors) and rep2.to_json() == rep.to_json()


def test_approx_fubini_statistics():
    # one attempt per seed; each vertex fails with probability ≤ k(1-1/k)^N < ε/3
    g = random_regular_digraph(400, 6, 2)
    eps = F(3, 10)
    fails = []
    for seed in range(120):
        _, rep = approx_domatic(g, 2, eps, seed, max_attempts=1)
        fails.append(float(1 - rep.fraction))
    mean = statistics.fmean(fails)
    # per-vertex failure 2^-4 exactly; 120·400 Bernoulli draws put 5 sigma near 0.006
    assert mean <= float(eps) * 2 / 3
    assert abs(mean - 1 / 16) < 0.01


def test_approx_lazy_graph_and_weights():
    lg = LazyGraph(64, Progression(64, 1, 3))
    col, rep = approx_domatic(lg, 2, F(1, 2), 3)
    assert rep.N == scan_pieces(2, F(1, 2))
    w = [F(1, 32)] * 32 + [0] * 32
    _, rep = approx_domatic(random_regular_digraph(64, 6, 0), 2, F(1, 2), 3, weights=w)
    assert rep.accepted
    with pytest.raises(ValueError):
        approx_domatic(random_regular_digraph(64, 6, 0), 2, F(1, 2), 3, weights=[F(1, 2)] * 64)


def test_approx_too_few_neighbors():
    with pytest.raises(GraphError):
        approx_domatic(random_regular_digraph(30, 3, 0), 2, F(1, 10), 0)


# ------------------------------------------------------------- thresholds

def mp_scan(k, c, flavor):
    with mpmath.workdps(60):
        n = 1
        while True:
            p = mpmath.mpf(k) * (1 - mpmath.mpf(1) / k) ** n
            d = c * n * n
            if flavor == "strong":
                ok = p * (d + 1) ** 8 <= mpmath.mpf(2) ** -15
            else:
                ok = p * (d + 1) < mpmath.exp(-1)
            if ok:
                return n
            n += 1


def test_threshold_examples():
    assert lll_threshold(2, 1) == 9
    # n = 9: p(d+1) = 164/512 < 1/e; n = 8: 130/256 ≥ 1/e
    assert mpmath.mpf(164) / 512 * mpmath.e < 1 <= mpmath.mpf(130) / 256 * mpmath.e
    assert lll_threshold(2, 1, "strong") == 129


@pytest.mark.parametrize("k,c", list(itertools.product(range(2, 6), range(1, 4))))
def test_thresholds_match_mpmath(k, c):
    mt, strong = lll_threshold(k, c), lll_threshold(k, c, "strong")
    assert mt == mp_scan(k, c, "mt")
    assert strong == mp_scan(k, c, "strong")
    assert strong >= mt


def test_thresholds_stable_under_more_terms():
    for k in range(2, 6):
        assert lll_threshold(k, 2, terms=10) == lll_threshold(k, 2, terms=80)


def test_e_bounds_bracket():
    lo, hi = e_bounds(20)
    with mpmath.workdps(50):
        assert mpmath.mpf(lo.numerator) / lo.denominator < mpmath.e < mpmath.mpf(hi.numerator) / hi.denominator


# ------------------------------------------------------------- Moser–Tardos

@pytest.fixture(scope="module")
def reg9():
    return random_regular_digraph(512, 9, 7)


def test_regular_generator(reg9):
    assert (reg9.out_degree == 9).all() and (reg9.in_degree == 9).all()
    assert all(v not in reg9.neighbors(v).tolist() for v in range(512))


def test_mt_nine_regular(reg9):
    col = moser_tardos_domatic(reg9, 2, 0)
    assert verify_domatic(reg9, col, 2).ok
    again = moser_tardos_domatic(reg9, 2, 0)
    assert np.array_equal(col.colors, again.colors) and col.resamples == again.resamples


@pytest.mark.parametrize("seed", range(10))
def test_mt_many_seeds(reg9, seed):
    col = moser_tardos_domatic(reg9, 2, seed)
    assert verify_domatic(reg9, col, 2).ok


def test_mt_k1_and_validation():
    g = Graph(3, [[1], [2], [0]])
    col = moser_tardos_domatic(g, 1, 0)
    assert col.resamples == 0 and col.colors.tolist() == [0, 0, 0]
    with pytest.raises(GraphError):
        moser_tardos_domatic(random_regular_digraph(64, 4, 0), 2, 0)  # below threshold
    with pytest.raises(GraphError):
        moser_tardos_domatic(Graph(3, [[1, 2], [0], [0, 1]]), 2, 0)  # irregular
    star_in = Graph(12, [[0 if v else 1] for v in range(12)])
    with pytest.raises(GraphError):
        moser_tardos_domatic(star_in, 2, 0, c=1)  # in-degree 11 > c·n


def test_mt_budget(reg9):
    with pytest.raises(ResampleBudgetExceeded):
        simultaneous_domatic([random_regular_digraph(64, 4, 0)], 3, 0, strict=False, budget=5)


# ------------------------------------------------------------- simultaneous

def dependency_oracle(graphs):
    V = graphs[0].vertex_count
    doms = [frozenset(g.neighbors(x).tolist()) for g in graphs for x in range(V)]
    return max(sum(1 for j, b in enumerate(doms) if j != i and a & b) for i, a in enumerate(doms))


def test_union_dependency_small():
    gs = [circulant(15, [1, 2]), circulant(15, [5])]
    assert union_dependency_degree(gs) == dependency_oracle(gs)


def test_circulant_pair_lattice_demo():
    gs = circulant_pair()
    a, b = gs
    # commuting translations: x + s + t = x + t + s
    for x in (0, 1, 337):
        ab = sorted(int(w) for u in a.neighbors(x) for w in b.neighbors(int(u)))
        ba = sorted(int(w) for u in b.neighbors(x) for w in a.neighbors(int(u)))
        assert ab == ba
    chk = simultaneous_conditions(gs, 2)
    assert chk.degrees == [12, 12] and chk.dependency == 166 and chk.p == F(1, 2048) and chk.holds
    col = simultaneous_domatic(gs, 2, 0)
    assert all(verify_domatic(g, col, 2).ok for g in gs)


def test_two_nine_regular_copies(reg9):
    perm = np.random.default_rng(3).permutation(512)
    inv = np.argsort(perm)
    copy = Graph(512, [sorted(int(perm[u]) for u in reg9.neighbors(int(inv[v]))) for v in range(512)])
    shared = sum(len(set(reg9.neighbors(v).tolist()) & set(copy.neighbors(v).tolist())) for v in range(512))
    gs = [reg9, copy]
    assert not simultaneous_conditions(gs, 2).holds
    with pytest.raises(GraphError):
        simultaneous_domatic(gs, 2, 0)
    col = simultaneous_domatic(gs, 2, 0, strict=False)
    assert all(verify_domatic(g, col, 2).ok for g in gs)
    assert shared < 512 * 9 * 0.1


def test_single_graph_matches_mt(reg9):
    a = simultaneous_domatic([reg9], 2, 4, strict=False)
    b = moser_tardos_domatic(reg9, 2, 4)
    assert np.array_equal(a.colors, b.colors)


# ------------------------------------------------------------- paths

def rules_oracle(col, first, last):
    """Independent statement of the endpoint and interior rules on positions 0..L."""
    L = len(col) - 1
    if first and col[1] not in first:
        return False
    if last and col[L - 1] not in last:
        return False
    for i in range(1, L):
        if not any(col[j] != col[i] for j in (i - 1, i + 1) if 1 <= j <= L - 1):
            return False
    return True


def brute_least(L, k, first, last):
    for inner in itertools.product(range(k), repeat=L - 1):
        col = (None,) + inner + (None,)
        if rules_oracle(col, first, last):
            return list(inner)
    return None


def padded_path(L, k, end_colors=None):
    """Path 0..L, each vertex padded with precolored leaves up to degree k+1."""
    adj = {v: set() for v in range(L + 1)}
    for a in range(L):
        adj[a].add(a + 1)
        adj[a + 1].add(a)
    context, nxt = {}, L + 1
    for v in range(L + 1):
        while len(adj[v]) < k + 1:
            adj[v].add(nxt)
            adj[nxt] = {v}
            context[nxt] = end_colors.get(v, 0) if end_colors else 0
            nxt += 1
    return Graph(nxt, [sorted(adj[v]) for v in range(nxt)]), context


def test_single_path_unconstrained_is_brute_force_least():
    got = _least_interior(6, 2, None, None)
    assert got == brute_least(6, 2, None, None) == [0, 1, 0, 0, 1]
    col = (None,) + tuple(got) + (None,)
    for i in range(1, 6):
        assert any(col[j] != col[i] for j in (i - 1, i + 1) if 1 <= j <= 5)


@pytest.mark.parametrize("L", range(MIN_PATH, MAX_PATH + 1))
@pytest.mark.parametrize("k", [2, 3])
def test_least_interior_matches_brute_force(L, k):
    rng = np.random.default_rng(L * 10 + k)
    cases = [(None, None)]
    for _ in range(4 if k == 2 or L <= 9 else 1):
        f = set(rng.choice(k, size=int(rng.integers(1, k + 1)), replace=False).tolist())
        g = set(rng.choice(k, size=int(rng.integers(1, k + 1)), replace=False).tolist())
        cases.append((f, g))
    for f, g in cases:
        assert _least_interior(L, k, f, g) == brute_least(L, k, f, g)


def test_path_coloring_on_padded_path():
    host, ctx = padded_path(6, 2)
    col = path_coloring(host, PathDecomposition([list(range(7))], ctx), 2)
    # leaves are colored 0 so both endpoints miss color 1
    c = col.colors.tolist()
    assert c[1] == 1 and c[5] == 1
    assert c[1:6] == brute_least(6, 2, {1}, {1})


def test_worked_pattern_two_three_four():
    # with the colors at 0, 1, 5, 6 fixed, 2, 3, 4 can make (1,2), (2,3), (4,5) bichromatic
    for c1, c5 in itertools.product(range(2), repeat=2):
        c2, c3, c4 = 1 - c1, c1, 1 - c5
        col = (0, c1, c2, c3, c4, c5, 0)
        assert rules_oracle(col, {c1}, {c5})
        got = _least_interior(6, 2, {c1}, {c5})
        assert got[0] == c1 and got[4] == c5
        assert got[1] != got[0] and got[3] != got[4]
        assert rules_oracle((None,) + tuple(got) + (None,), {c1}, {c5})


def test_endpoint_rule_if_possible():
    # an endpoint that already sees every color imposes nothing
    host, ctx = padded_path(6, 2)
    ctx = dict(ctx)
    leaves = [u for u in host.neighbors(0).tolist() if u > 6]
    ctx[leaves[0]], ctx[leaves[1]] = 0, 1
    col = path_coloring(host, PathDecomposition([list(range(7))], ctx), 2)
    assert col.colors[1] == brute_least(6, 2, None, {1})[0]


def test_decomposition_errors():
    host, ctx = padded_path(5, 2)
    with pytest.raises(GraphError):
        validate_decomposition(host, PathDecomposition([list(range(6))], ctx), 2)
    host, ctx = padded_path(6, 2)
    with pytest.raises(GraphError):
        validate_decomposition(host, PathDecomposition([[0, 2, 3, 4, 5, 6, 1]], ctx), 2)
    bare = Graph(7, [[1]] + [[v - 1, v + 1] for v in range(1, 6)] + [[5]])
    with pytest.raises(GraphError):
        validate_decomposition(bare, PathDecomposition([list(range(7))]), 2)
    loop = Graph(host.vertex_count, [sorted(set(host.neighbors(v).tolist()) | ({v} if v == 3 else set()))
                                     for v in range(host.vertex_count)])
    with pytest.raises(GraphError):
        validate_decomposition(loop, PathDecomposition([list(range(7))], ctx), 2)


@pytest.mark.parametrize("seed", range(60))
def test_random_decompositions_domatic_on_region(seed):
    k = 2 + seed % 2
    host, d = random_decomposition(seed, k, n_paths=25, attach=0.8)
    col = path_coloring(host, d, k)
    region = covered_region(host, d)
    for v in region:
        assert {int(col.colors[u]) for u in host.neighbors(v)} >= set(range(k))
    # each path satisfies the rules given what was colored before it
    colors = np.full(host.vertex_count, -1)
    for v, c in d.context.items():
        colors[v] = c
    for p in d.paths:
        miss = []
        for end in (p[0], p[-1]):
            present = {int(colors[u]) for u in host.neighbors(end) if colors[u] >= 0}
            miss.append({c for c in range(k) if c not in present} or None)
        seq = [None] + [int(col.colors[v]) for v in p[1:-1]] + [None]
        assert rules_oracle(seq, miss[0], miss[1])
        assert seq[1:-1] == brute_least(len(p) - 1, k, miss[0], miss[1]) if len(p) <= 9 else True
        for v in p:
            colors[v] = col.colors[v]


def test_decomposition_json_round_trip(data_dir):
    d = PathDecomposition.from_json(json.loads((data_dir / "paths_decomp.json").read_text()))
    host = Graph.from_json(json.loads((data_dir / "paths_host.json").read_text()))
    assert PathDecomposition.from_json(d.to_json()) == d
    col = path_coloring(host, d, 2)
    region = covered_region(host, d)
    sub = Coloring(col.colors, 2)
    assert region and all(verify_domatic(host, sub, 2).is_domatic_at(v) for v in region)
