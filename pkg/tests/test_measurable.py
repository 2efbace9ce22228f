import json
from fractions import Fraction

import pytest

from domatic.measurable import (AllOthers, ClassSpace, ExplicitStreams, FiberTooSmall, LazyGraph, NotGrabbed,
                                Progression, RoundRobin, Shift, StageBudgetExceeded, StreamError, a_bound,
                                edge_domatic_from_orientation, edge_grab, edge_grab_multiweight, edge_rank_colors,
                                fiber_of_pi, fiber_rank_coloring, fiber_rank_witnesses, materialize_edges,
                                pairing_decode, pi, smooth_domatic_query)

F = Fraction


def test_pairing_decode_inverts_cantor_pairing():
    table = {(a + b) * (a + b + 1) // 2 + a: (a, b) for a in range(60) for b in range(60)}
    for n in range(1500):
        assert pairing_decode(n) == table[n]
        assert pi(n) <= n


def test_pi_fibers_infinite_and_ordered():
    for i in range(6):
        fib = fiber_of_pi(i, 12)
        assert fib == sorted(fib) and all(pi(n) == i for n in fib)
        assert [n for n in range(fib[-1] + 1) if pi(n) == i] == fib


# ------------------------------------------------------------- smooth graphs

def simulate_stages(stream, x_index, target):
    """Hand simulation inside one class with vertices named by index."""
    seen = {0}
    stages = [{0}]
    pick = None
    for n in range(target):
        image = set()
        for y in sorted(seen):
            i = 0
            while stream(y, i) in seen:
                i += 1
            image.add(stream(y, i))
            if y == x_index and n == target - 1:
                pick = (stream(y, i), i)
        fresh = image | ({n + 1} - seen)
        stages.append(fresh)
        seen |= fresh
    return stages, pick


@pytest.mark.parametrize("stream", [AllOthers(), Shift(1, 1), Shift(2, 3)])
@pytest.mark.parametrize("xj,i", [(0, 0), (0, 1), (0, 3), (2, 0), (3, 2)])
def test_smooth_query_matches_simulation(stream, xj, i):
    cs = ClassSpace({"c": stream})
    w = smooth_domatic_query(cs, ("c", xj), i, 200)
    target = next(n for n in range(xj + 1, 10**4) if pi(n) == i)
    stages, (y, idx) = simulate_stages(stream, xj, target)
    assert w.stage == target and w.neighbor == ("c", y) and w.stream_index == idx
    assert [{j for _, j in s} for s in w.stages] == stages
    assert stream(xj, idx) == y and y in stages[target]


def test_smooth_all_colors_from_nu_zero():
    cs = ClassSpace({0: AllOthers(), 1: Shift()})
    for c in (0, 1):
        for i in range(5):
            w = smooth_domatic_query(cs, (c, 0), i, 500)
            assert pi(w.stage) == i and w.stage > 0 and w.neighbor[0] == c


def test_smooth_budget():
    cs = ClassSpace({0: AllOthers()})
    with pytest.raises(StageBudgetExceeded) as exc:
        smooth_domatic_query(cs, (0, 0), 0, 0)
    assert exc.value.progress["needed_stage"] == 1  # pi(1) = 0


# ------------------------------------------------------------- inverse functions

def half(x):
    return x // 2


def half_fiber(y):
    return [2 * y, 2 * y + 1]


def test_fiber_rank_parity():
    for x in range(50):
        assert fiber_rank_coloring(half, half_fiber, 2, x) == x % 2
    # every y sees both colors among its preimages
    for y in range(25):
        ws = fiber_rank_witnesses(half, half_fiber, 2, y)
        assert [half(z) for z in ws] == [y, y] and [z % 2 for z in ws] == [0, 1]


def test_fiber_rank_k1_and_too_small():
    assert fiber_rank_coloring(half, half_fiber, 1, 4) == 0
    assert fiber_rank_coloring(half, half_fiber, 1, 5) is None
    with pytest.raises(FiberTooSmall):
        fiber_rank_coloring(half, half_fiber, 3, 4)


def test_fiber_rank_bigger_fibers():
    fun = lambda x: x // 5  # noqa: E731
    fib = lambda y: [5 * y + r for r in (3, 1, 4, 0, 2)]  # noqa: E731
    for y in range(10):
        for k in range(1, 6):
            ws = fiber_rank_witnesses(fun, fib, k, y)
            assert sorted(fiber_rank_coloring(fun, fib, k, z) for z in ws) == list(range(k))


# ------------------------------------------------------------- edge grabbing

def test_streams():
    rr = RoundRobin(8)
    for r in range(7):
        match = [rr(v, r) for v in range(8)]
        assert all(match[match[v]] == v and match[v] != v for v in range(8))
    assert sorted(rr(0, i) for i in range(7)) == list(range(1, 8))
    assert Progression(10, 3, 2)(4, 5) == (4 + 3 + 10) % 10
    ex = ExplicitStreams([[1], [0]], [[1], [0]])
    assert [ex(0, i) for i in range(3)] == [1, 1, 1]
    with pytest.raises(StreamError):
        materialize_edges(LazyGraph(2, lambda v, i: v), 3)


def test_weights_validated():
    with pytest.raises(ValueError):
        LazyGraph(2, RoundRobin(2), (F(1, 3), F(1, 3)))
    with pytest.raises(ValueError):
        LazyGraph(2, RoundRobin(2), (F(3, 2), F(-1, 2)))


def replay_measures(o, lg, fiber, k_report):
    ms = fiber_of_pi(fiber, k_report + 1)
    out = []
    for m in ms:
        union = set()
        for n in range(fiber, m):
            union |= o.C[n] & o.M[n]
        out.append(sum((lg.weights[v] for v in union), F(0)))
    return out


@pytest.fixture(scope="module")
def grab8():
    lg = LazyGraph(8, RoundRobin(8))
    return lg, *edge_grab(lg, 64, 3)


def test_grab_example_bounds(grab8):
    lg, o, rep = grab8
    assert rep.ok and len(rep.measures) == 4
    assert rep.bounds == [a_bound(k) for k in range(4)] == [0, 0, F(1, 4), F(1, 2)]
    mus = replay_measures(o, lg, 0, 3)
    assert mus == rep.measures
    for k in range(4):
        assert mus[k] >= 1 - F(k + 1, 2**k)
    for k in range(3):
        assert mus[k + 1] >= F(1, 2) * (1 + mus[k] - F(1, 2**k))


def test_grab_k0_vacuous():
    lg = LazyGraph(8, RoundRobin(8))
    _, rep = edge_grab(lg, 8, 0)
    assert rep.bounds == [0] and rep.ok


def test_proper_edge_coloring_and_symmetry(grab8):
    _, o, _ = grab8
    at = {}
    for (_, u, v), c in zip(o.edges, o.colors):
        for w in (u, v):
            assert c not in at.setdefault(w, set())
            at[w].add(c)
    assert o.symmetric()
    assert all(h is None or h in e[1:] for e, h in zip(o.edges, o.eta))


def test_stage_selection_replay(grab8):
    lg, o, _ = grab8
    A = {}
    for (_, u, v), c in zip(o.edges, o.colors):
        A.setdefault(c, set()).update((u, v))
    for i in range(o.stage_count):
        cover = set()
        for c in range(o.n[i], o.n[i + 1]):
            cover |= A.get(c, set())
        assert lg.mass(cover) > 1 - F(1, 2 ** (i + 1))
        # and it is the first such cut
        prefix = set()
        for c in range(o.n[i], o.n[i + 1] - 1):
            prefix |= A.get(c, set())
        assert lg.mass(prefix) <= 1 - F(1, 2 ** (i + 1))


def test_halving_choice_replay(grab8):
    lg, o, _ = grab8
    every = set(range(8))
    for i in range(o.stage_count):
        covered = set()
        for n in range(pi(i), i):
            covered |= o.C[n] & o.M[n]
        d = every - covered
        assert 2 * lg.mass(o.C[i] & d) >= lg.mass(d)
        assert o.C[i] in (o.B0[i], every - o.B0[i])


def test_block_orientation_toward_C(grab8):
    _, o, _ = grab8
    for e, ((_, u, v), i) in enumerate(zip(o.edges, o.stage_of_edge)):
        if i is None:
            continue
        if (u in o.C[i]) != (v in o.C[i]):
            assert o.eta[e] in o.C[i]
        else:
            assert o.eta[e] == min(u, v)


def test_edge_domatic_from_orientation(grab8):
    lg, o, _ = grab8
    x = max(range(8), key=lambda v: len(o.out_edges(v)))
    picks = edge_domatic_from_orientation(o, lg, 3, x)
    assert len(set(picks)) == 3 and all(x in e[1:] for e in picks)
    colors = edge_rank_colors(o)
    by_edge = {tuple(e): c for e, c in zip(o.edges, colors)}
    assert [by_edge[tuple(e)] for e in picks] == [0, 1, 2]


def test_edge_domatic_failure_reports_weight(grab8):
    lg, o, _ = grab8
    counts = [len(o.out_edges(v)) for v in range(8)]
    k = max(counts) + 1
    with pytest.raises(NotGrabbed) as exc:
        edge_domatic_from_orientation(o, lg, k, 0)
    assert exc.value.failing_weight == 1


def test_report_budget():
    lg = LazyGraph(8, RoundRobin(8))
    with pytest.raises(StageBudgetExceeded):
        edge_grab(lg, 8, 6)


def test_nonuniform_weights_bounds():
    w = [F(1, 2), F(1, 4), F(1, 8), F(1, 16), F(1, 32), F(1, 64), F(1, 128), F(1, 128)]
    lg = LazyGraph(8, RoundRobin(8), tuple(w))
    o, rep = edge_grab(lg, 200, 4)
    assert rep.ok
    assert replay_measures(o, lg, 0, 4) == rep.measures


def test_multiweight_two_halves():
    lg = LazyGraph(8, RoundRobin(8))
    left = [F(1, 4)] * 4 + [0] * 4
    right = [0] * 4 + [F(1, 4)] * 4
    o, rep = edge_grab_multiweight(lg, [left, right], 64)
    assert rep.positive == [True, True]
    for j, w in enumerate((left, right)):
        for i, mass in enumerate(rep.masses[j]):
            if mass is not None:
                union = set()
                for n in range(i, o.stage_count):
                    union |= o.C[n] & o.M[n]
                assert mass == sum((w[v] for v in union), F(0)) > 0
    assert "analog" in rep.to_json()


def test_multiweight_single_weight_and_errors():
    lg = LazyGraph(8, RoundRobin(8))
    _, rep = edge_grab_multiweight(lg, [lg.weights], 64)
    assert rep.positive == [True]
    with pytest.raises(ValueError):
        edge_grab_multiweight(lg, [[F(1, 9)] * 8], 64)


def test_lazy_graph_json(data_dir):
    lg = LazyGraph.from_json(json.loads((data_dir / "rr16.json").read_text()))
    assert lg.vertex_count == 16 and sum(lg.weights) == 1
    back = LazyGraph.from_json(lg.to_json())
    assert back.neighbors(3, 20) == lg.neighbors(3, 20)
