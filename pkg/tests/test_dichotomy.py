import json
import random

import numpy as np
import pytest

from domatic.dichotomy import (ConvergentFamily, ConvergentSequence, LevelData,
                               PiecewiseColoring, UncoveredLimit, build_levels, domination_certificate,
                               emit_domatic_sets, finite_vision, first_one_coloring, pairwise_disjoint,
                               verify_level)
from domatic.profinite import ClopenSet, GroupSpec, InsufficientDepth, Point
from domatic.scheme import ExplicitScheme, LinearScheme, SchemeError

Z2 = GroupSpec.cyclic(2)
DY = LinearScheme.dyadic(Z2)
CO = LinearScheme.complement(Z2)


def level_oracle(data, n):
    """Exhaustive check with clopen algebra: every (s, k, j, γ) has a child t with U_t·γ ⊆ A_j."""
    lv = data.levels[n - 1]
    depth = max(lv.depth, lv.a0.depth, lv.a1.depth)
    for s in data.strings(n - 1):
        below = [t for t in lv.strings if t.startswith(s)]
        for sch in data.schemes:
            cyls = [ClopenSet.cylinder(data.spec, sch.node(t).word) for t in below]
            for target in (lv.a0, lv.a1):
                for r in range(data.spec.quotient_size(depth)):
                    gamma = Point(data.spec.unrank(r, depth), (0,))
                    if not any(c.translate_right(gamma).issubset(target) for c in cyls):
                        return False
    return True


def test_zero_levels():
    data = build_levels(Z2, [DY], 0, 0)
    assert data.N == 0 and data.strings(0) == [""]
    with pytest.raises(ValueError):
        data.pair(0)
    assert emit_domatic_sets(data) == []


def test_one_level_dyadic():
    data = build_levels(Z2, [DY], 1, 3)
    assert data.strings(1) and data.levels[0].verified
    assert verify_level(data, 1) is None
    assert level_oracle(data, 1)


def test_two_schemes_two_levels():
    data = build_levels(Z2, [DY, CO], 2, 1)
    for n in (1, 2):
        assert verify_level(data, n) is None
    assert level_oracle(data, 1)
    assert level_oracle(data, 2)


def test_three_levels_invariant(dyadic_levels):
    data = dyadic_levels
    assert [lv.depth for lv in data.levels] == sorted(lv.depth for lv in data.levels)
    assert all(lv.verified for lv in data.levels)
    assert level_oracle(data, 1) and level_oracle(data, 2)


def test_verifier_catches_broken_level():
    data = build_levels(Z2, [DY], 1, 0)
    lv = data.levels[0]
    lv.a1 = ClopenSet.empty(Z2)
    fail = verify_level(data, 1)
    assert fail is not None and fail["j"] == 1
    assert not level_oracle(data, 1)


def test_domatic_sets_match_definition(dyadic_levels):
    data = dyadic_levels
    ds = emit_domatic_sets(data)
    assert ds[0] == data.pair(1)[1]
    assert pairwise_disjoint(ds)
    depth = data.required_depth(3)
    a = [[lv.a0.lift(depth), lv.a1.lift(depth)] for lv in data.levels]
    for n, d in enumerate(ds, start=1):
        expect = a[n - 1][1].copy()
        for m in range(1, n):
            expect &= a[m - 1][0]
        assert np.array_equal(d.lift(depth), expect)
    for i in range(3):
        for j in range(i):
            assert not (ds[i].lift(depth) & ds[j].lift(depth)).any()


def test_union_need_not_cover(dyadic_levels):
    ds = emit_domatic_sets(dyadic_levels)
    union = ds[0] | ds[1] | ds[2]
    # reported, not asserted: the partial coloring may leave a gap
    assert isinstance(union.is_full(), bool)


def check_certificate(data, cert, x, n):
    depth = data.required_depth(n) + len(cert.gamma.head) + 1
    y = Z2.multiply(cert.gamma.prefix(depth), x.prefix(depth))
    for m in range(1, n):
        if not data.pair(m)[0].contains(y):
            return False
    return data.pair(n)[1].contains(y) and cert.gamma == DY.node(cert.chain[-1]).point


def test_certificates_first_level(dyadic_levels):
    for r in range(16):
        x = Point(Z2.unrank(r, 4), (0,))
        cert = domination_certificate(dyadic_levels, 1, x)
        assert check_certificate(dyadic_levels, cert, x, 1)


def test_certificates_random_points(dyadic_levels):
    rnd = random.Random(0)
    for _ in range(100):
        x = Point(tuple(rnd.randrange(2) for _ in range(20)), (rnd.randrange(2),))
        cert = domination_certificate(dyadic_levels, 3, x)
        assert check_certificate(dyadic_levels, cert, x, 3)
        assert cert.chain[0] == "" and all(b.startswith(a) for a, b in zip(cert.chain, cert.chain[1:]))


def test_certificate_needs_depth(dyadic_levels):
    with pytest.raises(InsufficientDepth):
        domination_certificate(dyadic_levels, 3, (0, 1))
    with pytest.raises(ValueError):
        domination_certificate(dyadic_levels, 4, Point())


def test_round_trip_json(dyadic_levels):
    back = LevelData.from_json(json.loads(json.dumps(dyadic_levels.to_json())))
    assert emit_domatic_sets(back) == emit_domatic_sets(dyadic_levels)
    x = Point((1, 0, 1), (1, 0))
    assert domination_certificate(back, 2, x).chain == domination_certificate(dyadic_levels, 2, x).chain


def test_shallow_explicit_scheme_errors():
    nodes = {"": {"word": [], "point": [0]}, "0": {"word": [0], "point": [0]}, "1": {"word": [1], "point": [1]}}
    with pytest.raises((SchemeError, ValueError)):
        build_levels(Z2, [ExplicitScheme(Z2, nodes)], 1, 0)


def test_determinism():
    a = build_levels(Z2, [DY, CO], 1, 9).to_json()
    b = build_levels(Z2, [DY, CO], 1, 9).to_json()
    assert a == b


# ----------------------------------------------------------- finite vision

def first_one(word):
    return next((i for i, b in enumerate(word) if b), None)


def unit_vectors():
    return ConvergentFamily((ConvergentSequence.perturbation(Point((), (0,)), 1, 0, 1),))


def test_vision_first_one_example():
    f = first_one_coloring(Z2, 12)
    x = Point((0, 1, 0, 1), (0,))
    rep = finite_vision(f, unit_vectors(), x)
    assert rep.colors == [0, 1, 3] and rep.tail_index == 4
    # direct enumeration of f(e_k + x) plus the limit
    seen = set()
    for k in range(12):
        w = [(1 if i == k else 0) ^ x.coordinate(i) for i in range(12)]
        seen.add(first_one(w))
    seen.add(first_one(x.prefix(12)))
    assert seen == {0, 1, 3}


def test_vision_constant_coloring():
    f = PiecewiseColoring(Z2, ((ClopenSet.full(Z2), 0),))
    rep = finite_vision(f, unit_vectors(), Point((), (0,)))
    assert rep.colors == [0] and rep.tail_index == 0


def test_vision_uncovered_limit():
    with pytest.raises(UncoveredLimit):
        finite_vision(first_one_coloring(Z2, 12), unit_vectors(), Point((), (0,)))


@pytest.mark.parametrize("seed", range(20))
def test_vision_matches_enumeration(seed):
    rnd = random.Random(seed)
    f = first_one_coloring(Z2, 16)
    head = [rnd.randrange(2) for _ in range(rnd.randrange(1, 8))]
    head[rnd.randrange(len(head))] = 1
    x = Point(tuple(head), (0,))
    offset, step = rnd.randrange(3), rnd.randrange(1, 3)
    fam = ConvergentFamily((ConvergentSequence.perturbation(Point((), (0,)), 1, offset, step),))
    rep = finite_vision(f, fam, x)
    seen = set()
    for k in range(40):
        pos = offset + k * step
        w = [(1 if i == pos else 0) ^ x.coordinate(i) for i in range(16)]
        c = first_one(w)
        if c is not None:
            seen.add(c)
    assert set(rep.colors) == seen
    # beyond the tail every term has the limit's color
    lim = first_one(x.prefix(16))
    for k in range(rep.tail_index, rep.tail_index + 10):
        pos = offset + k * step
        w = [(1 if i == pos else 0) ^ x.coordinate(i) for i in range(16)]
        assert first_one(w) == lim


def test_modulus_spot_check():
    seq = ConvergentSequence.perturbation(Point((1,), (0, 1)), 1, 2, 3)
    assert seq.check_modulus(range(0, 20))
    liar = ConvergentSequence(seq.limit, seq.element, lambda d: 0)
    assert not liar.check_modulus(range(5, 10))


def test_pieces_must_be_disjoint():
    with pytest.raises(ValueError):
        PiecewiseColoring(Z2, ((ClopenSet.full(Z2), 0), (ClopenSet.cylinder(Z2, (1,)), 1)))


def test_exclusivity_demo(dyadic_levels):
    # scheme-backed S: three disjoint nonempty D_n
    assert all(not d.is_empty() for d in emit_domatic_sets(dyadic_levels))
    # countable S with a continuous coloring: the vision is finite
    rep = finite_vision(first_one_coloring(Z2, 10), unit_vectors(), Point((1,), (0,)))
    assert len(rep.colors) <= rep.tail_index + 1
