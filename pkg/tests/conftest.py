import itertools
import pathlib
import sys

import pytest

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


def dominating_sets(adj):
    """Every vertex subset meeting every out-list (bitmask enumeration)."""
    n = len(adj)
    masks = [sum(1 << u for u in nb) for nb in adj]
    return [s for s in range(1 << n) if all(m & s for m in masks)]


def disjoint_family_exists(sets, k):
    """Are there k pairwise disjoint members of ``sets`` (given as bitmasks)?"""
    # minimal sets suffice: shrinking a member keeps disjointness
    minimal = [s for s in sets if not any(t != s and t & s == t for t in sets)]

    def go(start, used, left):
        if left == 0:
            return True
        for i in range(start, len(minimal)):
            if minimal[i] & used == 0 and go(i + 1, used | minimal[i], left - 1):
                return True
        return False

    return go(0, 0, k)


def brute_domatic_number(adj):
    sets = dominating_sets(adj)
    k = 0
    while disjoint_family_exists(sets, k + 1):
        k += 1
    return k


def all_partial_colorings(n, k):
    return itertools.product(range(-1, k), repeat=n)


@pytest.fixture(scope="session")
def dyadic_levels():
    from domatic.dichotomy import build_levels
    from domatic.profinite import GroupSpec
    from domatic.scheme import LinearScheme

    spec = GroupSpec.cyclic(2)
    return build_levels(spec, [LinearScheme.dyadic(spec)], 3, 0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
