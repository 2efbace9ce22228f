"""Time the compiled kernels against the numpy fallback on the same inputs.

Usage: python benchmarks/bench_kernels.py [--repeat R] [--quick]
Both backends must produce identical outputs; the script checks that too.
"""

import argparse
import time

import numpy as np

from domatic import _backend
from domatic.finite import random_regular_digraph
from domatic.hypercube import hypercube_graph, power_of_two_domatic
from domatic.openpair import choose_parameters, moser_tardos_two_coloring, select_points, SchemeSubtree, \
    verify_open_pair
from domatic.profinite import GroupSpec
from domatic.resample import run_explicit
from domatic.scheme import LinearScheme


def cases(quick):
    cube_n = 8 if quick else 16
    cube = hypercube_graph(cube_n)
    cube_colors = power_of_two_domatic(cube_n)
    reg = random_regular_digraph(2048 if quick else 32768, 9, 0)
    # degree 4 is below the local lemma threshold, so many resamples happen
    sparse = random_regular_digraph(4096 if quick else 16384, 4, 0)

    spec = GroupSpec.cyclic(2)
    dy = LinearScheme.dyadic(spec)
    k = 2
    fam = select_points([SchemeSubtree(dy, "0"), SchemeSubtree(dy, "1")], choose_parameters(k))
    fam.depth = 12 if quick else 18
    witness = moser_tardos_two_coloring(spec, fam, 0)

    return [
        (f"coverage_mask Q_{cube_n}",
         lambda: _backend.kernels.coverage_mask(cube.indptr, cube.indices, cube_colors.colors, cube_n).tobytes()),
        (f"explicit resample, 9-regular on {reg.vertex_count}",
         lambda: run_explicit(reg.indptr, reg.indices, reg.vertex_count, 2, 1).colors.tobytes()),
        (f"explicit resample, 4-regular on {sparse.vertex_count}",
         lambda: run_explicit(sparse.indptr, sparse.indices, sparse.vertex_count, 2, 1, 10**7).colors.tobytes()),
        (f"translation resample, depth {fam.depth}",
         lambda: moser_tardos_two_coloring(spec, fam, 3).a1.to_json()["members"][:50]),
        (f"verify_open_pair, depth {fam.depth}",
         lambda: verify_open_pair(spec, fam, witness).ok),
    ]


def timed(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    backends = _backend.available()
    if "cython" not in backends:
        print("compiled kernels not built; only the fallback is available")
    work = cases(args.quick)
    print(f"{'case':48s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup")
    for name, fn in work:
        times, outs = [], []
        for b in backends:
            _backend.use(b)
            t, out = timed(fn, args.repeat)
            times.append(t)
            outs.append(out)
        same = all(np.array_equal(np.asarray(o, dtype=object), np.asarray(outs[0], dtype=object)) for o in outs)
        speed = f"{times[-1] / times[0]:8.1f}x" if len(times) > 1 and times[0] > 0 else "       -"
        print(f"{name:48s} " + " ".join(f"{t * 1e3:8.1f}ms" for t in times) + f"  {speed}"
              + ("" if same else "   OUTPUT MISMATCH"))
    _backend.use(backends[0])


if __name__ == "__main__":
    main()
