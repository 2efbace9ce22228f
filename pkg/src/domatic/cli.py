"""Command-line front end: JSON in, JSON artifacts with an embedded run manifest out.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .dichotomy import (ConvergentFamily, LevelData, PiecewiseColoring, build_levels, domination_certificate,
                        emit_domatic_sets, finite_vision, first_one_coloring, pairwise_disjoint)
from .finite import PathDecomposition, approx_domatic, covered_region, moser_tardos_domatic, path_coloring, \
    simultaneous_domatic
from .graph import Coloring, Graph, SearchBudgetExceeded, find_domatic_coloring, max_domatic_number, verify_domatic
from .hypercube import hypercube_graph, is_power_of_two, is_rainbow, nonexistence_certificate, power_of_two_domatic
from .measurable import LazyGraph, edge_grab
from .openpair import (PointFamily, SchemeSubtree, choose_parameters, moser_tardos_two_coloring, select_points,
                       verify_open_pair)
from .profinite import GroupSpec, Point
from .resample import DEFAULT_BUDGET, ResampleBudgetExceeded
from .scheme import scheme_from_json
from .torus import fixed, fixed_sqrt, torus_open_pair

MANIFEST_FORMAT = "domatic.manifest/1"


class InputError(Exception):
    """Bad flags or unreadable input; maps to exit code 1."""

    def __init__(self, message, **where):
        super().__init__(message)
        self.where = where


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


class Run:
    """Collects input hashes while a command executes."""

    def __init__(self, argv):
        self.argv = list(argv)
        self.inputs = {}
        self.seed = None

    def load(self, path):
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}", file=path) from None
        self.inputs[path] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise InputError(f"{path} is not UTF-8: {exc.reason}", file=path) from None
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed JSON in {path}: {exc.msg}", file=path, line=exc.lineno,
                             column=exc.colno) from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------- parsers for input files

def _graph(run, path):
    data = run.load(path)
    try:
        return Graph.from_json(data)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}", file=path) from None


def _any_graph(run, path):
    data = run.load(path)
    try:
        if isinstance(data, dict) and ("stream" in data or data.get("format") == "domatic.lazy_graph/1"):
            return LazyGraph.from_json(data)
        return Graph.from_json(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"{path}: {exc}", file=path) from None


def _group(run, path):
    try:
        return GroupSpec.from_json(run.load(path))
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"{path}: {exc}", file=path) from None


def _scheme_list(run, path, spec):
    data = run.load(path)
    items = data.get("schemes", data) if isinstance(data, dict) else data
    if not isinstance(items, list):
        raise InputError(f"{path}: expected a list of schemes", file=path)
    try:
        return [(scheme_from_json(spec, s), str(s.get("node", ""))) for s in items]
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"{path}: {exc}", file=path) from None


def _point(run, path):
    data = run.load(path)
    try:
        return Point.from_json(data.get("x", data) if isinstance(data, dict) and "x" in data else data)
    except (ValueError, TypeError, AttributeError) as exc:
        raise InputError(f"{path}: {exc}", file=path) from None


def _real(v, precision):
    if isinstance(v, dict):
        if "sqrt" not in v:
            raise InputError(f"unknown real encoding {v!r}")
        return fixed_sqrt(int(v["sqrt"]), precision, int(v.get("offset", 0)), int(v.get("scale", 1)))
    if isinstance(v, float):
        return fixed(Fraction(repr(v)), precision)
    return fixed(v, precision)


# ---------------------------------------------------------------- subcommands

def cmd_solve(run, a):
    g = _graph(run, a.graph)
    try:
        if a.k is not None:
            c = find_domatic_coloring(g, a.k, a.budget)
            return 0, {"format": "domatic.solve/1", "k": a.k, "found": c is not None,
                       "coloring": None if c is None else c.to_json()}
        k, c = max_domatic_number(g, a.budget)
    except SearchBudgetExceeded as exc:
        return 2, {"format": "domatic.solve/1", "error": "budget", "budget": exc.budget}
    return 0, {"format": "domatic.solve/1", "k": k, "found": True, "coloring": c.to_json()}


def cmd_verify(run, a):
    g = _graph(run, a.graph)
    try:
        c = Coloring.from_json(run.load(a.coloring))
        rep = verify_domatic(g, c, a.k)
    except ValueError as exc:
        raise InputError(str(exc), file=a.coloring) from None
    return (0 if rep.ok else 2), rep.to_json()


def cmd_hypercube(run, a):
    if not 1 <= a.n <= 30:
        raise InputError("--n must be in [1, 30]")
    if a.refute:
        cert = nonexistence_certificate(a.n)
        return (0 if cert.applicable else 2), cert.to_json()
    if not is_power_of_two(a.n):
        raise InputError(f"n={a.n} is not a power of two; use --refute for the counting certificate")
    if a.n > 20:
        raise InputError("explicit colorings are limited to n ≤ 20")
    g, c = hypercube_graph(a.n), power_of_two_domatic(a.n)
    ok = is_rainbow(g, c, a.n)
    return (0 if ok else 2), {"format": "domatic.hypercube/1", "n": a.n, "rainbow": ok, "coloring": c.to_json()}


def cmd_openpair(run, a):
    spec = _group(run, a.group)
    schemes = _scheme_list(run, a.schemes, spec)
    if a.k > len(schemes):
        raise InputError(f"--k {a.k} exceeds the {len(schemes)} schemes given")
    sets = [SchemeSubtree(s, node) for s, node in schemes[:a.k]]
    n = a.n if a.n is not None else choose_parameters(max(a.k, 1))
    run.seed = a.seed
    try:
        fam = select_points(sets, n) if a.k else None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if fam is None:
        fam = PointFamily(0, n, [], 0)
    if a.depth is not None:
        if a.depth < fam.depth:
            raise InputError(f"--depth {a.depth} is below the {fam.depth} needed to separate the points")
        fam.depth = a.depth
    if spec.quotient_size(fam.depth) > 1 << 22:
        raise InputError(f"quotient at depth {fam.depth} exceeds the size cap")
    try:
        w = moser_tardos_two_coloring(spec, fam, a.seed, a.budget)
    except ResampleBudgetExceeded as exc:
        return 2, {"format": "domatic.open_pair_failure/1", "reason": str(exc)}
    check = verify_open_pair(spec, fam, w)
    out = w.to_json()
    out.update({"k": a.k, "n": n, "points": fam.to_json()["points"], "verified": check.to_json()})
    return (0 if check.ok else 2), out


def cmd_torus(run, a):
    data = run.load(a.samples)
    sets = data.get("sets") if isinstance(data, dict) else data
    if not isinstance(sets, list):
        raise InputError(f"{a.samples}: expected a 'sets' list", file=a.samples)
    try:
        pts = [[tuple(_real(c, a.precision) for c in (p if isinstance(p, list) else [p])) for p in s] for s in sets]
        w = torus_open_pair(pts, a.nmax, a.precision, a.scan_bound)
    except (ValueError, ArithmeticError) as exc:
        return 2, {"format": "domatic.torus_failure/1", "reason": str(exc)}
    out = w.to_json()
    out["delta"] = out["margin"]
    return 0, out


def cmd_dichotomy_build(run, a):
    spec = _group(run, a.group)
    schemes = [s for s, _ in _scheme_list(run, a.schemes, spec)]
    run.seed = a.seed
    try:
        data = build_levels(spec, schemes, a.levels, a.seed, a.budget, verify=True)
    except ResampleBudgetExceeded as exc:
        return 2, {"format": "domatic.levels_failure/1", "reason": str(exc)}
    except RuntimeError as exc:
        return 2, {"format": "domatic.levels_failure/1", "reason": str(exc)}
    out = data.to_json()
    out["size_ledger"] = data.size_ledger()
    out["pairwise_disjoint"] = pairwise_disjoint(emit_domatic_sets(data))
    return (0 if out["pairwise_disjoint"] else 2), out


def cmd_dichotomy_certify(run, a):
    try:
        data = LevelData.from_json(run.load(a.build))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{a.build}: {exc}", file=a.build) from None
    x = _point(run, a.x)
    try:
        cert = domination_certificate(data, a.n, x, a.scheme)
    except RuntimeError as exc:
        return 2, {"format": "domatic.certificate_failure/1", "reason": str(exc)}
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return 0, cert.to_json()


def cmd_dichotomy_vision(run, a):
    fdata = run.load(a.coloring)
    try:
        spec = GroupSpec.from_json(fdata["group"])
        if fdata.get("type") == "first_one":
            coloring = first_one_coloring(spec, int(fdata["depth"]))
        else:
            coloring = PiecewiseColoring.from_json(spec, fdata)
        fam = ConvergentFamily.from_json(run.load(a.family))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(str(exc)) from None
    x = _point(run, a.x)
    try:
        rep = finite_vision(coloring, fam, x)
    except ValueError as exc:
        return 2, {"format": "domatic.vision_failure/1", "reason": str(exc)}
    return 0, rep.to_json()


def cmd_edgegrab(run, a):
    try:
        lg = LazyGraph.from_json(run.load(a.graph))
        o, rep = edge_grab(lg, a.stages, a.report, a.fiber)
    except RuntimeError as exc:
        return 2, {"format": "domatic.edge_grab_failure/1", "reason": str(exc)}
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{a.graph}: {exc}", file=a.graph) from None
    return (0 if rep.ok else 2), {"format": "domatic.edge_grab/1", "stages": o.stage_count,
                                   "ledger": o.ledger(), "report": rep.to_json()}


def cmd_approx(run, a):
    g = _any_graph(run, a.graph)
    run.seed = a.seed
    try:
        c, rep = approx_domatic(g, a.k, Fraction(a.eps), a.seed, a.max_attempts)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return (0 if rep.accepted else 2), {"format": "domatic.approx/1", "report": rep.to_json(),
                                        "coloring": c.to_json()}


def cmd_mt(run, a):
    g = _graph(run, a.graph)
    others = [_graph(run, p) for p in a.simultaneous or []]
    run.seed = a.seed
    try:
        if others:
            c = simultaneous_domatic([g] + others, a.k, a.seed, a.c, a.budget, strict=not a.no_strict)
        else:
            c = moser_tardos_domatic(g, a.k, a.seed, a.c, a.budget)
    except ResampleBudgetExceeded as exc:
        return 2, {"format": "domatic.mt_failure/1", "reason": str(exc)}
    except ValueError as exc:
        raise InputError(str(exc)) from None
    reports = [verify_domatic(h, c, a.k).to_json() for h in [g] + others]
    ok = all(r["ok"] for r in reports)
    return (0 if ok else 2), {"format": "domatic.mt/1", "k": a.k, "c": a.c, "seed": a.seed,
                              "resamples": c.resamples, "coloring": c.to_json(), "verified": reports}


def cmd_paths(run, a):
    g = _graph(run, a.graph)
    try:
        d = PathDecomposition.from_json(run.load(a.decomp))
        c = path_coloring(g, d, a.k)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(str(exc)) from None
    region = covered_region(g, d)
    rep = verify_domatic(g, c, a.k)
    bad = [v for v in region if not rep.is_domatic_at(v)]
    return (0 if not bad else 2), {"format": "domatic.paths_coloring/1", "coloring": c.to_json(),
                                   "region_size": len(region), "region_ok": not bad,
                                   "counterexample": bad[0] if bad else None}


def cmd_replay(run, a):
    try:
        with open(a.artifact, "rb") as fh:
            original = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {a.artifact}: {exc.strerror}", file=a.artifact) from None
    try:
        man = json.loads(original.decode("utf-8"))["manifest"]
    except (ValueError, KeyError, TypeError):
        raise InputError(f"{a.artifact} carries no manifest", file=a.artifact) from None
    for path, digest in man.get("inputs", {}).items():
        try:
            with open(path, "rb") as fh:
                now = hashlib.sha256(fh.read()).hexdigest()
        except OSError:
            raise InputError(f"input {path} is no longer readable", file=path) from None
        if now != digest:
            return 2, {"format": "domatic.replay/1", "identical": False, "reason": f"input {path} changed"}
    code, text, _ = execute(man["command"])
    if "wall_time_s" in man:
        # timed artifacts differ in the clock reading only; compare payloads
        same = _sha(_payload_text(text)) == man.get("output_sha256")
    else:
        same = text.encode("utf-8") == original
    return (0 if same else 2), {"format": "domatic.replay/1", "identical": same, "exit_code": code,
                                "output_sha256": _sha(_payload_text(text))}


def _payload_text(artifact_text: str) -> str:
    obj = json.loads(artifact_text)
    obj.pop("manifest", None)
    return _dump(obj)


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="domatic", description="Domatic partitions: solvers, constructions and certificates.")
    p.add_argument("--version", action="version", version=f"domatic {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--out", help="write the artifact here instead of stdout")
        sp.add_argument("--timing", action="store_true", help="record wall time in the manifest")
        return sp

    s = common(sub.add_parser("solve", help="exact domatic number or a k-domatic coloring"))
    s.add_argument("--graph", required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--budget", type=int, default=10**8)
    s.set_defaults(func=cmd_solve)

    s = common(sub.add_parser("verify", help="check a coloring is k-domatic"))
    s.add_argument("--graph", required=True)
    s.add_argument("--coloring", required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_verify)

    s = common(sub.add_parser("hypercube", help="rainbow coloring of Q_n or the counting certificate"))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--refute", action="store_true")
    s.set_defaults(func=cmd_hypercube)

    s = common(sub.add_parser("openpair", help="clopen open-pair witness on a finite quotient"))
    s.add_argument("--group", required=True)
    s.add_argument("--schemes", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--depth", type=int, help="quotient depth (default: least depth separating the points)")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.set_defaults(func=cmd_openpair)

    s = common(sub.add_parser("torus", help="semicircle open pair on a torus"))
    s.add_argument("--samples", required=True)
    s.add_argument("--precision", type=int, default=96)
    s.add_argument("--nmax", type=int, default=10**4)
    s.add_argument("--scan-bound", type=int)
    s.set_defaults(func=cmd_torus)

    d = sub.add_parser("dichotomy", help="levels, certificates and finite vision")
    dsub = d.add_subparsers(dest="action", parser_class=_Parser)
    dsub.required = True
    s = common(dsub.add_parser("build"))
    s.add_argument("--group", required=True)
    s.add_argument("--schemes", required=True)
    s.add_argument("--levels", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.set_defaults(func=cmd_dichotomy_build)
    s = common(dsub.add_parser("certify"))
    s.add_argument("--build", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--scheme", type=int, default=0)
    s.set_defaults(func=cmd_dichotomy_certify)
    s = common(dsub.add_parser("vision"))
    s.add_argument("--coloring", required=True)
    s.add_argument("--family", required=True)
    s.add_argument("--x", required=True)
    s.set_defaults(func=cmd_dichotomy_vision)

    s = common(sub.add_parser("edgegrab", help="edge-grab orientation and stage measure report"))
    s.add_argument("--graph", required=True)
    s.add_argument("--stages", type=int, required=True, help="number of materialized edges")
    s.add_argument("--report", type=int, required=True)
    s.add_argument("--fiber", type=int, default=0)
    s.set_defaults(func=cmd_edgegrab)

    s = common(sub.add_parser("approx", help="random coloring domatic on most of the mass"))
    s.add_argument("--graph", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--eps", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--max-attempts", type=int, default=10)
    s.set_defaults(func=cmd_approx)

    s = common(sub.add_parser("mt", help="Moser–Tardos k-domatic coloring"))
    s.add_argument("--graph", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--c", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--simultaneous", nargs="+", metavar="GRAPH")
    s.add_argument("--no-strict", action="store_true", help="skip the union local lemma check")
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.set_defaults(func=cmd_mt)

    s = common(sub.add_parser("paths", help="color a path decomposition"))
    s.add_argument("--graph", required=True)
    s.add_argument("--decomp", required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_paths)

    s = common(sub.add_parser("replay", help="re-run an artifact's manifest and compare bytes"))
    s.add_argument("artifact")
    s.set_defaults(func=cmd_replay)
    return p


def execute(argv):
    """Run one command; returns ``(exit_code, artifact_text, args)`` without writing anything."""
    args = build_parser().parse_args(argv)
    run = Run(argv)
    start = time.perf_counter()
    code, payload = args.func(run, args)
    body = _dump(payload)
    manifest = {"format": MANIFEST_FORMAT, "command": list(argv), "inputs": run.inputs, "seed": run.seed,
                "version": __version__, "output_sha256": _sha(body)}
    if getattr(args, "timing", False):
        manifest["wall_time_s"] = round(time.perf_counter() - start, 6)
    payload = dict(payload)
    payload["manifest"] = manifest
    return code, _dump(payload) + "\n", args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        code, text, args = execute(argv)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return code
    except InputError as exc:
        err = {"error": str(exc), **exc.where}
        sys.stderr.write(json.dumps(err) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
