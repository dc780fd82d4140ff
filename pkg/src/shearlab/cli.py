"""Command-line workbench: reproducible demonstrations with JSON reports.

Every command builds a report whose verdict and bounds sections serialize
byte-identically across reruns of the same job and seed; timing and digests
live in a separate meta section.  Exit codes: 0 verified or none-found within
bounds, 1 verification failure, 2 input error, 3 budget refusal.
"""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
import time

from . import __version__
from ._canon import canon_json, digest
from .catalog import builtin_context
from .circle import BudgetExceeded, NoWitness, check_circle_witness, search_circle
from .collision import SlotRecipe, family_from_recipes, pattern_from_recipes, trg_collision_analysis
from .propsuite import run_suite
from .qftypes import qf_type, realizations
from .saturation import GrowthLimitError, SaturationParams, saturate
from .shearing import (
    SearchBounds,
    SearchBudgetError,
    build_t32_witness,
    build_tnk_certificate,
    search_trivial_dividing,
    verify_certificate,
    verify_shearing,
)
from .structures import ContextSpec, IndexStructure, InputError, increasing_tuples
from .theories import (
    FormulaInstance,
    FormulaTemplate,
    ParamModel,
    TheorySpec,
    family_consistent,
    instance_consistent,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3


def _report(command, job, verdict, bounds, started):
    return {
        "command": command,
        "job": job,
        "verdict": verdict,
        "bounds": bounds,
        "meta": {
            "tool_version": __version__,
            "elapsed_s": round(time.monotonic() - started, 3),
            "verdict_digest": digest({"verdict": verdict, "bounds": bounds}),
        },
    }


def _emit(report, args):
    if getattr(args, "report", None):
        with open(args.report, "w") as fh:
            fh.write(canon_json(report))
            fh.write("\n")
    if getattr(args, "json", False):
        print(canon_json(report))
    else:
        _render_text(report)


def _render_text(report):
    print(f"[{report['command']}] verdict:")
    print(json.dumps(report["verdict"], indent=2, sort_keys=True))
    if report["bounds"]:
        print("bounds:", canon_json(report["bounds"]))
    print(f"elapsed: {report['meta']['elapsed_s']}s  digest: {report['meta']['verdict_digest']}")


def _load_context(args) -> ContextSpec:
    if getattr(args, "context_file", None):
        with open(args.context_file) as fh:
            payload = json.load(fh)
        from .structures import ClassKind

        kind_d = payload["kind"]
        kind = ClassKind(
            kind_d["kind"], kind_d.get("color_bound"), kind_d.get("n"), kind_d.get("k")
        )
        return ContextSpec(kind, IndexStructure.from_json(payload["base"]))
    return builtin_context(args.context)


# -- commands -----------------------------------------------------------------


def cmd_verify_t32(args) -> int:
    started = time.monotonic()
    inst = build_t32_witness(drop_edge=(args.mutate == "drop-edge"))
    verdict = verify_shearing(inst, core_bound=4)
    body = verdict.to_json()
    body["mutate"] = args.mutate
    report = _report("verify-t32", {"mutate": args.mutate}, body, {}, started)
    _emit(report, args)
    return EXIT_OK if verdict.ok else EXIT_FAIL


def cmd_verify_tnk(args) -> int:
    started = time.monotonic()
    cert = build_tnk_certificate(args.n, args.k, args.levels)
    verdict = verify_certificate(cert, core_bound=args.core_bound)
    report = _report(
        "verify-tnk",
        {"n": args.n, "k": args.k, "levels": args.levels},
        verdict.to_json(),
        {"core_bound": args.core_bound},
        started,
    )
    if args.certificate:
        with open(args.certificate, "w") as fh:
            fh.write(canon_json(cert.to_json()))
            fh.write("\n")
    _emit(report, args)
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_check_circle(args) -> int:
    started = time.monotonic()
    ctx = _load_context(args)
    params = SaturationParams(args.base_window, args.multiplicity, args.rounds)
    sweeps = []
    base_elements = list(ctx.base.elements)
    for size in range(args.i0_sweep + 1):
        for I0 in itertools.combinations(base_elements, size):
            result = search_circle(ctx, I0, args.max_i1, params)
            if isinstance(result, NoWitness):
                sweeps.append({"I0": sorted(I0), "witness": None, "counts": result.counts})
            else:
                recheck = check_circle_witness(result)
                sweeps.append(
                    {"I0": sorted(I0), "witness": result.to_json(), "recheck": recheck.to_json()}
                )
    verdict = {
        "context": getattr(args, "context", None) or "file",
        "found_any": any(s["witness"] is not None for s in sweeps),
        "sweeps": sweeps,
    }
    bounds = {
        "max_I1": args.max_i1,
        "i0_sweep": args.i0_sweep,
        "saturation": params.to_json(),
    }
    report = _report("check-circle", bounds | {"context": verdict["context"]}, verdict, bounds, started)
    _emit(report, args)
    return EXIT_OK


def _trg_symbol_search(ctx, J, max_i1, max_slots):
    """Exhaustive scan over slot recipes and sign vectors for a collision.

    A collision under invariant slot recipes requires two projection slots
    whose coordinates can name the same element across (or within) orbit
    tuples, one positive and one negative.  Constants and private parameters
    never collide, so the scan reduces to the realized coordinate-collision
    matrix of every candidate orbit.
    """
    base = ctx.base
    candidates = 0
    collisions = []
    orbits = 0
    for size in range(1, max_i1 + 1):
        for tbar in increasing_tuples(base, size):
            r = qf_type(tbar, (), J)
            orbit = realizations(J, r, ())
            if not orbit:
                continue
            orbits += 1
            arity = len(tbar)
            coll = [[False] * arity for _ in range(arity)]
            for u in orbit:
                for v in orbit:
                    if u == v:
                        continue
                    for c1 in range(arity):
                        for c2 in range(arity):
                            if u[c1] == v[c2]:
                                coll[c1][c2] = True
            # count the symbolic candidate space: recipes per slot are
            # projections, a shared constant, or a private parameter
            options = arity + 2
            for slots in range(1, max_slots + 1):
                candidates += (options ** slots) * (2 ** slots)
            for c1 in range(arity):
                for c2 in range(arity):
                    if c1 != c2 and coll[c1][c2]:
                        collisions.append({"tbar": list(tbar), "coords": [c1, c2]})
    return candidates, collisions, orbits


def cmd_trg_superstable(args) -> int:
    started = time.monotonic()
    from .catalog import cnk_context

    ctx = cnk_context(args.n, args.k)
    params = SaturationParams(args.base_window, args.multiplicity, args.rounds)
    J = saturate(ctx.base, ctx.kind, params)

    # exhaustive bounded search over invariant two-sided formula shapes
    candidates, collisions, orbits = _trg_symbol_search(ctx, J, args.max_i1, args.slots)

    # circle search at the same bounds
    circle = search_circle(ctx, (), args.max_i1, params)
    circle_none = isinstance(circle, NoWitness)

    # randomized full analyses with direct-evaluation agreement
    rng = random.Random(args.seed)
    template = FormulaTemplate(
        2, positive=frozenset({frozenset({0})}), negative=frozenset({frozenset({1})})
    )
    pairs = [t for t in increasing_tuples(ctx.base, 2)]
    agreements = 0
    disagreements = 0
    consistent_certs = 0
    for _ in range(args.patterns):
        tbar = rng.choice(pairs)
        r = qf_type(tbar, (), J)
        options = [SlotRecipe("proj", 0), SlotRecipe("proj", 1), SlotRecipe("const", 0), SlotRecipe("fresh")]
        recipes = [rng.choice(options), rng.choice(options)]
        pattern = pattern_from_recipes(J, (), r, recipes)
        cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, a_pos={0}, b_neg={1})
        assignment, param_ids = family_from_recipes(J, (), r, recipes, None)
        model = ParamModel(TheorySpec.random_graph(), list(param_ids.values()))
        insts = [FormulaInstance(template, assignment[t]) for t in sorted(assignment)]
        direct = family_consistent(model, insts, core_bound=3)
        individually_ok = all(instance_consistent(model, i) for i in insts)
        expected = direct.consistent and individually_ok
        if cert.consistent == expected:
            agreements += 1
            if cert.consistent:
                consistent_certs += 1
        else:
            disagreements += 1

    verdict = {
        "none_found": not collisions and circle_none,
        "cross_coordinate_collisions": collisions,
        "symbolic_candidates": candidates,
        "orbits_scanned": orbits,
        "circle_witness": None if circle_none else circle.to_json(),
        "pattern_analyses": {
            "total": args.patterns,
            "agreements": agreements,
            "disagreements": disagreements,
            "consistency_certificates": consistent_certs,
        },
    }
    bounds = {
        "n": args.n,
        "k": args.k,
        "max_I1": args.max_i1,
        "slots": args.slots,
        "saturation": params.to_json(),
        "seed": args.seed,
    }
    report = _report("trg-superstable", bounds, verdict, bounds, started)
    _emit(report, args)
    if disagreements:
        return EXIT_FAIL
    return EXIT_OK if verdict["none_found"] else EXIT_FAIL


def cmd_search_dividing(args) -> int:
    started = time.monotonic()
    if args.k == 1:
        theory = TheorySpec.forbidden_clique_graph(args.n)
    else:
        theory = TheorySpec.generic_hypergraph(args.n, args.k)
    bounds = SearchBounds(args.max_slots, args.max_length)
    result = search_trivial_dividing(theory, bounds)
    verdict = result.to_json()
    report = _report(
        "search-dividing",
        {"n": args.n, "k": args.k} | bounds.to_json(),
        verdict,
        bounds.to_json(),
        started,
    )
    _emit(report, args)
    return EXIT_OK


def cmd_property_suite(args) -> int:
    started = time.monotonic()
    results = run_suite(args.seed, quick=args.quick, mutate=args.mutate)
    verdict = {"all_passed": all(r["passed"] for r in results), "checks": results}
    report = _report(
        "property-suite",
        {"seed": args.seed, "quick": args.quick, "mutate": args.mutate},
        verdict,
        {},
        started,
    )
    _emit(report, args)
    for r in results:
        mark = "PASS" if r["passed"] else "FAIL"
        if not getattr(args, "json", False):
            print(f"{mark} {r['name']}: {r['detail']}")
    return EXIT_OK if verdict["all_passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shearlab",
        description="verification workbench for type orbits, shearing and the circle property",
    )
    parser.add_argument("--version", action="version", version=f"shearlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="print the JSON report")
        p.add_argument("--report", help="write the JSON report to this path")

    p = sub.add_parser("verify-t32", help="verify the tetrahedron-free witness")
    p.add_argument("--mutate", choices=["drop-edge"], default=None)
    common(p)
    p.set_defaults(fn=cmd_verify_t32)

    p = sub.add_parser("verify-tnk", help="build and verify a clique-bound certificate")
    p.add_argument("n", type=int)
    p.add_argument("k", type=int)
    p.add_argument("levels", type=int)
    p.add_argument("--core-bound", type=int, default=12)
    p.add_argument("--certificate", help="write the certificate JSON to this path")
    common(p)
    p.set_defaults(fn=cmd_verify_tnk)

    p = sub.add_parser("check-circle", help="search the circle property over a context")
    p.add_argument("--context", default="linear", help="builtin name (linear, kmu-separated, cnk:<n>:<k>, tree-branch:<m>)")
    p.add_argument("--context-file", help="load the context from a JSON file")
    p.add_argument("--i0-sweep", type=int, default=0, help="sweep base sets up to this size")
    p.add_argument("--max-i1", type=int, default=2)
    p.add_argument("--base-window", type=int, default=3)
    p.add_argument("--multiplicity", type=int, default=2)
    p.add_argument("--rounds", type=int, default=2)
    common(p)
    p.set_defaults(fn=cmd_check_circle)

    p = sub.add_parser("trg-superstable", help="bounded no-shearing evidence for the random graph")
    p.add_argument("n", type=int)
    p.add_argument("k", type=int)
    p.add_argument("--max-i1", type=int, default=3)
    p.add_argument("--slots", type=int, default=4)
    p.add_argument("--patterns", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-window", type=int, default=3)
    p.add_argument("--multiplicity", type=int, default=2)
    p.add_argument("--rounds", type=int, default=2)
    common(p)
    p.set_defaults(fn=cmd_trg_superstable)

    p = sub.add_parser("search-dividing", help="bounded search for nontrivial dividing")
    p.add_argument("n", type=int)
    p.add_argument("k", type=int)
    p.add_argument("--max-slots", type=int, default=4)
    p.add_argument("--max-length", type=int, default=5)
    common(p)
    p.set_defaults(fn=cmd_search_dividing)

    p = sub.add_parser("property-suite", help="run the seeded invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--mutate", choices=["drop-edge"], default=None)
    common(p)
    p.set_defaults(fn=cmd_property_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (BudgetExceeded, GrowthLimitError, SearchBudgetError) as err:
        print(f"budget refusal: {err}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
