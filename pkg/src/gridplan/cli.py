"""Command line front end: cluster, solve, report, export-milp, check.

Exit codes: 0 success, 2 usage, 3 validation, 4 infeasible model,
5 decomposition stopped before the gap closed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benders import BendersOptions, run_benders
from .corpus import CORPUS_NAMES, instance_doc
from .figures import render_figures
from .formulation import (ROW_FAMILIES, BuildOptions, build_milp,
                          check_solution, extract_solution)
from .interchange import write_lp_format
from .lp import solve_lp, solve_milp
from .rephours import (cluster_chronological, evaluate_representatives,
                       write_representative_set)
from .report import (ReportError, build_report, dispatch_stack,
                     format_plan_text, read_solution, require_matching_digest,
                     solution_document, solution_options, solution_values,
                     write_report, write_solution, write_trace)
from .system import (InstanceError, build_system, load_system,
                     read_hourly_csv, serialize_system, validate)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_NONCONVERGED = 5


class CliError(Exception):
    """Validation-grade failure with a message for stderr."""

    exit_code = EXIT_VALIDATION


class InfeasibleError(CliError):
    exit_code = EXIT_INFEASIBLE


class NonconvergedError(CliError):
    exit_code = EXIT_NONCONVERGED


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("instance", nargs="?", help="instance JSON file")
    p.add_argument("--seed-instance", choices=CORPUS_NAMES, metavar="NAME",
                   help="use a bundled deterministic instance instead of a "
                        "file (one of: %s)" % ", ".join(CORPUS_NAMES))


def _toggle_args(p: argparse.ArgumentParser) -> None:
    bes = p.add_mutually_exclusive_group()
    bes.add_argument("--with-bes", dest="with_bes", action="store_true",
                     default=True, help="allow storage builds (default)")
    bes.add_argument("--no-bes", dest="with_bes", action="store_false",
                     help="strip storage from the model")
    lcp = p.add_mutually_exclusive_group()
    lcp.add_argument("--with-lcp", dest="with_lcp", action="store_true",
                     default=True, help="price carbon in dispatch (default)")
    lcp.add_argument("--no-lcp", dest="with_lcp", action="store_false",
                     help="drop the emission price term")
    p.add_argument("--gamma", type=float, default=None,
                   help="hourly shed cap as a load fraction (overrides policy)")
    p.add_argument("--phi", type=float, default=None,
                   help="stage shed energy cap fraction (overrides policy)")
    p.add_argument("--big-m-angle", type=float, default=0.6,
                   help="angle spread bound behind candidate-flow big-M")
    p.add_argument("--rps-reading", choices=("ramp", "constant"),
                   default="ramp",
                   help="renewable quota as ramping or constant target")


def _build_opts(args) -> BuildOptions:
    return BuildOptions(with_bes=args.with_bes, with_lcp=args.with_lcp,
                        shed_gamma=args.gamma, shed_phi=args.phi,
                        big_m_angle=args.big_m_angle,
                        rps_constant=(args.rps_reading == "constant"))


def _load_instance(args):
    if args.seed_instance and args.instance:
        raise CliError("give an instance file or --seed-instance, not both")
    if args.seed_instance:
        doc = instance_doc(args.seed_instance)
        system = build_system(doc)
    elif args.instance:
        doc = None
        try:
            system = load_system(args.instance)
        except InstanceError as exc:
            raise CliError(str(exc)) from exc
    else:
        raise CliError("an instance file or --seed-instance is required")
    problems = validate(system)
    if problems:
        raise CliError("instance validation failed:\n  "
                       + "\n  ".join(problems))
    return system, doc


def _family(row_name: str) -> str:
    return row_name.split("_", 1)[0]


def explain_infeasibility(compact) -> str:
    """Name the requirements an infeasible model cannot meet.

    Solves the relaxation and aggregates the infeasibility certificate by
    constraint family; the heaviest families are the binding requirements.
    """
    lp = compact.to_milp()
    res = solve_lp(lp)
    if res.status != "infeasible":
        return ("no feasible build plan: the build rules admit no integer "
                "point satisfying the operating constraints")
    names = list(lp.eq_names) + list(lp.ge_names)
    weights = np.abs(np.concatenate([res.farkas_eq, res.farkas_ge]))
    by_family: dict[str, float] = {}
    for name, w in zip(names, weights):
        if w > 0.0:
            by_family[_family(name)] = by_family.get(_family(name), 0.0) + w
    total = sum(by_family.values()) or 1.0
    ranked = sorted(by_family.items(), key=lambda kv: -kv[1])[:3]
    lines = ["infeasible: no plan satisfies the binding requirements"]
    for fam, w in ranked:
        desc = ROW_FAMILIES.get(fam, "build rule")
        lines.append(f"  {fam}: {desc} (certificate weight {w / total:.0%})")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands


def cmd_cluster(args) -> int:
    series = read_hourly_csv(args.series)
    matrix = series.matrix()
    if args.k > matrix.shape[0]:
        raise CliError(f"k={args.k} exceeds the {matrix.shape[0]}-hour series")
    rep = cluster_chronological(matrix, args.k)
    write_representative_set(rep, args.output)
    metrics = evaluate_representatives(rep, matrix)
    print(f"wrote {len(rep.hours)} representatives to {args.output}")
    for dim, vals in metrics.items():
        print(f"  {dim}: duration_rmse={vals['duration_rmse']:.6g} "
              f"ramp_mae={vals['ramp_mae']:.6g}")
    return EXIT_OK


def _solve_instance(compact, args):
    """Run the chosen method; returns (values, objective, bound, trace)."""
    if args.method == "monolithic":
        out = solve_milp(compact.to_milp())
        if out.status == "infeasible":
            raise InfeasibleError(explain_infeasibility(compact))
        if out.status != "optimal":
            raise CliError(f"monolithic solve stopped: {out.status}")
        return extract_solution(compact, out.x), out.objective, out.bound, None
    bopt = BendersOptions(mode=args.benders_mode, tau=args.tau,
                          max_iterations=args.iter_limit)
    res = run_benders(compact, bopt)
    if res.status == "infeasible":
        raise InfeasibleError(explain_infeasibility(compact))
    if res.status != "optimal":
        err = NonconvergedError(
            f"stopped after {len(res.iterations)} iterations with bounds "
            f"[{res.bound:.6g}, {res.objective:.6g}] (gap {res.gap:.3g}); "
            "partial trace retained")
        err.result = res
        raise err
    return res.values, res.objective, res.bound, res.iterations


def cmd_solve(args) -> int:
    system, doc = _load_instance(args)
    opts = _build_opts(args)
    compact = build_milp(system, opts)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.seed_instance:
        serialize_system(system, outdir / "instance.json")
    try:
        values, objective, bound, trace = _solve_instance(compact, args)
    except NonconvergedError as exc:
        # leave the bounds and trace on disk before reporting failure
        res = exc.result
        ub = res.objective if np.isfinite(res.objective) else None
        (outdir / "solve_failed.json").write_text(json.dumps(
            {"status": "nonconverged", "lower_bound": res.bound,
             "upper_bound": ub,
             "iterations": len(res.iterations)}, indent=1) + "\n")
        write_trace(res.iterations, outdir / "trace.csv")
        raise
    bad = check_solution(system, values, opts)
    if bad:
        worst = max(abs(v) for _, v in bad)
        raise CliError(f"solution failed verification on {len(bad)} rows "
                       f"(worst violation {worst:.3g})")
    sol = solution_document(system, values, method=args.method,
                            status="optimal", objective=objective,
                            bound=bound, options=opts, trace=trace)
    write_solution(sol, outdir / "solution.json")
    report = build_report(system, values, opts, method=args.method)
    write_report(report, system, values, outdir, opts, args.dispatch_stage)
    text = format_plan_text(report)
    (outdir / "plan.txt").write_text(text)
    if trace is not None:
        write_trace(trace, outdir / "trace.csv")
    if not args.no_figures:
        stage = args.dispatch_stage or report.stage_count
        stack = dispatch_stack(system, values, stage, opts)
        render_figures(report, stack, stage, outdir, trace)
    print(text, end="")
    print(f"objective {objective:.6f} $; artifacts in {outdir}")
    return EXIT_OK


def cmd_report(args) -> int:
    doc = read_solution(args.solution)
    system, _ = _load_instance(args)
    require_matching_digest(doc, system)
    values = solution_values(doc)
    opts = solution_options(doc)
    report = build_report(system, values, opts, method=doc.get("method", "?"))
    outdir = Path(args.outdir)
    written = write_report(report, system, values, outdir, opts,
                           args.dispatch_stage)
    trace = None
    if doc.get("trace"):
        trace = [argparse.Namespace(**r) for r in doc["trace"]]
        write_trace(trace, outdir / "trace.csv")
    if not args.no_figures:
        stage = args.dispatch_stage or report.stage_count
        stack = dispatch_stack(system, values, stage, opts)
        render_figures(report, stack, stage, outdir, trace)
    print(format_plan_text(report), end="")
    print(f"wrote {len(written)} tables to {outdir}")
    return EXIT_OK


def cmd_export_milp(args) -> int:
    system, _ = _load_instance(args)
    compact = build_milp(system, _build_opts(args))
    lp = compact.to_milp()
    write_lp_format(lp, args.output,
                    comments=(f"instance {system.name}",
                              f"digest {system.digest or 'n/a'}"))
    print(f"wrote {lp.a_eq.shape[0] + lp.a_ge.shape[0]} rows x "
          f"{len(lp.c)} cols to {args.output}")
    return EXIT_OK


def cmd_check(args) -> int:
    doc = read_solution(args.solution)
    system, _ = _load_instance(args)
    require_matching_digest(doc, system)
    values = solution_values(doc)
    opts = solution_options(doc)
    bad = check_solution(system, values, opts, tolerance=args.tolerance)
    if bad:
        print(f"solution check failed on {len(bad)} rows:", file=sys.stderr)
        for row, viol in bad[:20]:
            print(f"  {row}: violation {viol:.6g}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"solution check passed at tolerance {args.tolerance:g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridplan",
        description="multi-stage transmission, generation and storage "
                    "expansion planning")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster",
                       help="extract representative hours from a series")
    p.add_argument("series", help="hourly CSV: load_factor, wind_factor, "
                                  "pv_factor columns")
    p.add_argument("-k", type=_positive_int, required=True,
                   help="number of representatives")
    p.add_argument("-o", "--output", required=True,
                   help="representative-set JSON to write")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("solve", help="plan an instance and write the report")
    _instance_args(p)
    _toggle_args(p)
    p.add_argument("--method", choices=("benders", "monolithic"),
                   default="benders")
    p.add_argument("--benders-mode", choices=("plain", "pareto"),
                   default="pareto")
    p.add_argument("--tau", type=float, default=1e-6,
                   help="relative optimality gap to close")
    p.add_argument("--iter-limit", type=_positive_int, default=200)
    p.add_argument("--outdir", default="plan_out")
    p.add_argument("--dispatch-stage", type=_positive_int, default=None,
                   help="stage for the dispatch table (default: last)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", help="re-derive series from a stored solution")
    p.add_argument("solution", help="solution JSON from solve")
    _instance_args(p)
    p.add_argument("--outdir", default="plan_out")
    p.add_argument("--dispatch-stage", type=_positive_int, default=None)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export-milp",
                       help="write the monolithic model in LP text form")
    _instance_args(p)
    _toggle_args(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_export_milp)

    p = sub.add_parser("check", help="re-verify a stored solution")
    p.add_argument("solution", help="solution JSON from solve")
    _instance_args(p)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    except (InstanceError, ReportError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
