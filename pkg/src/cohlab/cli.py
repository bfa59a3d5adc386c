"""Command line entry point.

Subcommands: ``sdp solve`` for raw problem files, ``measure`` for single
quantities, ``game verify`` for the discrimination-ratio check, and
``suite run`` for the property suites.  Suite exit codes: 0 when every
record is verified or inconclusive, 1 on any falsified record, 2 on input
errors, 3 when the solver failure rate exceeds one percent.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import discgame, harness, measures, sdp
from .harness import SuiteConfig, parse_dims
from .qmat import load_density


def _parse_groups(text: str) -> list[list[int]]:
    return [[int(i) for i in part.split(",") if i != ""]
            for part in text.split("|")]


def _measure_result_doc(res: measures.MeasureResult,
                        with_certificate: bool) -> dict:
    doc = {
        "value_bits": res.value if math.isfinite(res.value) else "inf",
        "method": res.method,
        "gap": res.gap,
        "flags": sorted(res.flags),
    }
    if with_certificate and res.certificate:
        cert = {}
        for key, val in res.certificate.items():
            if isinstance(val, np.ndarray):
                cert[key] = [[[float(z.real), float(z.imag)] for z in row]
                             for row in val]
            elif isinstance(val, (int, float, str, tuple, list)):
                cert[key] = val if not isinstance(val, tuple) else list(val)
        doc["certificate"] = cert
    return doc


def _write_or_print(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sdp_solve(args) -> int:
    problem = sdp.load_problem(args.file)
    sol = sdp.solve(problem, sdp.SolveOptions(gap_tol=args.gap_tol,
                                              feas_tol=args.feas_tol,
                                              max_iters=args.max_iters))
    print(f"status: {sol.status}")
    print(f"primal_value: {sol.primal_value!r}")
    print(f"dual_value: {sol.dual_value!r}")
    print(f"gap: {sol.gap!r}")
    print(f"max_residual: {sol.max_residual!r}")
    print(f"iterations: {sol.iterations}")
    if sol.status == sdp.STATUS_OPTIMAL:
        rep = sdp.verify_solution(problem, sol, tol=10 * args.feas_tol)
        print(f"certificate_check: {'ok' if rep.ok else 'FAILED'}")
        for v in rep.violations:
            print(f"  {v.describe()}")
        return 0
    return 1


def cmd_measure(args) -> int:
    state = load_density(args.state)
    smooth = measures.SmoothParams(args.eps)
    pattern = [int(p) for p in args.pattern.split(",") if p != ""] \
        if args.pattern else [0]
    name = args.name
    if name == "cr":
        res = measures.rel_entropy_coherence(state, pattern)
    elif name == "cmax":
        res = measures.max_coherence(state, pattern, smooth)
    elif name == "cmin":
        res = measures.min_coherence(state, pattern, smooth,
                                     method=args.method)
    elif name == "emax":
        res = measures.max_entanglement(state, _parse_groups(args.partition),
                                        smooth)
    elif name == "emin":
        res = measures.min_entanglement(state, _parse_groups(args.partition),
                                        smooth)
    elif name == "discord":
        res = measures.discord(state, args.measured)
    elif name == "cmi":
        groups = _parse_groups(args.groups)
        if len(groups) != 3:
            raise ValueError("--groups needs three |-separated groups")
        val = measures.conditional_mutual_information(state, *groups)
        res = measures.MeasureResult(val, measures.METHOD_CLOSED_FORM)
    elif name == "monogamy":
        parts = _parse_groups(args.parts)
        memory = [int(i) for i in args.memory.split(",")]
        val = measures.monogamy_score(state, parts, memory)
        res = measures.MeasureResult(val, measures.METHOD_CLOSED_FORM)
    else:
        raise ValueError(f"unknown measure {name!r}")
    _write_or_print(_measure_result_doc(res, args.certificate), args.out)
    return 0


def cmd_game_verify(args) -> int:
    state = load_density(args.state)
    res = discgame.verify_discrimination_advantage(
        state, random_instruments=args.random_instruments)
    doc = {
        "p_succ": res.p_succ,
        "p_succ_iq": res.p_succ_iq,
        "ratio": res.ratio,
        "notes": harness._round_floats(res.notes),
    }
    _write_or_print(doc, args.out)
    ok = res.notes["ratio_deviation"] <= args.tol
    return 0 if ok else 1


def cmd_suite_run(args) -> int:
    dims = tuple(parse_dims(d) for d in args.dims.split(",")) \
        if args.dims else None
    eps_list = tuple(float(e) for e in args.eps.split(",")) \
        if args.eps else harness.DEFAULT_EPS_GRID
    cfg = SuiteConfig(
        suites=tuple(args.suite.split(",")),
        dims=dims,
        trials=args.trials,
        seed=args.seed,
        eps_list=eps_list,
        workers=args.workers,
        random_instruments=args.random_instruments,
        include_timings=args.timings,
    )
    report = harness.run_suite(cfg)
    if args.report:
        harness.emit_report(report, "json", args.report,
                            include_timings=args.timings)
    if args.csv:
        harness.emit_report(report, "csv", args.csv,
                            include_timings=args.timings)
    agg = report.aggregate
    print(f"records: {agg['records']}  verdicts: {agg['verdicts']}")
    if agg["solver_failure_rate"] > 0.01:
        return 3
    if agg["verdicts"].get(harness.VERDICT_FALSIFIED, 0) > 0:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohlab",
        description="coherence/entanglement measure laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sdp = sub.add_parser("sdp", help="raw SDP operations")
    sdp_sub = p_sdp.add_subparsers(dest="sdp_command", required=True)
    p_solve = sdp_sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("file")
    p_solve.add_argument("--gap-tol", type=float, default=sdp.DEFAULT_GAP_TOL)
    p_solve.add_argument("--feas-tol", type=float,
                         default=sdp.DEFAULT_FEAS_TOL)
    p_solve.add_argument("--max-iters", type=int,
                         default=sdp.DEFAULT_MAX_ITERS)
    p_solve.set_defaults(func=cmd_sdp_solve)

    p_meas = sub.add_parser("measure", help="evaluate one measure")
    p_meas.add_argument("--name", required=True,
                        choices=["cr", "cmax", "cmin", "emax", "emin",
                                 "discord", "cmi", "monogamy"])
    p_meas.add_argument("--state", required=True)
    p_meas.add_argument("--pattern", default="",
                        help="comma list of classical factor indices")
    p_meas.add_argument("--eps", type=float, default=0.0)
    p_meas.add_argument("--out", default=None)
    p_meas.add_argument("--certificate", action="store_true")
    p_meas.add_argument("--method", default="auto",
                        choices=["auto", "closed_form", "sdp"])
    p_meas.add_argument("--partition", default="0|1",
                        help="|-separated factor groups (emax/emin)")
    p_meas.add_argument("--measured", type=int, default=0,
                        help="measured factor (discord)")
    p_meas.add_argument("--groups", default="0|1|2",
                        help="three |-separated groups (cmi)")
    p_meas.add_argument("--parts", default="0|1",
                        help="|-separated part groups (monogamy)")
    p_meas.add_argument("--memory", default="",
                        help="comma list of memory factors (monogamy)")
    p_meas.set_defaults(func=cmd_measure)

    p_game = sub.add_parser("game", help="discrimination game")
    game_sub = p_game.add_subparsers(dest="game_command", required=True)
    p_verify = game_sub.add_parser("verify")
    p_verify.add_argument("--state", required=True)
    p_verify.add_argument("--random-instruments", type=int, default=0)
    p_verify.add_argument("--out", default=None)
    p_verify.add_argument("--tol", type=float, default=1e-6)
    p_verify.set_defaults(func=cmd_game_verify)

    p_suite = sub.add_parser("suite", help="property suites")
    suite_sub = p_suite.add_subparsers(dest="suite_command", required=True)
    p_run = suite_sub.add_parser("run")
    p_run.add_argument("--suite", default="all",
                       help="all or comma list of S1..S12")
    p_run.add_argument("--dims", default=None,
                       help="comma list of dims specs like 2x2x2")
    p_run.add_argument("--trials", type=int, default=20)
    p_run.add_argument("--seed", type=int, default=42)
    p_run.add_argument("--eps", default=None, help="comma list of radii")
    p_run.add_argument("--report", default=None)
    p_run.add_argument("--csv", default=None)
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--random-instruments", type=int, default=0)
    p_run.add_argument("--timings", action="store_true")
    p_run.set_defaults(func=cmd_suite_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except measures.SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
