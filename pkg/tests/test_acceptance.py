"""Acceptance gate: one test per criterion, at the stated counts and
tolerances, printing a pass/fail line each.  The heavy criteria route
through the harness suites so they use the same deterministic sampling
and parallel map as the CLI."""

import math
import time

import numpy as np
import pytest

from cohlab import discgame as dg
from cohlab import measures as ms
from cohlab import sdp
from cohlab.harness import SuiteConfig, emit_report, run_suite
from cohlab.measures import (max_coherence, max_coherence_dual_problem,
                             max_coherence_problem, max_entanglement,
                             min_coherence, min_entanglement,
                             monogamy_score, rel_entropy_coherence)
from cohlab.qmat import DensityMatrix
from cohlab.sampler import SeededRng, ginibre_state


def _report(name: str, ok: bool, details: str) -> None:
    print(f"[{name}] {'PASS' if ok else 'FAIL'} {details}")
    assert ok, f"{name}: {details}"


def _records(report, item_prefix=None, kind=None):
    out = []
    for r in report.records:
        if item_prefix and not r.item.startswith(item_prefix):
            continue
        if kind and r.kind != kind:
            continue
        out.append(r)
    return out


def test_criterion_01_discrimination_ratio():
    t0 = time.time()
    worst_dev = 0.0
    worst_iq = 0.0
    for dims in ((2, 2), (3, 2)):
        for trial in range(100):
            rng = SeededRng(1000, trial + (0 if dims == (2, 2) else 100))
            rho = ginibre_state(dims, int(np.prod(dims)), rng)
            res = dg.verify_discrimination_advantage(rho)
            worst_dev = max(worst_dev, res.notes["ratio_deviation"])
            worst_iq = max(worst_iq, abs(res.p_succ_iq - 1.0 / dims[0]))
    elapsed = time.time() - t0
    ok = worst_dev <= 1e-6 and worst_iq <= 1e-9 and elapsed < 120
    _report("criterion 1", ok,
            f"max |ratio - 2^coherence| = {worst_dev:.2e}, "
            f"max |p_iq - 1/d| = {worst_iq:.2e}, {elapsed:.0f}s")


def test_criterion_02_duality_and_certificates():
    worst_gap = 0.0
    all_ok = True
    for dims in ((2, 2), (2, 3)):
        side = int(np.prod(dims))
        for trial in range(100):
            rng = SeededRng(2000, trial + (0 if dims == (2, 2) else 100))
            rank = side if trial % 4 else max(1, side - 1)
            rho = ginibre_state(dims, rank, rng)
            p_sol = sdp.solve(max_coherence_problem(rho, [0], 0.0))
            d_sol = sdp.solve(max_coherence_dual_problem(rho, [0]))
            worst_gap = max(worst_gap,
                            abs(p_sol.primal_value - d_sol.primal_value))
            all_ok &= sdp.verify_solution(
                max_coherence_problem(rho, [0], 0.0), p_sol, 1e-6).ok
            all_ok &= sdp.verify_solution(
                max_coherence_dual_problem(rho, [0]), d_sol, 1e-6).ok
    ok = worst_gap <= 1e-7 and all_ok
    _report("criterion 2", ok,
            f"max primal/dual disagreement = {worst_gap:.2e}, "
            f"certificates ok = {all_ok}")


def test_criterion_03_exact_values(bell_state, plus_state):
    vals = {
        "cr(bell|A)": rel_entropy_coherence(bell_state, [0]).value,
        "cmax(bell|A)": max_coherence(bell_state, [0]).value,
        "cmin(bell|A)": min_coherence(bell_state, [0]).value,
        "cr(plus)": rel_entropy_coherence(plus_state, [0]).value,
        "cmax(plus)": max_coherence(plus_state, [0]).value,
        "cmin(plus)": min_coherence(plus_state, [0]).value,
    }
    worst = max(abs(v - 1.0) for v in vals.values())
    emax = max_entanglement(bell_state, [[0], [1]]).value
    emin = min_entanglement(bell_state, [[0], [1]]).value
    worst_ent = max(abs(emax - 1.0), abs(emin - 1.0))
    ok = worst <= 1e-7 and worst_ent <= 1e-6
    _report("criterion 3", ok,
            f"max |coherence - 1| = {worst:.2e}, "
            f"max |entanglement - 1| = {worst_ent:.2e}")


def test_criterion_04_ordering_and_sandwich():
    cfg = SuiteConfig(suites=("S1",), dims=((2, 2),), trials=500, seed=4000)
    report = run_suite(cfg)
    slacks = [r.value for r in report.records if r.kind == "inequality"]
    worst = min(slacks)
    ok = worst >= -1e-7 and len(slacks) >= 500 * 6
    _report("criterion 4", ok,
            f"{len(slacks)} inequality slacks on 500 states, "
            f"worst = {worst:.2e}")


def test_criterion_05_distribution_and_basis_identity():
    cfg = SuiteConfig(suites=("S2",), dims=((2, 2),), trials=300, seed=5000)
    report = run_suite(cfg)
    ineq = [r.value for r in report.records if r.kind == "inequality"]
    idents = [r.value for r in report.records if r.kind == "identity"]
    ok = min(ineq) >= -1e-7 and max(idents) <= 1e-9
    _report("criterion 5", ok,
            f"worst slack = {min(ineq):.2e}, "
            f"worst identity deviation = {max(idents):.2e}")


def test_criterion_06_monogamy(ghz_state):
    cfg = SuiteConfig(suites=("S6",), dims=((2, 2, 2),), trials=200,
                      seed=6000)
    report = run_suite(cfg)
    slacks = [r.value for r in report.records]
    ghz_score = monogamy_score(ghz_state, [[0], [1]], [2])
    ok = min(slacks) >= -1e-7 and abs(ghz_score + 1.0) <= 1e-8
    _report("criterion 6", ok,
            f"worst -score = {min(slacks):.2e} on 200 states, "
            f"GHZ score = {ghz_score:.10f}")


def test_criterion_07_conditional_bounds():
    cfg = SuiteConfig(suites=("S8",), dims=((2, 2, 2),), trials=200,
                      seed=7000)
    report = run_suite(cfg)
    ineq = [r for r in report.records if r.kind == "inequality"]
    idents = [r.value for r in report.records if r.kind == "identity"]
    cmi_recs = [r.value for r in ineq if r.item == "cmi_nonnegative"]
    other = [r.value for r in ineq if r.item != "cmi_nonnegative"]
    ok = (min(other) >= -1e-7 and max(idents) <= 1e-8
          and min(cmi_recs) >= 0.0)
    _report("criterion 7", ok,
            f"worst slack = {min(other):.2e}, "
            f"worst identity = {max(idents):.2e}, "
            f"min augmented cmi = {min(cmi_recs):.2e}")


def test_criterion_08_smooth_lemmas():
    eps_grid = (0.0, 0.01, 0.05, 0.1)
    # bipartite split and entanglement split, exact dims, 100 states each
    rep_split = run_suite(SuiteConfig(suites=("S3", "S4"), trials=100,
                                      seed=8000, eps_list=eps_grid))
    # chain rule with memory, tripartite, 100 states
    rep_chain = run_suite(SuiteConfig(suites=("S7",), trials=100, seed=8100,
                                      eps_list=eps_grid))
    # entanglement chain may be inconclusive under the relaxation
    rep_ent = run_suite(SuiteConfig(suites=("S5",), trials=25, seed=8200,
                                    eps_list=eps_grid))
    falsified = sum(rep.aggregate["verdicts"].get("falsified", 0)
                    for rep in (rep_split, rep_chain, rep_ent))
    errors = sum(rep.aggregate["verdicts"].get("error", 0)
                 for rep in (rep_split, rep_chain, rep_ent))
    mono = [r.value for r in rep_split.records
            if r.item == "smooth_monotone"]
    ok = falsified == 0 and errors == 0 and min(mono) >= -1e-7
    _report("criterion 8", ok,
            f"falsified = {falsified}, errors = {errors}, "
            f"worst monotonicity slack = {min(mono):.2e}")


def test_criterion_09_gentle_measurement():
    cfg = SuiteConfig(suites=("S9",), dims=((2, 2),), trials=200, seed=9000)
    report = run_suite(cfg)
    slacks = [r.value for r in report.records]
    ok = len(slacks) == 200 and min(slacks) >= -1e-7
    _report("criterion 9", ok,
            f"worst bound slack over 200 triples = {min(slacks):.2e}")


def test_criterion_10_max_coherence_properties():
    cfg = SuiteConfig(suites=("S11",), dims=((2, 2),), trials=100,
                      seed=10000)
    report = run_suite(cfg)
    by_item: dict[str, list[float]] = {}
    for r in report.records:
        by_item.setdefault(r.item, []).append(r.value)
    worst_iq = max(by_item["positivity_iq_zero"])
    worst = min(min(v) for k, v in by_item.items()
                if k != "positivity_iq_zero")
    n_inst = len(by_item["strong_monotone"])
    ok = worst_iq <= 1e-6 and worst >= -1e-7 and n_inst >= 50
    _report("criterion 10", ok,
            f"max |value on IQ states| = {worst_iq:.2e}, worst slack = "
            f"{worst:.2e}, instruments = {n_inst}")


def test_criterion_11_deterministic_reports(tmp_path):
    cfg = SuiteConfig(suites=("S1", "S2", "S9", "S10"), trials=3, seed=424242,
                      workers=2, eps_list=(0.0, 0.05))
    blobs = []
    for k in range(2):
        report = run_suite(cfg)
        jpath = str(tmp_path / f"rep{k}.json")
        cpath = str(tmp_path / f"rep{k}.csv")
        emit_report(report, "json", jpath)
        emit_report(report, "csv", cpath)
        blobs.append((open(jpath, "rb").read(), open(cpath, "rb").read()))
    ok = blobs[0] == blobs[1]
    _report("criterion 11", ok,
            f"json bytes equal = {blobs[0][0] == blobs[1][0]}, "
            f"csv bytes equal = {blobs[0][1] == blobs[1][1]}")
