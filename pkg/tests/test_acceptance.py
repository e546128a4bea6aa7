"""Acceptance criteria.

Each test records a PASS/FAIL line (printed at the end of the session) and
then asserts the same condition, including its time budget.
"""
import filecmp
import math
import time

import numpy as np
import pytest

from conftest import VERDICTS
from drawauction.cli import main
from drawauction.mechanisms import DrawParams, Outcome, draw_auction, second_price
from drawauction.myerson import myerson_params
from drawauction.simulation import ExperimentConfig, run_experiment, table_configs
from drawauction.verification import (check_classifier, check_dominance, hull_defects,
                                      numerical_myerson_oracle, params_gap, random_spec)

SEED = 20240607


def verdict(name, ok, detail):
    VERDICTS[name] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


def test_worked_example_golden():
    t = time.perf_counter()
    p = DrawParams(2, 0.4)
    a = draw_auction(p, [0.7, 0.6, 0.3, 0.1])
    b = draw_auction(p, [0.7, 0.45, 0.3, 0.1])
    c = draw_auction(p, [0.45, 0.4, 0.3, 0.1])
    elapsed = time.perf_counter() - t
    ok = (a == Outcome(np.array([1.0, 0, 0, 0]), np.array([0.6, 0, 0, 0]))
          and b == Outcome(np.array([1.0, 0, 0, 0]), np.array([0.4, 0, 0, 0]))
          and np.array_equal(c.alloc, [0.5, 0.5, 0, 0])
          and np.array_equal(c.pay[:2] / c.alloc[:2], [0.3, 0.3])
          and not c.pay[2:].any()
          and elapsed < 1e-3)
    verdict("worked example golden", ok, f"three outcomes exact, {elapsed * 1e3:.3f} ms")


def test_k1_reduction():
    rng = np.random.default_rng(SEED)
    cases = [(rng.random(rng.integers(2, 9)), rng.uniform(1e-9, 1.0)) for _ in range(10_000)]
    t = time.perf_counter()
    bad = sum(draw_auction(DrawParams(1, c), x) != second_price(x) for x, c in cases)
    elapsed = time.perf_counter() - t
    verdict("k=1 reduction", bad == 0 and elapsed < 1.0,
            f"{bad} mismatches in 10000 instances, {elapsed:.2f} s")


def test_myerson_oracle_agreement():
    numerical_myerson_oracle(random_spec(np.random.default_rng(0)), 10_001)  # compile outside the clock
    rng = np.random.default_rng(SEED)
    specs = [random_spec(rng) for _ in range(100)]
    t = time.perf_counter()
    gaps = [params_gap(myerson_params(s), numerical_myerson_oracle(s, 1_000_001)) for s in specs]
    elapsed = time.perf_counter() - t
    worst = max(gaps)
    verdict("myerson oracle agreement", worst <= 1e-3 and elapsed < 60,
            f"max gap {worst:.2e} over {len(specs)} specs ({sum(s.eps > 0 for s in specs)} with gap mass), "
            f"{elapsed:.1f} s")


def test_hull_properties():
    rng = np.random.default_rng(SEED + 1)
    # continuity is only defined with gap mass; the other properties are
    # checked on priors with and without it
    with_gap = [s for s in (random_spec(rng, eps_share=1.0) for _ in range(200)) if s.eps > 0][:100]
    without = [random_spec(rng, eps_share=0.0) for _ in range(100)]
    t = time.perf_counter()
    defects = [hull_defects(s) for s in with_gap + without]
    elapsed = time.perf_counter() - t
    above = max(d["above"] for d in defects)
    convex = max(d["convexity"] for d in defects)
    mono = max(d["monotone"] for d in defects)
    jump = max(max(d["jump_p1"], d["jump_y"]) for d in defects[:len(with_gap)])
    ok = above <= 1e-9 and convex <= 1e-9 and mono <= 1e-12 and jump <= 1e-9 and len(with_gap) == 100
    verdict("hull properties", ok and elapsed < 10,
            f"G-H {above:.1e}, convexity {convex:.1e}, g drop {mono:.1e}, H jump {jump:.1e}, "
            f"{len(defects)} specs, {elapsed:.1f} s")


def test_dominance_suite():
    t = time.perf_counter()
    rep = check_dominance(10_000, seed=SEED)
    elapsed = time.perf_counter() - t
    verdict("dominance suite", rep.ok and elapsed < 120,
            f"{len(rep.violations)} violations in {rep.trials} trials x {rep.deviations // rep.trials} "
            f"deviations, max gain {rep.max_gain:.1e}, {elapsed:.1f} s")


def test_case_classifier():
    t = time.perf_counter()
    rep = check_classifier(100_000, seed=SEED)
    elapsed = time.perf_counter() - t
    verdict("case classifier", rep.ok and rep.max_error <= 1e-12 and elapsed < 30,
            f"{len(rep.failures)} failures, max error {rep.max_error:.1e}, "
            f"{len(rep.counts)} of 30 (regime, case) cells hit, {elapsed:.1f} s")


@pytest.fixture(scope="module")
def table_run():
    t = time.perf_counter()
    runs = [run_experiment(cfg) for cfg in
            table_configs(n=5, iters=100_000, seed=SEED, c_step=0.05, vstar_step=0.005)]
    return runs, time.perf_counter() - t


def _label(e):
    c = e.config
    return f"np={c.np_target} a={c.a} b={c.b}"


def test_revenue_ordering(table_run):
    runs, elapsed = table_run
    pairs = [("myerson", "draw"), ("draw", "second-price-reserve"), ("second-price-reserve", "second-price")]
    broken = [f"{_label(e)} {hi}<{lo} ({e.gap(hi, lo):+.1f} se)"
              for e in runs for hi, lo in pairs if e.gap(hi, lo) < -2]
    verdict("revenue ordering (n=5)", not broken and elapsed < 900,
            f"{len(broken)} of {3 * len(runs)} inequalities violated, {elapsed:.0f} s"
            + (f"; e.g. {'; '.join(broken[:3])}" if broken else ""))


def test_efficiency_bound(table_run):
    runs, _ = table_run
    ratios = {_label(e): e.results["draw"].mean / e.results["myerson"].mean for e in runs}
    low = {k: v for k, v in ratios.items() if v < 0.95}
    verdict("efficiency bound (n=5)", not low,
            f"draw/myerson in [{min(ratios.values()):.4f}, {max(ratios.values()):.4f}], "
            f"{len(low)} of {len(ratios)} configs below 0.95")


def test_robustness_direction():
    t = time.perf_counter()
    cfg = ExperimentConfig(0.1, 0.2, 0.6, n=5, iters=100_000, seed=SEED, c_step=0.05, vstar_step=0.005)
    original = run_experiment(cfg)
    robust = run_experiment(cfg, "robustness", tuned=original.tuned)
    elapsed = time.perf_counter() - t
    gaps = {m: robust.gap("draw", m) for m in robust.results if m != "draw"}
    pct = {r.mech: round(r.pct_of_draw, 2) for r in robust.rows()}
    ok = all(g > 2 for g in gaps.values()) and elapsed < 300
    verdict("robustness direction (n=5)", ok,
            f"tuned k={original.tuned.draw.best_k} c={original.tuned.draw.best_c}; pct of draw {pct}; "
            f"gaps {', '.join(f'{m} {g:+.1f} se' for m, g in gaps.items())}; {elapsed:.0f} s")


def test_determinism(tmp_path):
    args = ["reproduce-tables", "--iters", "3000", "--c-step", "0.1", "--vstar-step", "0.02",
            "--seed", str(SEED)]
    t = time.perf_counter()
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    once = time.perf_counter() - t
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "c"), "--workers", "2"]) == 0
    names = ["table1.csv", "table2.csv", "table3.csv"]
    same_rerun = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)[0] == names
    same_workers = filecmp.cmpfiles(tmp_path / "a", tmp_path / "c", names, shallow=False)[0] == names
    verdict("determinism", same_rerun and same_workers,
            f"rerun identical: {same_rerun}, 1 vs 2 workers identical: {same_workers}, "
            f"one table run {once:.1f} s")
