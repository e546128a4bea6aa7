import csv

import numpy as np
import pytest

from drawauction.mechanisms import Draw, DrawParams, ParameterError, SecondPrice
from drawauction.model import BimodalSpec, MixtureSampler
from drawauction.simulation import (CSV_HEADER, ExperimentConfig, estimate_profit, grid_search_draw,
                                    grid_search_reserve, price_grid, reserve_grid, robustness_scenarios,
                                    run_experiment, table_configs, write_csv)

SPEC = BimodalSpec(0.2, 0.6, 0.0, 0.9, 0.1)


def test_constant_sampler_has_no_error():
    s = MixtureSampler(2, 1.0, (0.0, 0.1), (0.5, 0.5))
    r = estimate_profit(SecondPrice(), s, 1000)
    assert r.mean == pytest.approx(0.5) and r.std_error == 0.0


def test_second_order_statistic():
    s = MixtureSampler(4, 1.0, (0.0, 0.1), (0.6, 1.0), seed=9)
    r = estimate_profit(SecondPrice(), s, 100_000)
    assert abs(r.mean - 0.84) <= 3 * r.std_error
    assert r.iters == 100_000


def test_single_iteration():
    r = estimate_profit(SecondPrice(), SPEC.sampler(3), 1)
    assert r.std_error == 0.0 and r.iters == 1
    with pytest.raises(ParameterError):
        estimate_profit(SecondPrice(), SPEC.sampler(3), 0)


def test_k1_draw_equals_second_price_estimate():
    s = SPEC.sampler(5, seed=4)
    a = estimate_profit(Draw(DrawParams(1, 0.33)), s, 20_000, stream=(9,))
    b = estimate_profit(SecondPrice(), s, 20_000, stream=(9,))
    assert a == b


def test_estimates_are_deterministic():
    s = SPEC.sampler(5, seed=4)
    assert estimate_profit(SecondPrice(0.1), s, 5000) == estimate_profit(SecondPrice(0.1), s, 5000)
    assert estimate_profit(SecondPrice(0.1), s, 5000, seed=5) != estimate_profit(SecondPrice(0.1), s, 5000)


def test_price_grids():
    assert np.allclose(price_grid(0.25), [0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(price_grid(0.25, include_lo=False), [0.25, 0.5, 0.75, 1.0])
    g = reserve_grid(SPEC, 0.1)
    assert np.allclose(g, [0, 0.1, 0.2, 0.6, 0.7, 0.8, 0.9, 1.0])


def test_draw_grid_single_cell():
    one = grid_search_draw(SPEC.sampler(5, seed=2), [2], [0.4], 2000)
    assert (one.best_k, one.best_c) == (2, 0.4)


def test_draw_grid_is_argmax_of_cells():
    s = SPEC.sampler(5, seed=2)
    ks, cs = (1, 2, 3), (0.2, 0.4, 0.6)
    best = grid_search_draw(s, ks, cs, 2000)
    cells = {(k, c): estimate_profit(Draw(DrawParams(k, c)), s, 2000, stream=(1, k, j)).mean
             for k in ks for j, c in enumerate(cs)}
    top = max(cells.values())
    assert best.mean == top
    assert (best.best_k, best.best_c) == min(kc for kc, v in cells.items() if v == top)


def test_draw_grid_dominates_second_price():
    s = SPEC.sampler(5, seed=3)
    best = grid_search_draw(s, range(1, 5), price_grid(0.05, include_lo=False), 10_000)
    sp = grid_search_draw(s, [1], [0.05], 10_000)
    assert best.mean >= sp.mean


def test_draw_grid_rejects_empty():
    with pytest.raises(ParameterError):
        grid_search_draw(SPEC.sampler(5), [], [0.5], 10)


def test_reserve_search():
    s = MixtureSampler(5, 0.0, (0.0, 0.2), (0.6, 1.0), seed=1)
    assert grid_search_reserve(s, SPEC, 5000, step=0.01).best_reserve <= 0.2
    only0 = grid_search_reserve(SPEC.sampler(5, seed=1), SPEC, 5000, grid=[0.0])
    plain = estimate_profit(SecondPrice(), SPEC.sampler(5, seed=1), 5000, stream=(2, 0))
    assert only0.best_reserve == 0.0 and only0.mean == plain.mean
    full = grid_search_reserve(SPEC.sampler(5, seed=1), SPEC, 5000, step=0.01)
    assert full.mean >= only0.mean


def test_reserve_ties_prefer_smaller():
    # nothing ever sells above 0.3, so every reserve in [b, 1] earns zero
    s = MixtureSampler(3, 0.0, (0.0, 0.2), (0.6, 1.0))
    assert grid_search_reserve(s, SPEC, 100, grid=[0.9, 0.7, 0.8]).best_reserve == 0.7


def test_robustness_scenarios():
    sc = robustness_scenarios(0.2)
    assert len(sc) == 15
    assert sc.intervals[0] == (0.0, 0.2)
    assert sc.intervals[1:3] == ((0.0, 0.1), (0.1, 0.2))
    assert all(0 <= lo < hi <= 0.2 + 1e-15 for lo, hi in sc.intervals)


def test_table_configs():
    configs = table_configs()
    assert len(configs) == 20
    assert {(c.np_target, c.a, c.b) for c in configs} == {
        (x, a, b) for x in (0.1, 0.2, 0.3, 0.4, 0.5) for a in (0.2, 0.4) for b in (0.6, 0.8)}
    assert configs[0].spec.p2 == pytest.approx(0.02)


def small(**kw):
    base = dict(np_target=0.1, a=0.2, b=0.6, n=5, iters=3000, seed=1, c_step=0.1, vstar_step=0.05)
    base.update(kw)
    return ExperimentConfig(**base)


def test_experiment_rows(tmp_path):
    e = run_experiment(small())
    rows = e.rows()
    assert [r.mech for r in rows] == ["second-price", "second-price-reserve", "draw", "myerson"]
    draw = next(r for r in rows if r.mech == "draw")
    assert draw.pct_of_draw == 100.0 and draw.k is not None and draw.c is not None
    write_csv(tmp_path / "t.csv", rows)
    with open(tmp_path / "t.csv") as f:
        got = list(csv.reader(f))
    assert got[0] == CSV_HEADER and len(got) == 5
    assert got[3][7] == "100.000000"

    r = run_experiment(small(), "robustness", tuned=e.tuned)
    assert all(row.mode == "robustness" for row in r.rows())
    assert r.tuned is e.tuned


def test_experiment_is_worker_independent():
    a = run_experiment(small(iters=2000), workers=1)
    b = run_experiment(small(iters=2000), workers=2)
    assert a.rows() == b.rows()


def test_experiment_config_validation():
    with pytest.raises(ParameterError):
        small(iters=0)
    with pytest.raises(ParameterError):
        small(mechanisms=("second-price",))
    with pytest.raises(ParameterError):
        run_experiment(small(), "sideways")
