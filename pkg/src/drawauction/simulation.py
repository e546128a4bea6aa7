"""Monte Carlo revenue estimation, parameter tuning and the experiment runner.

Every estimate draws its profiles from a stream addressed by a tuple of
integers (see :func:`drawauction.model.stream_rng`).  The streams used here:

    (1, k, j)   draw-auction grid cell with ``k`` and the ``j``-th price
    (2, j)      second-price reserve grid cell ``j``
    (3,)        final comparison of the tuned mechanisms
    (4, s)      robustness scenario ``s``

Tuning and the final comparison use disjoint streams, so the reported
revenue of a tuned mechanism is not biased upward by the search.  All
mechanisms in a comparison share the same profiles.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .mechanisms import Draw, DrawParams, ParameterError, SecondPrice
from .model import BLOCK, BimodalSpec, MixtureSampler, profile_block
from .myerson import MyersonAuction, MyersonParams, myerson_params

MECHANISMS = ("second-price", "second-price-reserve", "draw", "myerson")
CSV_HEADER = ["np", "a", "b", "n", "mech", "mean", "std_error", "pct_of_draw", "k", "c", "reserve", "mode"]

DRAW_STREAM, RESERVE_STREAM, FINAL_STREAM, SCENARIO_STREAM = 1, 2, 3, 4


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    std_error: float
    iters: int
    best_k: int | None = None
    best_c: float | None = None
    best_reserve: float | None = None


def revenues(mechanism, sampler: MixtureSampler, iters: int, stream=()) -> np.ndarray:
    """Per-profile seller revenue under truthful bidding."""
    out = np.empty(iters)
    # one block of profiles at a time keeps memory flat for large iters
    for index, start in enumerate(range(0, iters, BLOCK)):
        m = min(BLOCK, iters - start)
        block = profile_block(sampler, tuple(stream), index)[:m]
        out[start:start + m] = mechanism.revenue(-np.sort(-block, axis=1))
    return out


def summarize(values: np.ndarray) -> EstimatorResult:
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimatorResult(float(values.mean()), se, n)


def estimate_profit(mechanism, sampler: MixtureSampler, iters: int, stream=(),
                    seed: int | None = None) -> EstimatorResult:
    """Average revenue of ``mechanism`` over ``iters`` truthful profiles."""
    if iters < 1:
        raise ParameterError("iters must be at least 1")
    if seed is not None:
        sampler = sampler.with_seed(seed)
    return summarize(revenues(mechanism, sampler, iters, stream))


def _task(args):
    mechanism, sampler, iters, stream = args
    return estimate_profit(mechanism, sampler, iters, stream)


def run_tasks(tasks: list, workers: int = 1) -> list[EstimatorResult]:
    """Evaluate ``(mechanism, sampler, iters, stream)`` tasks, results in task order."""
    if workers <= 1 or len(tasks) < 2:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def price_grid(step: float, lo: float = 0.0, hi: float = 1.0, include_lo: bool = True) -> np.ndarray:
    m = int(round((hi - lo) / step))
    grid = np.round(lo + step * np.arange(m + 1), 10)
    grid = grid[grid <= hi + 1e-12]
    return grid if include_lo else grid[1:]


def grid_search_draw(sampler: MixtureSampler, k_range, c_grid, iters: int,
                     seed: int | None = None, workers: int = 1) -> EstimatorResult:
    """Best Draw auction over ``k_range x c_grid``; ties prefer smaller k, then smaller c."""
    if seed is not None:
        sampler = sampler.with_seed(seed)
    ks, cs = list(k_range), [float(c) for c in c_grid]
    if not ks or not cs:
        raise ParameterError("empty parameter grid")
    cells = [(k, j, c) for k in ks for j, c in enumerate(cs)]
    tasks = [(Draw(DrawParams(k, c)), sampler, iters, (DRAW_STREAM, k, j)) for k, j, c in cells]
    results = run_tasks(tasks, workers)
    best = max(range(len(cells)), key=lambda i: (results[i].mean, -i))
    r = results[best]
    return EstimatorResult(r.mean, r.std_error, r.iters, best_k=cells[best][0], best_c=cells[best][2])


def reserve_grid(spec: BimodalSpec, step: float) -> np.ndarray:
    """Reserve prices on ``[0, a]`` and ``[b, 1]``."""
    return np.concatenate([price_grid(step, 0.0, spec.a), price_grid(step, spec.b, 1.0)])


def grid_search_reserve(sampler: MixtureSampler, spec: BimodalSpec, iters: int, step: float = 0.005,
                        grid=None, seed: int | None = None, workers: int = 1) -> EstimatorResult:
    """Best second-price reserve; ties prefer the smaller reserve."""
    if seed is not None:
        sampler = sampler.with_seed(seed)
    grid = reserve_grid(spec, step) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("empty reserve grid")
    tasks = [(SecondPrice(float(r)), sampler, iters, (RESERVE_STREAM, j)) for j, r in enumerate(grid)]
    results = run_tasks(tasks, workers)
    best = max(range(grid.size), key=lambda i: (results[i].mean, -grid[i]))
    r = results[best]
    return EstimatorResult(r.mean, r.std_error, r.iters, best_reserve=float(grid[best]))


@dataclass(frozen=True)
class ScenarioSet:
    intervals: tuple

    def __post_init__(self):
        for lo, hi in self.intervals:
            if not 0.0 <= lo < hi:
                raise ParameterError(f"bad scenario interval ({lo}, {hi})")

    def __len__(self):
        return len(self.intervals)


def robustness_scenarios(a: float, levels: int = 5) -> ScenarioSet:
    """First-mode supports ``((j-1) a / i, j a / i)`` for ``i = 1..levels``, ``j = 1..i``."""
    if not 0.0 < a < 1.0:
        raise ParameterError("need 0 < a < 1")
    return ScenarioSet(tuple(((j - 1) * a / i, j * a / i)
                             for i in range(1, levels + 1) for j in range(1, i + 1)))


@dataclass(frozen=True)
class ExperimentConfig:
    np_target: float
    a: float
    b: float
    n: int = 5
    iters: int = 100_000
    seed: int = 0
    c_step: float = 0.01
    vstar_step: float = 0.005
    k_range: tuple | None = None
    mechanisms: tuple = MECHANISMS

    def __post_init__(self):
        if self.iters < 1:
            raise ParameterError("iters must be at least 1")
        if self.c_step <= 0 or self.vstar_step <= 0:
            raise ParameterError("grid steps must be positive")
        bad = set(self.mechanisms) - set(MECHANISMS)
        if bad:
            raise ParameterError(f"unknown mechanisms {sorted(bad)}")
        if "draw" not in self.mechanisms:
            raise ParameterError("the draw auction is the reference mechanism and must be included")

    @property
    def spec(self) -> BimodalSpec:
        return BimodalSpec.from_np(self.np_target, self.n, self.a, self.b)

    @property
    def sampler(self) -> MixtureSampler:
        return self.spec.sampler(self.n, self.seed)

    @property
    def ks(self) -> tuple:
        return tuple(self.k_range) if self.k_range else tuple(range(1, self.n))


@dataclass(frozen=True)
class Tuned:
    """Mechanisms with parameters fixed from the original prior."""

    draw: EstimatorResult
    reserve: EstimatorResult
    myerson: MyersonParams

    def mechanisms(self, names) -> dict:
        build = {
            "second-price": lambda: SecondPrice(0.0, "second-price"),
            "second-price-reserve": lambda: SecondPrice(self.reserve.best_reserve, "second-price-reserve"),
            "draw": lambda: Draw(DrawParams(self.draw.best_k, self.draw.best_c)),
            "myerson": lambda: MyersonAuction(self.myerson),
        }
        return {name: build[name]() for name in names}


def tune(config: ExperimentConfig, workers: int = 1) -> Tuned:
    sampler = config.sampler
    c_grid = price_grid(config.c_step, include_lo=False)  # c must exceed v0 = 0
    draw = grid_search_draw(sampler, config.ks, c_grid, config.iters, workers=workers)
    if "second-price-reserve" in config.mechanisms:
        reserve = grid_search_reserve(sampler, config.spec, config.iters, config.vstar_step, workers=workers)
    else:
        reserve = EstimatorResult(0.0, 0.0, 0, best_reserve=0.0)
    return Tuned(draw, reserve, myerson_params(config.spec))


@dataclass(frozen=True)
class ExperimentRow:
    np: float
    a: float
    b: float
    n: int
    mech: str
    mean: float
    std_error: float
    pct_of_draw: float
    k: int | None = None
    c: float | None = None
    reserve: float | None = None
    mode: str = "original"

    def record(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, (int, np.integer)) or isinstance(v, str):
                return str(v)
            return f"{v:.6f}"
        return [fmt(getattr(self, name)) for name in CSV_HEADER]


@dataclass
class Experiment:
    config: ExperimentConfig
    tuned: Tuned
    results: dict = field(default_factory=dict)
    mode: str = "original"

    def rows(self, reference: str = "draw", mode: str | None = None) -> list[ExperimentRow]:
        cfg, t = self.config, self.tuned
        ref = self.results[reference].mean
        out = []
        for name in cfg.mechanisms:
            r = self.results[name]
            k = c = reserve = None
            if name == "draw":
                k, c = t.draw.best_k, t.draw.best_c
            elif name == "second-price-reserve":
                reserve = t.reserve.best_reserve
            elif name == "myerson":
                reserve = t.myerson.x_cut if t.myerson.beta0 < 0 else t.myerson.x_min
            pct = 100.0 * r.mean / ref if ref > 0 else float("nan")
            out.append(ExperimentRow(cfg.np_target, cfg.a, cfg.b, cfg.n, name, r.mean, r.std_error,
                                     pct, k, c, reserve, mode or self.mode))
        return out

    def gap(self, hi: str, lo: str) -> float:
        """``hi - lo`` in units of the combined standard error."""
        a, b = self.results[hi], self.results[lo]
        se = math.hypot(a.std_error, b.std_error)
        d = a.mean - b.mean
        return d / se if se > 0 else math.copysign(math.inf, d) if d else 0.0


def run_experiment(config: ExperimentConfig, mode: str = "original", tuned: Tuned | None = None,
                   workers: int = 1) -> Experiment:
    """Tune (unless ``tuned`` is given) and compare the mechanisms.

    ``original`` estimates every mechanism on the tuning prior.  ``robustness``
    keeps the tuned parameters and averages over priors whose first mode is
    moved to each interval of :func:`robustness_scenarios`.
    """
    tuned = tuned or tune(config, workers)
    mechs = tuned.mechanisms(config.mechanisms)
    sampler = config.sampler
    if mode == "original":
        tasks = [(m, sampler, config.iters, (FINAL_STREAM,)) for m in mechs.values()]
        results = dict(zip(mechs, run_tasks(tasks, workers)))
    elif mode == "robustness":
        scenarios = robustness_scenarios(config.a).intervals
        tasks = [(m, sampler.with_low(iv), config.iters, (SCENARIO_STREAM, s))
                 for s, iv in enumerate(scenarios) for m in mechs.values()]
        flat = run_tasks(tasks, workers)
        results = {}
        for j, name in enumerate(mechs):
            per = flat[j::len(mechs)]
            mean = float(np.mean([r.mean for r in per]))
            se = math.sqrt(sum(r.std_error ** 2 for r in per)) / len(per)
            results[name] = EstimatorResult(mean, se, sum(r.iters for r in per))
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return Experiment(config, tuned, results, mode)


TABLE_NP = (0.1, 0.2, 0.3, 0.4, 0.5)
TABLE_A = (0.2, 0.4)
TABLE_B = (0.6, 0.8)


def table_configs(**overrides) -> list[ExperimentConfig]:
    """The 20 (np, a, b) rows of the revenue tables."""
    return [ExperimentConfig(np_target=x, a=a, b=b, **overrides)
            for a in TABLE_A for b in TABLE_B for x in TABLE_NP]


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.record())
