"""Independent checks: a numerical Myerson oracle, buyer utilities, a
brute-force dominance harness and the 15-case classifier for the Draw auction.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import astuple, dataclass, field, fields

import numba
import numpy as np

from .mechanisms import DrawParams, Outcome, draw_auction, second_price
from .model import BimodalSpec, MixtureSampler, inv_cdf, sample_profile, stream_rng
from .myerson import MyersonParams, myerson_allocate, myerson_params, params_from_hull


class ClassificationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# numerical hull oracle


@numba.njit(cache=True)
def lower_hull(q, y, slack):
    """Monotone-chain lower hull of points sorted by ``q``; returns vertex indices.

    A middle point is dropped when the slope into it is not smaller than the
    slope out of it by more than ``slack``.
    """
    n = q.size
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        while top >= 2:
            o, m = stack[top - 2], stack[top - 1]
            s_in = (y[m] - y[o]) / (q[m] - q[o])
            s_out = (y[i] - y[m]) / (q[i] - q[m])
            if s_in >= s_out - slack:
                top -= 1
            else:
                break
        stack[top] = i
        top += 1
    return stack[:top].copy()


@dataclass(frozen=True)
class OracleHull:
    q: np.ndarray
    H: np.ndarray
    vertices: np.ndarray
    params: MyersonParams

    def G(self) -> np.ndarray:
        """Hull evaluated on the full grid."""
        v = self.vertices
        return np.interp(self.q, self.q[v], self.H[v])


def revenue_curve(spec: BimodalSpec, q):
    """``H(q) = (q - 1) F^-1(q)``, the integral of the virtual value in quantile space."""
    return (np.asarray(q) - 1.0) * inv_cdf(spec, q)


def numerical_hull(spec: BimodalSpec, grid_points: int = 1_000_001) -> OracleHull:
    if grid_points < 10_000:
        raise ValueError("grid_points must be at least 1e4")
    q = np.linspace(0.0, 1.0, grid_points)
    H = revenue_curve(spec, q)
    v = lower_hull(q, H, 1e-12)
    dq = q[1] - q[0]
    widths = np.diff(q[v])
    j = int(np.argmax(widths))
    if widths[j] <= 2.5 * dq:
        # H is convex already: no bridge; use the hull edge arriving at p1,
        # i.e. the left derivative at the kink
        i = int(np.searchsorted(q[v], spec.p1, side="right")) - 1
        i = min(max(i, 1), v.size - 1)
        beta = (H[v[i]] - H[v[i - 1]]) / (q[v[i]] - q[v[i - 1]])
        params = params_from_hull(spec, spec.p1, spec.p1, float(beta))
    else:
        z0, y0 = q[v[j]], q[v[j + 1]]
        beta = (H[v[j + 1]] - H[v[j]]) / (y0 - z0)
        params = params_from_hull(spec, float(z0), float(y0), float(beta))
    return OracleHull(q, H, v, params)


def numerical_myerson_oracle(spec: BimodalSpec, grid_points: int = 1_000_001) -> MyersonParams:
    """Myerson thresholds from a brute-force lower hull of the sampled revenue curve."""
    return numerical_hull(spec, grid_points).params


def params_gap(p: MyersonParams, r: MyersonParams) -> float:
    return max(abs(getattr(p, f.name) - getattr(r, f.name)) for f in fields(MyersonParams))


# --------------------------------------------------------------------------
# utilities and dominance


def expected_utility(i: int, v_i: float, outcome: Outcome) -> float:
    return float(outcome.alloc[i] * v_i - outcome.pay[i])


@dataclass(frozen=True)
class Violation:
    trial: int
    buyer: int
    k: int
    c: float
    truthful_utility: float
    best_deviation: float
    deviation_utility: float


@dataclass
class DominanceReport:
    trials: int
    deviations: int
    max_gain: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow([f.name for f in fields(Violation)])
            for v in self.violations:
                w.writerow(astuple(v))


DEFAULT_GRID = np.linspace(0.0, 1.0, 101)


def check_dominance(trials: int, seed: int = 0, deviation_grid=DEFAULT_GRID,
                    sampler: MixtureSampler | None = None, mechanism: str = "draw",
                    spec: BimodalSpec | None = None, max_n: int = 6,
                    tol: float = 1e-12) -> DominanceReport:
    """Compare truthful bidding with every bid on ``deviation_grid``.

    Each trial draws a valuation profile (from ``sampler`` if given, else
    i.i.d. uniform with ``n`` in ``2..max_n``), a buyer and mechanism
    parameters, then holds the other bids fixed while the buyer deviates.
    ``mechanism`` is ``draw``, ``second-price-reserve`` or ``myerson``; the
    latter needs ``spec``.
    """
    grid = np.asarray(deviation_grid, dtype=float)
    mparams = None
    if mechanism == "myerson":
        if spec is None:
            raise ValueError("myerson dominance needs a spec")
        mparams = myerson_params(spec)
    elif mechanism not in ("draw", "second-price-reserve"):
        raise ValueError(f"unknown mechanism {mechanism!r}")

    report = DominanceReport(trials, 0, 0.0)
    for t in range(trials):
        rng = stream_rng(seed, 7, t)
        if sampler is not None:
            v = sample_profile(sampler, t, stream=(7,))
        elif spec is not None:
            v = sample_profile(spec.sampler(int(rng.integers(2, max_n + 1)), seed), t, stream=(7,))
        else:
            v = rng.random(int(rng.integers(2, max_n + 1)))
        n = v.size
        i = int(rng.integers(n))
        k, c = 0, 0.0
        if mechanism == "draw":
            k = int(rng.integers(1, n))
            c = float(rng.uniform(0.0, 1.0)) or 0.5
            params = DrawParams(k, c)
            run = lambda x: draw_auction(params, x)  # noqa: E731
        elif mechanism == "second-price-reserve":
            c = float(rng.uniform(0.0, 1.0))
            run = lambda x: second_price(x, c)  # noqa: E731
        else:
            run = lambda x: myerson_allocate(mparams, x)  # noqa: E731

        truthful = expected_utility(i, v[i], run(v))
        best_bid, best_u = v[i], truthful
        x = v.copy()
        for bid in grid:
            x[i] = bid
            u = expected_utility(i, v[i], run(x))
            if u > best_u:
                best_bid, best_u = bid, u
        report.deviations += grid.size
        report.max_gain = max(report.max_gain, best_u - truthful)
        if best_u > truthful + tol:
            report.violations.append(Violation(t, i + 1, k, c, truthful, float(best_bid), best_u))
    return report


# --------------------------------------------------------------------------
# 15-case classifier

Y, N, ANY = True, False, None

# Q1..Q8 answer patterns and (truthful, deviation) utility formulas; the
# formula keys are interpreted in _utility.
BELOW = {
    1: ((N, N, N, N, ANY, ANY, N, N), ("0", "0")),
    2: ((N, Y, N, N, ANY, N, N, ANY), ("draw*", "0")),
    3: ((N, Y, N, N, ANY, Y, N, N), ("0", "0")),
    4: ((N, Y, N, Y, ANY, N, N, Y), ("c", "0")),
    5: ((N, Y, N, Y, ANY, Y, N, N), ("0", "0")),
    6: ((N, Y, N, Y, ANY, Y, N, Y), ("second*", "0")),
    7: ((Y, Y, N, N, N, N, ANY, ANY), ("draw*", "draw")),
    8: ((Y, Y, N, N, Y, Y, N, N), ("0", "0")),
    9: ((Y, Y, N, Y, N, N, ANY, Y), ("c", "draw")),
    10: ((Y, Y, N, Y, Y, Y, N, N), ("0", "0")),
    11: ((Y, Y, N, Y, Y, Y, N, Y), ("second*", "0")),
    12: ((Y, Y, Y, Y, N, N, Y, Y), ("c", "c")),
    13: ((Y, Y, Y, Y, Y, Y, N, N), ("0", "0")),
    14: ((Y, Y, Y, Y, Y, Y, N, Y), ("second*", "0")),
    15: ((Y, Y, Y, Y, Y, Y, Y, Y), ("second*", "second")),
}

ABOVE = {
    1: ((N, N, N, N, ANY, ANY, N, N), ("0", "0")),
    2: ((Y, N, N, N, N, ANY, ANY, N), ("0", "draw")),
    3: ((Y, N, N, N, Y, ANY, N, N), ("0", "0")),
    4: ((Y, N, Y, N, N, ANY, Y, N), ("0", "c")),
    5: ((Y, N, Y, N, Y, ANY, N, N), ("0", "0")),
    6: ((Y, N, Y, N, Y, ANY, Y, N), ("0", "second")),
    7: ((Y, Y, N, N, N, N, ANY, ANY), ("draw*", "draw")),
    8: ((Y, Y, N, N, Y, Y, N, N), ("0", "0")),
    9: ((Y, Y, Y, N, N, N, Y, ANY), ("draw*", "c")),
    10: ((Y, Y, Y, N, Y, Y, N, N), ("0", "0")),
    11: ((Y, Y, Y, N, Y, Y, Y, N), ("0", "second")),
    12: ((Y, Y, Y, Y, N, N, Y, Y), ("c", "c")),
    13: ((Y, Y, Y, Y, Y, Y, N, N), ("0", "0")),
    14: ((Y, Y, Y, Y, Y, Y, Y, N), ("0", "second")),
    15: ((Y, Y, Y, Y, Y, Y, Y, Y), ("second*", "second")),
}


@dataclass(frozen=True)
class CaseRecord:
    case_id: int
    answers: tuple
    predicted_utility_truthful: float
    predicted_utility_deviation: float
    regime: str


def _expand(table: dict) -> dict:
    """Map every concrete Q1..Q8 answer tuple to its case id."""
    out = {}
    for cid, (pattern, _) in table.items():
        for answers in itertools.product(*[(False, True) if p is None else (p,) for p in pattern]):
            if answers in out:
                raise ClassificationError(f"cases {out[answers]} and {cid} overlap on {answers}")
            out[answers] = cid
    return out


LOOKUP = {"below-valuation": _expand(BELOW), "above-valuation": _expand(ABOVE)}


def _implications(q, regime: str) -> list[str]:
    q1, q2, q3, q4, q5, q6, q7, q8 = q
    broken = []
    rules = [
        ("I1", not q1, not q3 and not q7),
        ("I2", not q2, not q4 and not q8),
        ("I3", not q3 and q5, not q7),
        ("I4", not q4 and q6, not q8),
        ("I5", q3 and not q5, q7),
        ("I6", q4 and not q6, q8),
        ("I7", q1 and q2, q5 == q6),
    ]
    if regime == "below-valuation":
        rules += [("I8", q1, q2), ("I9", q3, q4), ("I10", q7, q8)]
    else:
        rules += [("I8", q2, q1), ("I9", q4, q3), ("I10", q8, q7)]
    for name, premise, conclusion in rules:
        if premise and not conclusion:
            broken.append(name)
    return broken


def _views(v_i, x_i, others, k):
    others = [float(o) for o in others]
    sx = sorted(others + [float(x_i)], reverse=True)
    ss = sorted(others + [float(v_i)], reverse=True)
    return others, sx, ss


def questions(v_i: float, x_i: float, others, k: int, c: float, index: int = 0) -> tuple:
    """Answers to Q1..Q8 for buyer ``index`` bidding ``x_i`` instead of ``v_i``."""
    others, sx, ss = _views(v_i, x_i, others, k)
    return _answers(v_i, x_i, others, sx, ss, k, c, index)


def _answers(v_i, x_i, others, sx, ss, k, c, index):
    px, ps = sx[k], ss[k]

    def wants(val, pivot):
        return val > pivot and val - c > (val - pivot) / k

    # "highest bid" means beating every other bid; ties go to the lower index
    top = max(others)
    first = others.index(top)
    first = first if first < index else first + 1
    q7 = x_i > top or (x_i == top and index < first)
    q8 = v_i > top or (v_i == top and index < first)
    return (x_i > px, v_i > ps, wants(x_i, px), wants(v_i, ps),
            any(wants(o, px) for o in others), any(wants(o, ps) for o in others), q7, q8)


def classify_case(v_i: float, x_i: float, others, k: int, c: float, index: int = 0) -> CaseRecord:
    """Place a unilateral deviation ``x_i`` from ``v_i`` into one of the 15 cases."""
    if x_i == v_i:
        raise ValueError("classification needs x_i != v_i")
    regime = "below-valuation" if x_i < v_i else "above-valuation"
    others, sx, ss = _views(v_i, x_i, others, k)
    q = tuple(bool(a) for a in _answers(v_i, x_i, others, sx, ss, k, c, index))
    broken = _implications(q, regime)
    if broken:
        raise ClassificationError(f"answers {q} break implications {broken}")
    cid = LOOKUP[regime].get(q)
    if cid is None:
        raise ClassificationError(f"answers {q} match no case in the {regime} table")
    table = BELOW if regime == "below-valuation" else ABOVE
    star, dev = table[cid][1]
    return CaseRecord(cid, q, _utility(star, v_i, ss, k, c), _utility(dev, v_i, sx, k, c), regime)


def _utility(kind: str, v: float, s: np.ndarray, k: int, c: float) -> float:
    kind = kind.rstrip("*")
    if kind == "0":
        return 0.0
    if kind == "draw":
        return (v - s[k]) / k
    if kind == "c":
        return v - c
    return v - s[1]


def random_spec(rng: np.random.Generator, min_gap: float = 0.1, min_p2: float = 0.02,
                eps_share: float = 0.5) -> BimodalSpec:
    """Random prior with ``b - a >= min_gap`` and ``p2 >= min_p2``.

    A fraction ``eps_share`` of the draws gets gap mass, capped so that the
    revenue curve stays convex at ``p1 + eps``.
    """
    while True:
        a = rng.uniform(0.05, 0.9 - min_gap)
        b = rng.uniform(a + min_gap, 0.95)
        p2 = rng.uniform(min_p2, 0.5)
        eps = 0.0
        if rng.random() < eps_share:
            cap = min((b - a) * p2 / (1 - b), 0.3)
            eps = rng.uniform(0.01, cap) if cap > 0.01 else 0.0
        p1 = 1.0 - p2 - eps
        if p1 >= 0.05:
            return BimodalSpec(a, b, eps, p1, p2)


@dataclass
class ClassifierReport:
    instances: int
    max_error: float = 0.0
    counts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_classifier(instances: int, seed: int = 0, max_n: int = 6, tol: float = 1e-12) -> ClassifierReport:
    """Compare table-predicted utilities with utilities from the auction itself.

    Half of the instances underbid (``x_i < v_i``) and half overbid.  The
    questions only describe the auction when ``k >= 2``, so ``k`` is drawn
    from ``2..n-1`` with ``n >= 3``.
    """
    report = ClassifierReport(instances)
    rng = stream_rng(seed, 8)
    for t in range(instances):
        n = int(rng.integers(3, max_n + 1))
        k = int(rng.integers(2, n))
        c = float(rng.uniform(0.0, 1.0)) or 0.5
        v = rng.random(n)
        i = int(rng.integers(n))
        x_i = rng.uniform(0.0, v[i]) if t % 2 == 0 else rng.uniform(v[i], 1.0)
        if x_i == v[i]:
            continue
        others = np.delete(v, i)
        try:
            rec = classify_case(v[i], x_i, others, k, c, index=i)
        except ClassificationError as e:
            report.failures.append((t, str(e)))
            continue
        params = DrawParams(k, c)
        x = v.copy()
        x[i] = x_i
        truthful = expected_utility(i, v[i], draw_auction(params, v))
        deviated = expected_utility(i, v[i], draw_auction(params, x))
        err = max(abs(truthful - rec.predicted_utility_truthful),
                  abs(deviated - rec.predicted_utility_deviation))
        report.max_error = max(report.max_error, err)
        key = (rec.regime, rec.case_id)
        report.counts[key] = report.counts.get(key, 0) + 1
        if err > tol:
            report.failures.append((t, f"case {rec.case_id} ({rec.regime}) off by {err:.3g}"))
    return report


def hull_defects(spec: BimodalSpec, grid_points: int = 20_001) -> dict:
    """Worst violation of each hull property on a uniform grid.

    Keys: ``above`` (max of G - H), ``convexity`` (largest drop between
    consecutive finite-difference slopes of G), ``monotone`` (largest drop of
    g), and ``jump_p1`` / ``jump_y`` (gaps in H at the piece boundaries, only
    when ``eps > 0``; with no gap mass the revenue curve jumps at ``p1``).
    """
    from .myerson import myerson_curves

    c = myerson_curves(spec)
    q = np.linspace(0.0, 1.0, grid_points)
    H, G, g = c.H(q), c.G(q), c.g(q)
    slopes = np.diff(G) / np.diff(q)
    out = {
        "above": float(np.max(G - H)),
        "convexity": float(max(0.0, -np.min(np.diff(slopes)))),
        "monotone": float(max(0.0, -np.min(np.diff(g)))),
        "jump_p1": None,
        "jump_y": None,
    }
    if spec.eps > 0:
        y = spec.p1 + spec.eps
        out["jump_p1"] = float(abs(c.H1(spec.p1) - c.H2(spec.p1)))
        out["jump_y"] = float(abs(c.H2(y) - c.H3(y)))
    return out
