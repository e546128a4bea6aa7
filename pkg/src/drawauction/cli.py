"""Command-line front end.

    drawauction run-auction --mech draw -k 2 -c 0.4 --bids 0.7,0.6,0.3,0.1
    drawauction myerson-params --a 0.2 --b 0.6 --p1 0.9 --p2 0.1
    drawauction tune --np 0.1 --a 0.2 --b 0.6
    drawauction reproduce-tables --out-dir out/
    drawauction verify --suite all

Exit codes: 0 success (for ``run-auction``: the object was sold), 1 usage
error, 2 no sale, 3 a verification suite failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgfile
from .mechanisms import DrawParams, ParameterError, draw_auction, second_price
from .model import SpecificationError
from .myerson import myerson_allocate, myerson_params

DEFAULT_SEED = 20240607
SEED_ENV = "DRAWAUCTION_SEED"
EXIT_OK, EXIT_USAGE, EXIT_UNSOLD, EXIT_FAILED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def fmt(x: float) -> str:
    return f"{x:.6f}"


def parse_bids(text: str) -> np.ndarray:
    try:
        bids = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise UsageError(f"malformed bids {text!r}")
    if bids.size < 2:
        raise UsageError("need at least two bids")
    return bids


def settings(args) -> dict:
    """Config-file values overridden by any flag given on the command line."""
    values = cfgfile.load(args.config) if getattr(args, "config", None) else {}
    for key in ("a", "b", "eps", "p1", "p2", "n", "seed", "iters", "c_step", "vstar_step"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return values


def add_prior(p):
    p.add_argument("--config", help="key = value configuration file")
    for key in ("a", "b", "eps", "p1", "p2"):
        p.add_argument(f"--{key}", type=float)


def prior(args):
    values = settings(args)
    if "p1" not in values and "p2" in values:
        values["p1"] = 1.0 - values["p2"] - values.get("eps", 0.0)
    return cfgfile.spec_from(values)


def cmd_run_auction(args) -> int:
    bids = parse_bids(args.bids)
    if args.mech == "draw":
        if args.k is None or args.c is None:
            raise UsageError("the draw auction needs -k and -c")
        if not 1 <= args.k <= bids.size - 1:
            raise UsageError(f"k must lie in 1..{bids.size - 1}")
        out = draw_auction(DrawParams(args.k, args.c, args.v0), bids)
    elif args.mech == "myerson":
        out = myerson_allocate(myerson_params(prior(args)), bids)
    else:
        out = second_price(bids, args.reserve)

    print(f"alloc: {','.join(fmt(x) for x in out.alloc)}")
    print(f"pay: {','.join(fmt(x) for x in out.pay)}")
    if not out.sold:
        print("winner: none (not sold)")
        print("price: 0.000000")
        return EXIT_UNSOLD
    members = np.flatnonzero(out.alloc > 0)
    price = out.pay[members[0]] / out.alloc[members[0]]
    if members.size == 1:
        print(f"winner: {members[0] + 1}")
    else:
        print(f"winner: draw among {','.join(str(i + 1) for i in members)}")
    print(f"price: {fmt(price)}")
    return EXIT_OK


def cmd_myerson_params(args) -> int:
    rec = myerson_params(prior(args)).to_record()
    if args.json:
        print(json.dumps(rec))
    else:
        for k, v in rec.items():
            print(f"{k}={fmt(v)}")
    return EXIT_OK


def experiment_settings(args) -> dict:
    values = settings(args)
    values.setdefault("seed", default_seed())
    if args.full:
        values["iters"], values["vstar_step"] = 1_000_000, 0.001
    return values


def cmd_tune(args) -> int:
    from .simulation import ExperimentConfig, run_experiment

    values = experiment_settings(args)
    n = values.get("n", 5)
    np_target = args.np
    if np_target is None:
        p = values.get("p2", values.get("p"))
        if p is None:
            raise UsageError("give --np or a prior with p2")
        np_target = n * p
    for key in ("a", "b"):
        if key not in values:
            raise UsageError(f"missing --{key}")
    config = ExperimentConfig(np_target, values["a"], values["b"], n=n,
                              iters=values.get("iters", 100_000), seed=values["seed"],
                              c_step=values.get("c_step", 0.01), vstar_step=values.get("vstar_step", 0.005))
    exp = run_experiment(config, workers=args.workers)
    t = exp.tuned
    print(f"k={t.draw.best_k}")
    print(f"c={fmt(t.draw.best_c)}")
    print(f"reserve={fmt(t.reserve.best_reserve)}")
    for row in exp.rows():
        print(f"{row.mech}: mean={fmt(row.mean)} std_error={fmt(row.std_error)} pct_of_draw={fmt(row.pct_of_draw)}")
    return EXIT_OK


def cmd_reproduce_tables(args) -> int:
    from .simulation import run_experiment, table_configs, write_csv

    values = experiment_settings(args)
    configs = table_configs(n=values.get("n", 5), iters=values.get("iters", 100_000), seed=values["seed"],
                            c_step=values.get("c_step", 0.01), vstar_step=values.get("vstar_step", 0.005))
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name in ("table1.csv", "table2.csv", "table3.csv"):
            (out / name).touch()
    except OSError as e:
        raise UsageError(f"cannot write to {out}: {e}")

    table1, table2, table3 = [], [], []
    for i, config in enumerate(configs, 1):
        print(f"[{i}/{len(configs)}] np={config.np_target} a={config.a} b={config.b}", file=sys.stderr)
        original = run_experiment(config, "original", workers=args.workers)
        robust = run_experiment(config, "robustness", tuned=original.tuned, workers=args.workers)
        table2 += original.rows()
        table3 += robust.rows()
        table1 += [r for r in original.rows(reference="myerson", mode="efficiency")
                   if r.mech in ("draw", "myerson")]
    write_csv(out / "table1.csv", table1)
    write_csv(out / "table2.csv", table2)
    write_csv(out / "table3.csv", table3)
    print(f"wrote {out / 'table1.csv'}, {out / 'table2.csv'}, {out / 'table3.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verification as vf

    seed = args.seed if args.seed is not None else default_seed()
    suites = ["dominance", "classifier", "oracle", "hull"] if args.suite == "all" else [args.suite]
    failed = False
    rng = np.random.default_rng(seed)
    for suite in suites:
        if suite == "dominance":
            rep = vf.check_dominance(args.trials, seed)
            ok = rep.ok
            detail = f"{rep.trials} trials, max gain {rep.max_gain:.3g}, {len(rep.violations)} violations"
            if args.violations:
                rep.write_csv(args.violations)
        elif suite == "classifier":
            rep = vf.check_classifier(args.trials, seed)
            ok = rep.ok
            detail = f"{rep.instances} instances, {len(rep.counts)} cases hit, max error {rep.max_error:.3g}"
        elif suite == "oracle":
            gaps = [vf.params_gap(myerson_params(s), vf.numerical_myerson_oracle(s))
                    for s in (vf.random_spec(rng) for _ in range(args.specs))]
            ok = max(gaps) <= 1e-3
            detail = f"{args.specs} specs, max gap {max(gaps):.3g}"
        else:
            worst = 0.0
            for _ in range(args.specs):
                d = vf.hull_defects(vf.random_spec(rng))
                worst = max([worst] + [v for v in d.values() if v is not None])
            ok = worst <= 1e-9
            detail = f"{args.specs} specs, worst defect {worst:.3g}"
        failed |= not ok
        print(f"{suite}: {'PASS' if ok else 'FAIL'} ({detail})")
    return EXIT_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="drawauction", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("run-auction", help="run one auction on a bid vector")
    p.add_argument("--mech", required=True,
                   choices=["second-price", "second-price-reserve", "draw", "myerson"])
    p.add_argument("--bids", required=True, help="comma-separated bids")
    p.add_argument("-k", type=int)
    p.add_argument("-c", type=float)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--reserve", type=float, default=0.0, help="reserve price for the second-price auctions")
    add_prior(p)
    p.set_defaults(func=cmd_run_auction)

    p = sub.add_parser("myerson-params", help="optimal-auction thresholds for a prior")
    add_prior(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_myerson_params)

    def add_experiment(p):
        add_prior(p)
        p.add_argument("--n", type=int)
        p.add_argument("--iters", type=int)
        p.add_argument("--c-step", dest="c_step", type=float)
        p.add_argument("--vstar-step", dest="vstar_step", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--full", action="store_true", help="1e6 iterations and reserve step 0.001")

    p = sub.add_parser("tune", help="grid-search the draw auction and the reserve price")
    add_experiment(p)
    p.add_argument("--np", type=float, help="expected number of high-valuation buyers")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("reproduce-tables", help="write table1.csv, table2.csv and table3.csv")
    add_experiment(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_reproduce_tables)

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--suite", default="all", choices=["all", "dominance", "classifier", "oracle", "hull"])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--specs", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--violations", help="write dominance violations to this CSV")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError, SpecificationError) as e:
        print(f"drawauction: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
