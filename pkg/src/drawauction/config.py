"""Flat ``key = value`` configuration files.

Recognized keys::

    a, b, eps, p1, p2          prior
    n, p, low, high, seed      sampler (intervals written as "lo,hi")
    iters, c_step, vstar_step, mode

Lines starting with ``#`` are comments.  Unknown keys are an error.
"""
from __future__ import annotations

import configparser

from .model import BimodalSpec, MixtureSampler, SpecificationError

FLOATS = {"a", "b", "eps", "p1", "p2", "p", "c_step", "vstar_step"}
INTS = {"n", "seed", "iters"}
INTERVALS = {"low", "high"}
STRINGS = {"mode"}
KEYS = FLOATS | INTS | INTERVALS | STRINGS


def parse_interval(text: str) -> tuple[float, float]:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 2:
        raise SpecificationError(f"interval must be 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def parse(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",))
    cp.read_string("[config]\n" + text)
    out = {}
    for key, raw in cp["config"].items():
        if key not in KEYS:
            raise SpecificationError(f"unknown configuration key {key!r}")
        try:
            if key in FLOATS:
                out[key] = float(raw)
            elif key in INTS:
                out[key] = int(raw)
            elif key in INTERVALS:
                out[key] = parse_interval(raw)
            else:
                out[key] = raw.strip()
        except ValueError as e:
            raise SpecificationError(f"bad value for {key}: {raw!r}") from e
    return out


def load(path) -> dict:
    with open(path) as f:
        return parse(f.read())


def spec_from(values: dict) -> BimodalSpec:
    missing = [k for k in ("a", "b", "p1", "p2") if k not in values]
    if missing:
        raise SpecificationError(f"missing prior keys {missing}")
    return BimodalSpec(values["a"], values["b"], values.get("eps", 0.0), values["p1"], values["p2"])


def sampler_from(values: dict) -> MixtureSampler:
    spec = spec_from(values) if {"a", "b", "p1", "p2"} <= values.keys() else None
    n = values.get("n")
    if n is None:
        raise SpecificationError("missing key n")
    low = values.get("low", (0.0, spec.a) if spec else None)
    high = values.get("high", (spec.b, 1.0) if spec else None)
    p = values.get("p", spec.p2 if spec else None)
    if low is None or high is None or p is None:
        raise SpecificationError("sampler needs p, low and high (or a prior to derive them)")
    return MixtureSampler(n, p, tuple(low), tuple(high), values.get("seed", 0))


def dumps(spec: BimodalSpec | None = None, sampler: MixtureSampler | None = None, **extra) -> str:
    lines = []
    if spec is not None:
        lines += [f"{k} = {getattr(spec, k)!r}" for k in ("a", "b", "eps", "p1", "p2")]
    if sampler is not None:
        lines += [f"n = {sampler.n}", f"p = {sampler.p!r}",
                  f"low = {sampler.low[0]!r},{sampler.low[1]!r}",
                  f"high = {sampler.high[0]!r},{sampler.high[1]!r}",
                  f"seed = {sampler.seed}"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"
