"""Bimodal valuation prior and the mixture sampler used by the simulations.

The prior is piecewise uniform: mass ``p1`` on ``(0, a]``, mass ``eps`` on
``(a, b]`` and mass ``p2`` on ``(b, 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Profiles are generated in fixed-size blocks; each block owns an independent
# Philox stream keyed by (seed, *stream, block).  Any prefix of a stream is
# therefore identical no matter how the draws are split across workers.
BLOCK = 1 << 14


class SpecificationError(ValueError):
    """Raised for an invalid prior or sampler."""


@dataclass(frozen=True)
class BimodalSpec:
    a: float
    b: float
    eps: float
    p1: float
    p2: float

    def __post_init__(self):
        if not 0.0 < self.a < self.b < 1.0:
            raise SpecificationError(f"need 0 < a < b < 1, got a={self.a}, b={self.b}")
        if not (self.p1 > 0 and self.p2 > 0 and self.eps >= 0):
            raise SpecificationError("need p1 > 0, p2 > 0 and eps >= 0")
        if abs(self.p1 + self.eps + self.p2 - 1.0) > 1e-12:
            raise SpecificationError(
                f"masses must sum to 1, got {self.p1 + self.eps + self.p2!r}")

    @classmethod
    def from_np(cls, np_target: float, n: int, a: float, b: float) -> "BimodalSpec":
        """Prior with no gap mass where ``n * p2 == np_target``."""
        p = np_target / n
        return cls(a=a, b=b, eps=0.0, p1=1.0 - p, p2=p)

    def sampler(self, n: int, seed: int = 0) -> "MixtureSampler":
        if self.eps > 0:
            raise SpecificationError("the mixture sampler has no gap mass; eps must be 0")
        return MixtureSampler(n=n, p=self.p2, low=(0.0, self.a), high=(self.b, 1.0), seed=seed)


@dataclass(frozen=True)
class MixtureSampler:
    """``n`` i.i.d. valuations, each uniform on ``high`` w.p. ``p`` else on ``low``."""

    n: int
    p: float
    low: tuple[float, float]
    high: tuple[float, float]
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise SpecificationError(f"n must be a positive integer, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise SpecificationError(f"p must lie in [0, 1], got {self.p}")
        for name, (lo, hi) in (("low", self.low), ("high", self.high)):
            # lo == hi is allowed and means a point mass
            if not 0.0 <= lo <= hi <= 1.0:
                raise SpecificationError(f"{name} interval must satisfy 0 <= lo <= hi <= 1")
        if self.low[1] > self.high[0]:
            raise SpecificationError("low and high intervals overlap")
        if not 0 <= self.seed < 2**64:
            raise SpecificationError("seed must be a 64-bit unsigned integer")

    def with_low(self, low: tuple[float, float]) -> "MixtureSampler":
        return MixtureSampler(self.n, self.p, tuple(low), self.high, self.seed)

    def with_seed(self, seed: int) -> "MixtureSampler":
        return MixtureSampler(self.n, self.p, self.low, self.high, seed)


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator addressed by ``seed`` and an integer key path."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def profile_block(sampler: MixtureSampler, stream: tuple[int, ...], index: int) -> np.ndarray:
    rng = stream_rng(sampler.seed, *stream, index)
    high = rng.random((BLOCK, sampler.n)) < sampler.p
    u = rng.random((BLOCK, sampler.n))
    a1, a2 = sampler.low
    b1, b2 = sampler.high
    return np.where(high, b1 + (b2 - b1) * u, a1 + (a2 - a1) * u)


def sample_profiles(sampler: MixtureSampler, count: int, stream: tuple[int, ...] = ()) -> np.ndarray:
    """Return a ``(count, n)`` array of valuation profiles.

    Row ``j`` depends only on ``(sampler, stream, j)``, so asking for more rows
    extends the array without changing the rows already drawn.
    """
    if count <= 0:
        return np.empty((0, sampler.n))
    nblocks = -(-count // BLOCK)
    out = np.concatenate([profile_block(sampler, tuple(stream), i) for i in range(nblocks)])
    return out[:count]


def sample_profile(sampler: MixtureSampler, index: int = 0, stream: tuple[int, ...] = ()) -> np.ndarray:
    """Single profile number ``index`` of the given stream."""
    block, row = divmod(index, BLOCK)
    return profile_block(sampler, tuple(stream), block)[row].copy()


def pdf(spec: BimodalSpec, v):
    """Density; intervals are left-open/right-closed at ``a`` and ``b``."""
    v = np.asarray(v, dtype=float)
    out = np.select(
        [(v > 0) & (v <= spec.a), (v > spec.a) & (v <= spec.b), (v > spec.b) & (v < 1)],
        [spec.p1 / spec.a, spec.eps / (spec.b - spec.a), spec.p2 / (1 - spec.b)],
        0.0,
    )
    return float(out) if out.ndim == 0 else out


def cdf(spec: BimodalSpec, v):
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    a, b = spec.a, spec.b
    out = np.select(
        [v <= a, v <= b],
        [spec.p1 * v / a, spec.p1 + spec.eps * (v - a) / (b - a)],
        spec.p1 + spec.eps + spec.p2 * (v - b) / (1 - b),
    )
    return float(out) if out.ndim == 0 else out


def inv_cdf(spec: BimodalSpec, q, right: bool = False):
    """Quantile function.

    With ``eps == 0`` the quantile jumps from ``a`` to ``b`` at ``q == p1``.
    The default returns the left limit there (``a``); ``right=True`` returns
    ``inf{x : F(x) > q}`` instead, which is ``b``.
    """
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)) or np.any(np.isnan(q)):
        raise ValueError("quantile level must lie in [0, 1]")
    a, b, p1, eps, p2 = spec.a, spec.b, spec.p1, spec.eps, spec.p2
    mid = p1 + eps
    if right:
        first, second = q < p1, q < mid
    else:
        first, second = q <= p1, q <= mid
    with np.errstate(divide="ignore", invalid="ignore"):
        middle = a + (b - a) * (q - p1) / eps if eps > 0 else np.full_like(q, a)
    out = np.select([first, second & (eps > 0)],
                    [a * q / p1, middle],
                    1.0 - (1 - b) * (1 - q) / p2)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out

