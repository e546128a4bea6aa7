"""Second-price auctions and the Draw auction.

Every mechanism maps a bid vector to an :class:`Outcome` holding each buyer's
win probability and expected payment.  Lotteries are reported in expectation;
:func:`resolve` turns an outcome into a realized sale.

The mechanism classes at the bottom of the module (``SecondPrice``, ``Draw``)
bundle frozen parameters with a vectorized ``revenue`` kernel used by the
Monte Carlo engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Outcome:
    alloc: np.ndarray
    pay: np.ndarray

    @property
    def revenue(self) -> float:
        return float(self.pay.sum())

    @property
    def sold(self) -> bool:
        return bool(self.alloc.sum() > 0.5)

    def winner(self) -> int | None:
        """Index of the buyer that gets the object for sure, if there is one."""
        hits = np.flatnonzero(self.alloc == 1.0)
        return int(hits[0]) if hits.size else None

    def __eq__(self, other):
        if not isinstance(other, Outcome):
            return NotImplemented
        return (self.alloc.shape == other.alloc.shape and self.pay.shape == other.pay.shape
                and bool((self.alloc == other.alloc).all() and (self.pay == other.pay).all()))


def as_bids(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ParameterError("need a vector of at least two bids")
    lo, hi = x.min(), x.max()
    if not (lo >= 0 and hi < np.inf):
        raise ParameterError("bids must be finite and nonnegative")
    return x


def descending_order(x: np.ndarray) -> np.ndarray:
    """Indices sorting ``x`` high to low; equal bids keep the lower index first."""
    return (-x).argsort(kind="stable")


def unsold(n: int) -> Outcome:
    return Outcome(np.zeros(n), np.zeros(n))


def _single(n: int, winner: int, price: float) -> Outcome:
    alloc, pay = np.zeros(n), np.zeros(n)
    alloc[winner] = 1.0
    pay[winner] = price
    return Outcome(alloc, pay)


def second_price(x, reserve: float = 0.0) -> Outcome:
    """Vickrey auction with an optional reserve price."""
    x = as_bids(x)
    order = descending_order(x)
    x1, x2 = x[order[0]], x[order[1]]
    if x1 < reserve:
        return unsold(x.size)
    return _single(x.size, order[0], x2 if x2 >= reserve else reserve)


@dataclass(frozen=True)
class DrawParams:
    k: int
    c: float
    v0: float = 0.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k}")
        if self.v0 < 0:
            raise ParameterError("seller valuation must be nonnegative")
        if not self.c > self.v0:
            raise ParameterError(f"fixed price c={self.c} must exceed v0={self.v0}")


def willing(x, c: float, k: int, pivot):
    """Whether a bid ``x`` accepts the fixed price given ``pivot = x_(k+1)``."""
    return x - c > (x - pivot) / k


def draw_auction(params: DrawParams, x) -> Outcome:
    """Draw auction.

    If the second-highest bid accepts ``c`` the top bidder pays the second
    bid; if only the highest does, it pays ``c``; otherwise the ``k`` highest
    bidders share a lottery at price ``x_(k+1)``.
    """
    x = as_bids(x)
    n, k, c = x.size, params.k, params.c
    if k > n - 1:
        raise ParameterError(f"k must lie in 1..{n - 1}, got {k}")
    order = descending_order(x)
    x1, x2, pivot = x[order[0]], x[order[1]], x[order[k]]
    if willing(x2, c, k, pivot):
        return _single(n, order[0], x2)
    if willing(x1, c, k, pivot):
        return _single(n, order[0], c)
    alloc, pay = np.zeros(n), np.zeros(n)
    top = order[:k]
    alloc[top] = 1.0 / k
    pay[top] = pivot / k
    return Outcome(alloc, pay)


def resolve(outcome: Outcome, rng: np.random.Generator) -> tuple[int | None, float]:
    """Realize a lottery: returns ``(winner, price)`` or ``(None, 0.0)``."""
    total = outcome.alloc.sum()
    if total < 0.5:
        return None, 0.0
    w = int(rng.choice(outcome.alloc.size, p=outcome.alloc / total))
    return w, float(outcome.pay[w] / outcome.alloc[w])


def sort_desc(values: np.ndarray) -> np.ndarray:
    """Row-wise descending sort of a ``(m, n)`` array of bids."""
    return -np.sort(-np.asarray(values, dtype=float), axis=1)


@dataclass(frozen=True)
class SecondPrice:
    reserve: float = 0.0
    name: str = field(default="second-price", compare=False)

    def outcome(self, x) -> Outcome:
        return second_price(x, self.reserve)

    def revenue(self, s: np.ndarray) -> np.ndarray:
        """Seller revenue for each row of descending-sorted bids ``s``."""
        x1, x2 = s[:, 0], s[:, 1]
        r = self.reserve
        return np.where(x1 < r, 0.0, np.where(x2 >= r, x2, r))


@dataclass(frozen=True)
class Draw:
    params: DrawParams
    name: str = field(default="draw", compare=False)

    def outcome(self, x) -> Outcome:
        return draw_auction(self.params, x)

    def revenue(self, s: np.ndarray) -> np.ndarray:
        k, c = self.params.k, self.params.c
        if k > s.shape[1] - 1:
            raise ParameterError(f"k must lie in 1..{s.shape[1] - 1}, got {k}")
        x1, x2, pivot = s[:, 0], s[:, 1], s[:, k]
        return np.where(willing(x2, c, k, pivot), x2,
                        np.where(willing(x1, c, k, pivot), c, pivot))
