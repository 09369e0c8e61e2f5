"""Incremental coalition worth (dividends) via Moebius/zeta transforms.

The fast transform is the production path; the cardinality-order recursion
is kept as an independent oracle, since the two algorithms share no code.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .games import Game, GameError, popcount_table


@dataclass(frozen=True)
class DividendTable:
    """Dividends for all 2^d coalitions, indexed by mask like Game.values."""

    d: int
    dividends: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.dividends, dtype=float)
        if t.shape != (1 << self.d,):
            raise GameError(f"expected {1 << self.d} dividends for d={self.d}")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "dividends", t)

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "dividends": list(self.dividends)})

    @classmethod
    def from_json(cls, text: str) -> "DividendTable":
        obj = json.loads(text)
        return cls(int(obj["d"]), np.asarray(obj["dividends"], dtype=float))


def dividends_recursive(g: Game) -> DividendTable:
    """Oracle route: phi(A) = v(A) - sum of phi over proper subsets of A.

    Theta(3^d) via submask enumeration; intended for small d.
    """
    n = 1 << g.d
    phi = np.empty(n)
    phi[0] = g.values[0]
    sizes = popcount_table(g.d)
    for mask in sorted(range(1, n), key=lambda m: int(sizes[m])):
        acc = phi[0]
        sub = (mask - 1) & mask
        while sub:
            acc += phi[sub]
            sub = (sub - 1) & mask
        phi[mask] = g.values[mask] - acc
    return DividendTable(g.d, phi)


def dividends_fast(g: Game) -> DividendTable:
    """In-place subset Moebius transform, Theta(d 2^d)."""
    phi = g.values.copy()
    masks = np.arange(1 << g.d)
    for j in range(g.d):
        bit = 1 << j
        hi = masks[(masks & bit) != 0]
        phi[hi] -= phi[hi ^ bit]
    return DividendTable(g.d, phi)


def zeta_reconstruct(t: DividendTable) -> Game:
    """Inverse transform: v(A) = sum of dividends over subsets of A."""
    v = t.dividends.copy()
    masks = np.arange(1 << t.d)
    for j in range(t.d):
        bit = 1 << j
        hi = masks[(masks & bit) != 0]
        v[hi] += v[hi ^ bit]
    return Game(t.d, v)
