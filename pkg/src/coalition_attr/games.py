"""Transferable-utility cooperative games over bitmask-encoded coalitions.

Players are indexed 0..d-1 internally; bit j of a coalition mask is set iff
player j belongs to the coalition. Human-facing layers (CLI, reports) use
1-indexed player labels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

DEFAULT_MAX_PLAYERS = 20
EXACT_TOL = 1e-10


class GameError(ValueError):
    """Invalid game construction or use."""


def full_mask(d: int) -> int:
    return (1 << d) - 1


def members(mask: int) -> tuple[int, ...]:
    """Players in a coalition mask, ascending."""
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


def mask_of(players: Iterable[int]) -> int:
    m = 0
    for j in players:
        m |= 1 << j
    return m


def coalition_label(mask: int) -> str:
    """1-indexed set notation, e.g. {1,3} for mask 0b101."""
    return "{" + ",".join(str(j + 1) for j in members(mask)) + "}"


def popcount_table(d: int) -> np.ndarray:
    """Cardinality of every coalition mask below 2^d."""
    sizes = np.zeros(1 << d, dtype=np.int64)
    for j in range(d):
        sizes += (np.arange(1 << d) >> j) & 1
    return sizes


@dataclass(frozen=True)
class Game:
    """A cooperative game: player count d and 2^d coalition values.

    values[m] is the worth of the coalition with mask m; values[0] is the
    worth of the empty coalition, values[2^d - 1] the grand coalition.
    """

    d: int
    values: np.ndarray

    def __post_init__(self):
        if not (1 <= self.d):
            raise GameError(f"player count must be >= 1, got {self.d}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (1 << self.d,):
            raise GameError(
                f"expected {1 << self.d} coalition values for d={self.d}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise GameError(f"non-finite value at coalition {coalition_label(bad)}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def grand(self) -> int:
        return full_mask(self.d)

    def value(self, mask: int) -> float:
        return float(self.values[mask])

    @property
    def v_empty(self) -> float:
        return float(self.values[0])

    @property
    def v_full(self) -> float:
        return float(self.values[-1])

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "values": list(self.values)})

    @classmethod
    def from_json(cls, text: str) -> "Game":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "d" not in obj or "values" not in obj:
            raise GameError('game JSON must be an object with keys "d" and "values"')
        return cls(int(obj["d"]), np.asarray(obj["values"], dtype=float))


@dataclass(frozen=True)
class Allocation:
    """Per-player payoffs plus the method that produced them.

    stderr is set only by Monte Carlo estimators.
    """

    payoffs: np.ndarray
    method: str
    stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.asarray(self.payoffs, dtype=float)
        if not np.all(np.isfinite(p)):
            raise GameError("non-finite payoff in allocation")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "payoffs", p)
        if self.stderr is not None:
            s = np.asarray(self.stderr, dtype=float).copy()
            if s.shape != p.shape or np.any(s < 0):
                raise GameError("stderr must be nonnegative and match payoffs")
            s.setflags(write=False)
            object.__setattr__(self, "stderr", s)


def build_game(
    d: int,
    oracle: Callable[[int], float],
    max_players: int = DEFAULT_MAX_PLAYERS,
) -> Game:
    """Evaluate a coalition-worth oracle on all 2^d masks into a dense Game."""
    if not (1 <= d <= max_players):
        raise GameError(f"player count {d} outside [1, {max_players}]")
    values = np.empty(1 << d)
    for m in range(1 << d):
        x = float(oracle(m))
        if not np.isfinite(x):
            raise GameError(f"oracle returned non-finite value on {coalition_label(m)}")
        values[m] = x
    return Game(d, values)


def dual_game(g: Game) -> Game:
    """w(A) = v(D) - v(D \\ A)."""
    # full_mask ^ m runs through masks in reverse index order
    return Game(g.d, g.values[-1] - g.values[::-1])


def efficiency_gap(g: Game, a: Allocation) -> float:
    """Signed deviation of the payoff total from v(D) - v(empty)."""
    if len(a.payoffs) != g.d:
        raise GameError(f"allocation has {len(a.payoffs)} payoffs for a {g.d}-player game")
    return float(np.sum(a.payoffs) - (g.v_full - g.v_empty))
