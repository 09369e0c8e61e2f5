"""Random order distributions over player permutations.

Four forms: uniform over all d! orderings, an explicit pmf, uniform over
the linear extensions of a partial order (causal constraints), and an
opaque seeded sampler. Exact expansion and seeded sampling are provided
where each form supports them.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .games import GameError

PMF_TOL = 1e-9

# Exact expansion refuses beyond this many orderings (10!).
MAX_ENUMERATION = math.factorial(10)


class SupportTooLargeError(GameError):
    """Raised when exact expansion would enumerate too many orderings."""


@dataclass(frozen=True)
class Uniform:
    """Uniform distribution over all d! orderings."""

    MAX_EXACT_PLAYERS = 8

    def expand(self, d: int) -> list[tuple[tuple[int, ...], float]]:
        if d > self.MAX_EXACT_PLAYERS:
            raise SupportTooLargeError(
                f"uniform expansion of {d}! orderings is too large; "
                "use the Monte Carlo estimator instead"
            )
        p = 1.0 / math.factorial(d)
        return [(pi, p) for pi in itertools.permutations(range(d))]

    def sample(self, d: int, rng: np.random.Generator) -> tuple[int, ...]:
        return tuple(int(j) for j in rng.permutation(d))


@dataclass(frozen=True)
class Explicit:
    """Finite pmf over explicitly listed orderings (0-indexed players)."""

    orders: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.orders) != len(self.probs) or not self.orders:
            raise GameError("explicit pmf needs matching, nonempty orders and probs")
        d = len(self.orders[0])
        seen = set()
        for pi in self.orders:
            if sorted(pi) != list(range(d)):
                raise GameError(f"invalid ordering {pi}")
            if pi in seen:
                raise GameError(f"duplicate ordering {pi}")
            seen.add(pi)
        if any(p < 0 for p in self.probs):
            raise GameError("negative probability in pmf")
        total = sum(self.probs)
        if abs(total - 1.0) > PMF_TOL:
            raise GameError(f"pmf sums to {total}, expected 1")
        # canonical ordering for reproducible iteration
        pairs = sorted(zip(self.orders, self.probs))
        object.__setattr__(self, "orders", tuple(o for o, _ in pairs))
        object.__setattr__(self, "probs", tuple(p for _, p in pairs))

    @classmethod
    def point_mass(cls, order: Sequence[int]) -> "Explicit":
        return cls((tuple(order),), (1.0,))

    @classmethod
    def from_json(cls, text: str) -> "Explicit":
        """Parse [{"order":[1,2,3],"p":0.5}, ...] with 1-indexed players."""
        rows = json.loads(text)
        orders = tuple(tuple(int(j) - 1 for j in row["order"]) for row in rows)
        probs = tuple(float(row["p"]) for row in rows)
        return cls(orders, probs)

    def expand(self, d: int) -> list[tuple[tuple[int, ...], float]]:
        if self.orders and len(self.orders[0]) != d:
            raise GameError("pmf ordering length does not match player count")
        return list(zip(self.orders, self.probs))

    def sample(self, d: int, rng: np.random.Generator) -> tuple[int, ...]:
        i = int(rng.choice(len(self.orders), p=np.asarray(self.probs)))
        return self.orders[i]


@dataclass(frozen=True)
class PartialOrderUniform:
    """Uniform distribution over linear extensions of a DAG on players.

    pred_masks[j] is the bitmask of players that must precede player j.
    """

    d: int
    pred_masks: tuple[int, ...]

    def __post_init__(self):
        if len(self.pred_masks) != self.d:
            raise GameError("need one predecessor mask per player")
        self._toposort_or_raise()

    def _toposort_or_raise(self):
        # Kahn's algorithm; leftover nodes mean a cycle
        placed = 0
        remaining = set(range(self.d))
        progress = True
        while progress:
            progress = False
            for j in list(remaining):
                if self.pred_masks[j] & ~placed == 0:
                    placed |= 1 << j
                    remaining.discard(j)
                    progress = True
        if remaining:
            raise GameError(f"cycle detected among players {sorted(j + 1 for j in remaining)}")

    def _ready(self, placed: int) -> list[int]:
        return [
            j
            for j in range(self.d)
            if not (placed >> j) & 1 and self.pred_masks[j] & ~placed == 0
        ]

    def extension_counts(self) -> dict[int, int]:
        """Completions of each already-placed down-set, by mask."""
        counts = {(1 << self.d) - 1: 1}

        def count(placed: int) -> int:
            hit = counts.get(placed)
            if hit is None:
                hit = sum(count(placed | (1 << j)) for j in self._ready(placed))
                counts[placed] = hit
            return hit

        count(0)
        return counts

    def num_extensions(self) -> int:
        return self.extension_counts()[0]

    def enumerate_extensions(self) -> Iterator[tuple[int, ...]]:
        def rec(placed: int, prefix: list[int]) -> Iterator[tuple[int, ...]]:
            if len(prefix) == self.d:
                yield tuple(prefix)
                return
            for j in self._ready(placed):
                prefix.append(j)
                yield from rec(placed | (1 << j), prefix)
                prefix.pop()

        yield from rec(0, [])

    def expand(self, d: int) -> list[tuple[tuple[int, ...], float]]:
        if d != self.d:
            raise GameError("player count mismatch")
        n = self.num_extensions()
        if n > MAX_ENUMERATION:
            raise SupportTooLargeError(
                f"{n} linear extensions is too many to enumerate; "
                "use the Monte Carlo estimator instead"
            )
        p = 1.0 / n
        return [(pi, p) for pi in self.enumerate_extensions()]

    def sample(self, d: int, rng: np.random.Generator) -> tuple[int, ...]:
        """Draw uniformly by walking the down-set lattice with exact counts."""
        if d != self.d:
            raise GameError("player count mismatch")
        counts = getattr(self, "_counts", None)
        if counts is None:
            counts = self.extension_counts()
            object.__setattr__(self, "_counts", counts)
        placed = 0
        order = []
        for _ in range(self.d):
            ready = self._ready(placed)
            weights = np.array([counts[placed | (1 << j)] for j in ready], dtype=float)
            j = ready[int(rng.choice(len(ready), p=weights / weights.sum()))]
            order.append(j)
            placed |= 1 << j
        return tuple(order)


@dataclass(frozen=True)
class SeededSampler:
    """Opaque ordering sampler; draw(rng) must return a permutation of 0..d-1."""

    d: int
    draw: Callable[[np.random.Generator], Sequence[int]]

    def sample(self, d: int, rng: np.random.Generator) -> tuple[int, ...]:
        pi = tuple(int(j) for j in self.draw(rng))
        if sorted(pi) != list(range(d)):
            raise GameError(f"sampler returned invalid ordering {pi}")
        return pi


RandomOrderDistribution = Uniform | Explicit | PartialOrderUniform | SeededSampler


def causal_orderings(d: int, edges: Sequence[tuple[int, int]]) -> PartialOrderUniform:
    """Distribution uniform over orderings consistent with a causal DAG.

    Edges are (ancestor, descendant) pairs, 0-indexed; every ancestor is
    forced to appear before its descendants.
    """
    preds = [0] * d
    for u, vtx in edges:
        if not (0 <= u < d and 0 <= vtx < d):
            raise GameError(f"edge ({u}, {vtx}) references unknown player")
        if u == vtx:
            raise GameError(f"self-loop on player {u + 1}")
        preds[vtx] |= 1 << u
    # transitive closure so ready-checks see indirect ancestors too
    changed = True
    while changed:
        changed = False
        for j in range(d):
            clos = preds[j]
            m = preds[j]
            while m:
                low = m & -m
                clos |= preds[low.bit_length() - 1]
                m ^= low
            if clos != preds[j]:
                preds[j] = clos
                changed = True
        if any((preds[j] >> j) & 1 for j in range(d)):
            raise GameError("cycle detected in causal DAG")
    return PartialOrderUniform(d, tuple(preds))


def causal_orderings_from_json(d: int, text: str) -> PartialOrderUniform:
    """Parse {"edges":[[1,2],...]} with 1-indexed players."""
    obj = json.loads(text)
    edges = [(int(u) - 1, int(v) - 1) for u, v in obj["edges"]]
    return causal_orderings(d, edges)
