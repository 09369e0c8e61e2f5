"""Efficient allocation schemes: marginal-contribution averages over random
orders (Weber family), dividend redistributions (Harsanyi family), three
independent Shapley routes, proportional values, and proportional marginal
effects on the dual game.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dividends import dividends_fast
from .games import Allocation, Game, GameError, coalition_label, dual_game, popcount_table
from .orderings import Explicit, PartialOrderUniform, RandomOrderDistribution, SeededSampler, Uniform

WEIGHT_TOL = 1e-9

# Fixed Monte Carlo chunk size: per-chunk RNG streams make serial and
# threaded runs bit-identical.
MC_CHUNK = 1024


def shapley_direct(g: Game) -> Allocation:
    """Coalition-enumeration Shapley: binomially weighted marginal gains."""
    d, v = g.d, g.values
    sizes = popcount_table(d)
    # weight of a coalition of size s not containing j
    w = np.array([1.0 / (d * math.comb(d - 1, s)) for s in range(d)])
    payoffs = np.empty(d)
    masks = np.arange(1 << d)
    for j in range(d):
        bit = 1 << j
        without = masks[(masks & bit) == 0]
        payoffs[j] = np.dot(w[sizes[without]], v[without | bit] - v[without])
    return Allocation(payoffs, "shapley")


def marginal_vector(g: Game, order: Sequence[int]) -> np.ndarray:
    """Per-player marginal contributions along a single ordering."""
    out = np.empty(g.d)
    placed = 0
    for j in order:
        bit = 1 << j
        out[j] = g.values[placed | bit] - g.values[placed]
        placed |= bit
    return out


def _batch_marginals(g: Game, orders: np.ndarray) -> np.ndarray:
    """Marginal-contribution matrix, one row per ordering in `orders`.

    Prefix coalitions are cumulative sums of player bits (each bit occurs
    once per row, so sum == bitwise or).
    """
    bits = (1 << orders.astype(np.int64))
    prefix = np.cumsum(bits, axis=1)
    delta = g.values[prefix] - g.values[prefix - bits]
    out = np.empty_like(delta)
    out[np.arange(orders.shape[0])[:, None], orders] = delta
    return out


def weber_allocate(g: Game, p: RandomOrderDistribution) -> Allocation:
    """Exact expected marginal contribution under a finite-support pmf."""
    if isinstance(p, SeededSampler):
        raise GameError("opaque samplers cannot be expanded; use weber_monte_carlo")
    pairs = p.expand(g.d)
    orders = np.array([o for o, _ in pairs], dtype=np.int64)
    probs = np.array([q for _, q in pairs])
    payoffs = probs @ _batch_marginals(g, orders)
    return Allocation(payoffs, "weber")


def shapley_permutation(g: Game) -> Allocation:
    """Ordering-enumeration Shapley: uniform average over all d! orderings."""
    a = weber_allocate(g, Uniform())
    return Allocation(a.payoffs, "shapley-perm")


def shapley_dividends(g: Game) -> Allocation:
    """Dividend-sharing Shapley: each coalition's dividend split equally."""
    phi = dividends_fast(g).dividends
    sizes = popcount_table(g.d)
    payoffs = np.empty(g.d)
    masks = np.arange(1 << g.d)
    for j in range(g.d):
        has_j = masks[(masks & (1 << j)) != 0]
        payoffs[j] = np.sum(phi[has_j] / sizes[has_j])
    return Allocation(payoffs, "shapley-div")


@dataclass(frozen=True)
class WeightSystem:
    """Sparse per-coalition sharing weights with a preset default rule.

    Presets: "egalitarian" (1/|A| to each member), "min-owner" (everything
    to the lowest-indexed member), "custom" (missing entries are zero).
    Stored entries override the preset.
    """

    preset: str = "egalitarian"
    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    PRESETS = ("egalitarian", "min-owner", "custom")

    def __post_init__(self):
        if self.preset not in self.PRESETS:
            raise GameError(f"unknown weight preset {self.preset!r}")
        for (j, mask), w in self.entries.items():
            if w < 0:
                raise GameError(f"negative weight for player {j + 1} on {coalition_label(mask)}")
            if not (mask >> j) & 1 and w != 0:
                raise GameError(
                    f"nonzero weight for player {j + 1} outside {coalition_label(mask)}"
                )

    def weight(self, j: int, mask: int) -> float:
        if (j, mask) in self.entries:
            return self.entries[(j, mask)]
        if not (mask >> j) & 1:
            return 0.0
        if self.preset == "egalitarian":
            return 1.0 / mask.bit_count()
        if self.preset == "min-owner":
            return 1.0 if mask & -mask == 1 << j else 0.0
        return 0.0

    def validate(self, d: int) -> None:
        for mask in range(1, 1 << d):
            total = 0.0
            for j in range(d):
                w = self.weight(j, mask)
                if w < 0:
                    raise GameError(
                        f"negative weight for player {j + 1} on {coalition_label(mask)}"
                    )
                if not (mask >> j) & 1 and w != 0:
                    raise GameError(
                        f"weight assigned to player {j + 1} outside {coalition_label(mask)}"
                    )
                total += w
            if abs(total - 1.0) > WEIGHT_TOL:
                raise GameError(
                    f"weights on {coalition_label(mask)} sum to {total}, expected 1"
                )

    @classmethod
    def from_json(cls, text: str) -> "WeightSystem":
        """Parse {"preset":...} and/or {"entries":[{"player","coalition","w"},...]}."""
        obj = json.loads(text)
        entries = {
            (int(e["player"]) - 1, int(e["coalition"])): float(e["w"])
            for e in obj.get("entries", [])
        }
        preset = obj.get("preset", "custom" if entries else "egalitarian")
        return cls(preset, entries)


def harsanyi_allocate(g: Game, weights: WeightSystem) -> Allocation:
    """Redistribute each nonempty coalition's dividend among its members."""
    weights.validate(g.d)
    phi = dividends_fast(g).dividends
    payoffs = np.zeros(g.d)
    for mask in range(1, 1 << g.d):
        if phi[mask] == 0.0:
            continue
        for j in range(g.d):
            if (mask >> j) & 1:
                payoffs[j] += weights.weight(j, mask) * phi[mask]
    return Allocation(payoffs, f"harsanyi-{weights.preset}")


def weber_monte_carlo(
    g: Game,
    p: RandomOrderDistribution,
    n: int,
    seed: int,
    threads: int = 1,
) -> Allocation:
    """Sample-mean estimate of the expected marginal contribution.

    Orderings are drawn in fixed chunks of MC_CHUNK, each chunk from its own
    seed-derived stream, and chunk results are reduced in index order, so
    the output is bit-identical for any thread count.
    """
    if n < 2:
        raise GameError("Monte Carlo needs n >= 2")
    nchunks = (n + MC_CHUNK - 1) // MC_CHUNK

    def run_chunk(k: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(np.random.SeedSequence((seed, k)))
        m = min(MC_CHUNK, n - k * MC_CHUNK)
        if isinstance(p, Uniform):
            orders = rng.permuted(np.tile(np.arange(g.d), (m, 1)), axis=1)
        else:
            orders = np.array([p.sample(g.d, rng) for _ in range(m)], dtype=np.int64)
        mv = _batch_marginals(g, orders)
        return mv.sum(axis=0), (mv * mv).sum(axis=0)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_chunk, range(nchunks)))
    else:
        parts = [run_chunk(k) for k in range(nchunks)]
    total = np.zeros(g.d)
    total2 = np.zeros(g.d)
    for s, s2 in parts:
        total += s
        total2 += s2
    mean = total / n
    var = np.maximum(total2 - n * mean * mean, 0.0) / (n - 1)
    return Allocation(mean, "weber-mc", stderr=np.sqrt(var / n))


def proportional_value(g: Game) -> Allocation:
    """Efficient allocation preserving payoff ratios across subgames.

    Needs v(A) > 0 on every nonempty coalition. Subset recursion:
    phi_i({i}) = v({i}), and for |S| >= 2
    phi_i(S) = v(S) / (1 + sum_{j in S, j != i} phi_j(S\\{i}) / phi_i(S\\{j})).
    """
    d, v = g.d, g.values
    for mask in range(1, 1 << d):
        if v[mask] <= 0:
            raise GameError(
                f"proportional value needs strictly positive worth; "
                f"v({coalition_label(mask)}) = {v[mask]}"
            )
    sizes = popcount_table(d)
    table = np.zeros((1 << d, d))
    for j in range(d):
        table[1 << j, j] = v[1 << j]
    for mask in sorted(range(1, 1 << d), key=lambda m: int(sizes[m])):
        if sizes[mask] < 2:
            continue
        for i in range(d):
            if not (mask >> i) & 1:
                continue
            acc = 1.0
            for j in range(d):
                if j != i and (mask >> j) & 1:
                    denom = table[mask ^ (1 << j), i]
                    assert denom > 0.0
                    acc += table[mask ^ (1 << i), j] / denom
            table[mask, i] = v[mask] / acc
    return Allocation(table[(1 << d) - 1], "proportional")


# Epsilon ladder for proportional values on duals with zero coalitions:
# shift all nonempty worths up by eps and accept once two successive
# results agree to PME_CONVERGENCE per coordinate.
PME_EPS_LADDER = tuple(10.0**-k for k in range(2, 9))
PME_CONVERGENCE = 1e-6


def pme(g: Game) -> Allocation:
    """Proportional marginal effects: proportional value of the dual game."""
    w = dual_game(g)
    neg = [m for m in range(1, 1 << g.d) if w.values[m] < 0]
    if neg:
        raise GameError(
            f"dual worth is negative on {coalition_label(neg[0])}; "
            "proportional marginal effects are undefined"
        )
    if all(w.values[m] > 0 for m in range(1, 1 << g.d)):
        return Allocation(proportional_value(w).payoffs, "pme")
    prev = None
    for eps in PME_EPS_LADDER:
        shifted = w.values.copy()
        shifted[1:] += eps
        cur = proportional_value(Game(g.d, shifted)).payoffs
        if prev is not None and np.max(np.abs(cur - prev)) <= PME_CONVERGENCE:
            return Allocation(cur, "pme")
        prev = cur
    raise GameError("epsilon extrapolation for proportional marginal effects did not converge")
