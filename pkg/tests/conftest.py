import itertools

import numpy as np
import pytest

from coalition_attr import Game


@pytest.fixture
def g2():
    # reference two-player fixture: v = {empty:0, {1}:1, {2}:2, {1,2}:4}
    return Game(2, np.array([0.0, 1.0, 2.0, 4.0]))


def g3_fixture(rho: float) -> Game:
    """Normalized variance game of the three-feature analytic example,
    tabulated by hand from Gaussian conditional variances."""
    return Game(3, np.array([
        0.0,                 # empty
        0.5,                 # {1}
        0.5,                 # {2}
        1.0,                 # {1,2}
        rho**2 / 2,          # {3}
        0.5,                 # {1,3}
        (1 + rho**2) / 2,    # {2,3}
        1.0,                 # {1,2,3}
    ]))


def random_game(d: int, rng: np.random.Generator, positive: bool = False) -> Game:
    vals = rng.uniform(0.1, 2.0, 1 << d) if positive else rng.normal(size=1 << d)
    return Game(d, vals)


def unanimity_game(d: int, t_mask: int) -> Game:
    vals = np.array([1.0 if m & t_mask == t_mask else 0.0 for m in range(1 << d)])
    return Game(d, vals)


def shapley_oracle(g: Game) -> np.ndarray:
    """Independent brute force: average marginal contribution over every
    ordering, built from explicit prefix sets rather than bitmask walks."""
    totals = np.zeros(g.d)
    count = 0
    for order in itertools.permutations(range(g.d)):
        for pos, j in enumerate(order):
            before = frozenset(order[:pos])
            with_j = sum(1 << i for i in before | {j})
            without = sum(1 << i for i in before)
            totals[j] += g.values[with_j] - g.values[without]
        count += 1
    return totals / count
