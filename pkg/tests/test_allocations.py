import itertools

import numpy as np
import pytest

from coalition_attr import (
    Explicit,
    Game,
    GameError,
    SeededSampler,
    SupportTooLargeError,
    Uniform,
    WeightSystem,
    causal_orderings,
    dual_game,
    efficiency_gap,
    harsanyi_allocate,
    marginal_vector,
    pme,
    proportional_value,
    shapley_direct,
    shapley_dividends,
    shapley_permutation,
    weber_allocate,
    weber_monte_carlo,
)
from conftest import g3_fixture, random_game, shapley_oracle, unanimity_game


# ---------------------------------------------------------------- Shapley

def test_shapley_direct_reference(g2):
    assert np.allclose(shapley_direct(g2).payoffs, [1.5, 2.5], atol=1e-14)


def test_shapley_unanimity_pair():
    assert np.allclose(shapley_direct(unanimity_game(2, 0b11)).payoffs, [0.5, 0.5], atol=1e-14)


def test_shapley_dual_fixture_closed_form():
    for rho in (0.0, 0.3, 0.5, 0.9):
        w = dual_game(g3_fixture(rho))
        want = [0.5 * (1 - rho**2 / 2), 0.5, rho**2 / 4]
        assert np.allclose(shapley_direct(w).payoffs, want, atol=1e-12)


def test_shapley_matches_brute_force_oracle():
    rng = np.random.default_rng(20)
    for d in range(1, 7):
        g = random_game(d, rng)
        assert np.allclose(shapley_direct(g).payoffs, shapley_oracle(g), atol=1e-12)


def test_shapley_permutation_routes(g2):
    assert np.allclose(shapley_permutation(g2).payoffs, [1.5, 2.5], atol=1e-14)
    rng = np.random.default_rng(21)
    g = random_game(5, rng)
    assert np.max(np.abs(shapley_permutation(g).payoffs - shapley_direct(g).payoffs)) <= 1e-12


def test_shapley_permutation_unanimity_triple():
    a = shapley_permutation(unanimity_game(3, 0b111))
    assert np.allclose(a.payoffs, [1 / 3] * 3, atol=1e-14)


def test_shapley_dividends_routes(g2):
    assert np.allclose(shapley_dividends(g2).payoffs, [1.5, 2.5], atol=1e-14)
    t = shapley_dividends(unanimity_game(4, 0b0110))
    assert np.allclose(t.payoffs, [0, 0.5, 0.5, 0], atol=1e-14)
    rng = np.random.default_rng(22)
    g = random_game(6, rng)
    assert np.max(np.abs(shapley_dividends(g).payoffs - shapley_direct(g).payoffs)) <= 1e-12


def test_cross_route_equality_random():
    rng = np.random.default_rng(23)
    for d in range(1, 8):
        g = random_game(d, rng)
        routes = [
            shapley_direct(g).payoffs,
            shapley_permutation(g).payoffs,
            shapley_dividends(g).payoffs,
            harsanyi_allocate(g, WeightSystem("egalitarian")).payoffs,
            weber_allocate(g, Uniform()).payoffs,
        ]
        for a, b in itertools.combinations(routes, 2):
            assert np.max(np.abs(a - b)) <= 1e-10


def test_shapley_self_duality():
    rng = np.random.default_rng(24)
    for d in range(1, 7):
        g = random_game(d, rng)
        a = shapley_direct(g).payoffs
        b = shapley_direct(dual_game(g)).payoffs
        assert np.max(np.abs(a - b)) <= 1e-10


def test_dummy_player_gets_zero():
    # player 3 never changes any coalition's worth
    rng = np.random.default_rng(25)
    base = rng.normal(size=4)
    vals = np.array([base[m & 0b11] for m in range(8)])
    g = Game(3, vals)
    for p in (Uniform(), Explicit.point_mass((2, 0, 1)), causal_orderings(3, [(0, 1)])):
        assert weber_allocate(g, p).payoffs[2] == pytest.approx(0.0, abs=1e-14)


# ---------------------------------------------------------------- Weber

def test_weber_point_masses(g2):
    assert np.allclose(weber_allocate(g2, Explicit.point_mass((0, 1))).payoffs, [1, 3])
    assert np.allclose(weber_allocate(g2, Explicit.point_mass((1, 0))).payoffs, [2, 2])


def test_weber_uniform_is_shapley(g2):
    assert np.allclose(weber_allocate(g2, Uniform()).payoffs, shapley_direct(g2).payoffs,
                       atol=1e-14)


def test_weber_rejects_sampler():
    with pytest.raises(GameError, match="weber_monte_carlo"):
        weber_allocate(Game(2, np.zeros(4)), SeededSampler(2, lambda rng: (0, 1)))


def test_weber_too_large_directs_to_mc():
    rng = np.random.default_rng(26)
    g = random_game(9, rng)
    with pytest.raises(SupportTooLargeError, match="Monte Carlo"):
        weber_allocate(g, Uniform())


def test_weber_efficiency_arbitrary_pmf():
    rng = np.random.default_rng(27)
    for _ in range(20):
        d = int(rng.integers(1, 6))
        g = random_game(d, rng)
        perms = list(itertools.permutations(range(d)))
        k = int(rng.integers(1, len(perms) + 1))
        chosen = [perms[i] for i in rng.choice(len(perms), size=k, replace=False)]
        probs = rng.dirichlet(np.ones(k))
        p = Explicit(tuple(chosen), tuple(probs))
        assert abs(efficiency_gap(g, weber_allocate(g, p))) <= 1e-10


def test_weber_linearity_in_game():
    rng = np.random.default_rng(28)
    p = Explicit(((0, 1, 2), (2, 1, 0)), (0.3, 0.7))
    ga, gb = random_game(3, rng), random_game(3, rng)
    combo = Game(3, 2.0 * ga.values - 3.0 * gb.values)
    want = 2.0 * weber_allocate(ga, p).payoffs - 3.0 * weber_allocate(gb, p).payoffs
    assert np.allclose(weber_allocate(combo, p).payoffs, want, atol=1e-12)


def test_telescoping_every_permutation():
    rng = np.random.default_rng(29)
    for d in range(1, 7):
        g = random_game(d, rng)
        span = g.v_full - g.v_empty
        for order in itertools.permutations(range(d)):
            assert abs(np.sum(marginal_vector(g, order)) - span) <= 1e-12


def test_weber_causal_dag_allocation():
    g = g3_fixture(0.5)
    p = causal_orderings(3, [(0, 1)])
    a = weber_allocate(g, p)
    # oracle: plain average over the three orderings with player 1 before 2
    orders = [(0, 1, 2), (0, 2, 1), (2, 0, 1)]
    want = np.mean([marginal_vector(g, o) for o in orders], axis=0)
    assert np.allclose(a.payoffs, want, atol=1e-14)
    assert abs(efficiency_gap(g, a)) <= 1e-10


# ---------------------------------------------------------------- Monte Carlo

def test_weber_mc_close_to_exact(g2):
    a = weber_monte_carlo(g2, Uniform(), 10_000, seed=42)
    exact = shapley_direct(g2).payoffs
    assert np.all(np.abs(a.payoffs - exact) <= 3 * a.stderr + 1e-12)


def test_weber_mc_point_mass_exact(g2):
    p = SeededSampler(2, lambda rng: (1, 0))
    a = weber_monte_carlo(g2, p, 100, seed=0)
    assert np.allclose(a.payoffs, [2, 2], atol=1e-14)
    assert np.allclose(a.stderr, 0.0, atol=1e-14)


def test_weber_mc_deterministic(g2):
    a = weber_monte_carlo(g2, Uniform(), 5000, seed=9)
    b = weber_monte_carlo(g2, Uniform(), 5000, seed=9)
    assert np.array_equal(a.payoffs, b.payoffs)
    assert np.array_equal(a.stderr, b.stderr)


def test_weber_mc_serial_vs_parallel_bit_identical():
    rng = np.random.default_rng(30)
    g = random_game(6, rng)
    a = weber_monte_carlo(g, Uniform(), 10_000, seed=123, threads=1)
    b = weber_monte_carlo(g, Uniform(), 10_000, seed=123, threads=4)
    assert np.array_equal(a.payoffs, b.payoffs)
    assert np.array_equal(a.stderr, b.stderr)


def test_weber_mc_rejects_tiny_n(g2):
    with pytest.raises(GameError):
        weber_monte_carlo(g2, Uniform(), 1, seed=0)


def test_weber_mc_partial_order(g2):
    p = causal_orderings(2, [(1, 0)])  # player 2 always first
    a = weber_monte_carlo(g2, p, 500, seed=5)
    assert np.allclose(a.payoffs, [2, 2], atol=1e-14)


# ---------------------------------------------------------------- Harsanyi

def test_harsanyi_egalitarian_is_shapley(g2):
    a = harsanyi_allocate(g2, WeightSystem("egalitarian"))
    assert np.allclose(a.payoffs, [1.5, 2.5], atol=1e-14)


def test_harsanyi_min_owner(g2):
    a = harsanyi_allocate(g2, WeightSystem("min-owner"))
    assert np.allclose(a.payoffs, [2.0, 2.0], atol=1e-14)


def test_harsanyi_rejects_bad_row_sum(g2):
    w = WeightSystem("custom", {(0, 1): 1.0, (1, 2): 1.0, (0, 3): 0.4, (1, 3): 0.5})
    with pytest.raises(GameError, match="sum"):
        harsanyi_allocate(g2, w)


def test_harsanyi_rejects_support_outside_coalition(g2):
    with pytest.raises(GameError, match="outside"):
        WeightSystem("custom", {(1, 1): 1.0})


def test_harsanyi_rejects_negative_weight():
    with pytest.raises(GameError, match="negative"):
        WeightSystem("custom", {(0, 1): -0.5})


def test_harsanyi_efficiency_random_weight_systems():
    rng = np.random.default_rng(31)
    for _ in range(20):
        d = int(rng.integers(1, 6))
        g = random_game(d, rng)
        entries = {}
        for mask in range(1, 1 << d):
            ms = [j for j in range(d) if (mask >> j) & 1]
            w = rng.dirichlet(np.ones(len(ms)))
            for j, wj in zip(ms, w):
                entries[(j, mask)] = float(wj)
        a = harsanyi_allocate(g, WeightSystem("custom", entries))
        assert abs(efficiency_gap(g, a)) <= 1e-10


def test_harsanyi_linearity_in_game():
    rng = np.random.default_rng(32)
    ga, gb = random_game(4, rng), random_game(4, rng)
    w = WeightSystem("min-owner")
    combo = Game(4, 0.5 * ga.values + 2.0 * gb.values)
    want = 0.5 * harsanyi_allocate(ga, w).payoffs + 2.0 * harsanyi_allocate(gb, w).payoffs
    assert np.allclose(harsanyi_allocate(combo, w).payoffs, want, atol=1e-12)


def test_weight_system_json():
    w = WeightSystem.from_json('{"preset":"egalitarian"}')
    assert w.weight(0, 0b11) == pytest.approx(0.5)
    w2 = WeightSystem.from_json('{"entries":[{"player":1,"coalition":1,"w":1.0}]}')
    assert w2.weight(0, 1) == 1.0
    assert w2.preset == "custom"


# ---------------------------------------------------------------- proportional

def test_proportional_value_two_player(g2):
    a = proportional_value(g2)
    assert np.allclose(a.payoffs, [4 / 3, 8 / 3], atol=1e-14)


def test_proportional_value_symmetric_game():
    vals = np.array([0.7, 1.0, 1.0, 2.0, 1.0, 2.0, 2.0, 4.2])
    g = Game(3, vals)
    assert np.allclose(proportional_value(g).payoffs, [1.4, 1.4, 1.4], atol=1e-12)


def test_proportional_value_rejects_nonpositive():
    g = Game(2, np.array([0.0, 1.0, 0.0, 2.0]))
    with pytest.raises(GameError, match=r"\{2\}"):
        proportional_value(g)


def test_proportional_value_efficient_at_top_level():
    rng = np.random.default_rng(33)
    for d in range(1, 7):
        g = random_game(d, rng, positive=True)
        a = proportional_value(g)
        assert np.sum(a.payoffs) == pytest.approx(g.v_full, abs=1e-10)


def _restrict(g: Game, keep: list[int]) -> Game:
    """Subgame on the players in `keep`, relabeled 0..len(keep)-1."""
    vals = np.empty(1 << len(keep))
    for m in range(1 << len(keep)):
        full_m = sum(1 << keep[i] for i in range(len(keep)) if (m >> i) & 1)
        vals[m] = g.values[full_m]
    return Game(len(keep), vals)


def test_proportional_value_ratio_preservation():
    # defining property: phi_i(D)/phi_j(D) = phi_i(D\{j}) / phi_j(D\{i}),
    # checked against independently computed subgames
    rng = np.random.default_rng(34)
    for d in (3, 4):
        g = random_game(d, rng, positive=True)
        full = proportional_value(g).payoffs
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                keep_i = [k for k in range(d) if k != j]
                keep_j = [k for k in range(d) if k != i]
                phi_i = proportional_value(_restrict(g, keep_i)).payoffs[keep_i.index(i)]
                phi_j = proportional_value(_restrict(g, keep_j)).payoffs[keep_j.index(j)]
                assert full[i] / full[j] == pytest.approx(phi_i / phi_j, rel=1e-10)


# ---------------------------------------------------------------- pme

def test_pme_fixture_values():
    for rho in (0.0, 0.5):
        a = pme(g3_fixture(rho))
        assert np.allclose(a.payoffs, [0.5, 0.5, 0.0], atol=1e-4)
        assert a.method == "pme"


def test_pme_strictly_positive_dual_is_exact_pv():
    rng = np.random.default_rng(35)
    vals = np.sort(rng.uniform(0.5, 1.0, 16))  # monotone game: dual positive
    g = Game(4, vals)
    w = dual_game(g)
    assert np.all(w.values[1:] > 0)
    assert np.array_equal(pme(g).payoffs, proportional_value(w).payoffs)


def test_pme_rejects_negative_dual():
    g = Game(2, np.array([0.0, 1.0, 5.0, 2.0]))  # w({1}) = 2 - 5 < 0
    with pytest.raises(GameError, match="negative"):
        pme(g)
