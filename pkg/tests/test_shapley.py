import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svea import fixtures
from svea.data import Dataset
from svea.errors import InputError, SizeLimitError
from svea.game import GameCache, TabularGame, random_monotone_game
from svea.shapley import (exact_shapley, game_svea, monte_carlo_shapley, permutation_shapley,
                          resolve_method, sampled_permutations, shapley, svea)


def additive_game(weights):
    w = np.asarray(weights, float)
    n = w.size
    return TabularGame.from_function(n, lambda s: float(sum(w[j] for j in range(n) if s >> j & 1)))


def test_additive_game_returns_weights():
    g = additive_game([0.3, 0.0, 1.2, 0.5])
    for alloc in (exact_shapley(g), permutation_shapley(g)):
        np.testing.assert_allclose(alloc.phi, [0.3, 0.0, 1.2, 0.5], atol=1e-12)
    # Every order gives the same marginals in an additive game.
    np.testing.assert_allclose(monte_carlo_shapley(g, 7, seed=3).phi, [0.3, 0.0, 1.2, 0.5],
                               atol=1e-12)


def test_two_player_closed_form():
    a, b, grand = 0.1, 0.05, 0.5
    g = TabularGame([0.0, a, b, grand])
    phi = exact_shapley(g).phi
    assert phi[0] == pytest.approx((a + grand - b) / 2)
    assert phi[1] == pytest.approx((b + grand - a) / 2)
    e = svea(exact_shapley(g), 1.0, 0.5).e
    np.testing.assert_allclose(e, [0.5 - phi[0], 0.5 - phi[1]])
    assert e[0] < e[1]


def test_exact_matches_permutation_oracle_on_50_games():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 7))
        g = random_monotone_game(n, rng)
        np.testing.assert_allclose(exact_shapley(g).phi, permutation_shapley(g).phi, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 8))
def test_exact_is_efficient_and_nonnegative_on_monotone_games(seed, n):
    g = random_monotone_game(n, np.random.default_rng(seed))
    phi = exact_shapley(g).phi
    assert phi.sum() == pytest.approx(g.grand_value, abs=1e-9)
    assert np.all(phi >= -1e-12)


def test_symmetric_players_get_equal_shares():
    # Players 0 and 2 are interchangeable.
    def fn(s):
        a, b, c = s & 1, s >> 1 & 1, s >> 2 & 1
        return 0.4 * (a or c) + 0.1 * b + 0.2 * (a and c)
    g = TabularGame.from_function(3, fn)
    phi = exact_shapley(g).phi
    assert phi[0] == pytest.approx(phi[2], abs=1e-15)


def test_null_player_gets_zero():
    g = TabularGame.from_function(3, lambda s: 0.7 * (s & 1) + 0.2 * (s >> 2 & 1))
    assert exact_shapley(g).phi[1] == pytest.approx(0.0, abs=1e-15)


def test_duplicated_feature_splits_credit_evenly():
    rng = np.random.default_rng(1)
    m = 120
    y = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    x = rng.normal(size=(m, 2)) + np.outer(y, [0.8, 0.2])
    d = Dataset(np.hstack([x, x[:, [0]]]), y)
    phi = exact_shapley(GameCache(d)).phi
    assert phi[0] == pytest.approx(phi[2], abs=1e-7)


def test_monte_carlo_is_efficient_and_deterministic():
    g = random_monotone_game(6, np.random.default_rng(2))
    a = monte_carlo_shapley(g, 40, seed=11)
    b = monte_carlo_shapley(g, 40, seed=11)
    assert a.phi.tobytes() == b.phi.tobytes()
    assert a.phi.sum() == pytest.approx(g.grand_value, abs=1e-12)
    assert not np.array_equal(a.phi, monte_carlo_shapley(g, 40, seed=12).phi)


def test_sampled_orders_are_permutations_and_prefix_stable():
    p = sampled_permutations(5, 30, seed=4)
    assert p.shape == (30, 5)
    assert all(sorted(row) == list(range(5)) for row in p.tolist())
    np.testing.assert_array_equal(p[:10], sampled_permutations(5, 10, seed=4))


def test_monte_carlo_unbiased_over_200_seeds():
    g = random_monotone_game(5, np.random.default_rng(9))
    exact = exact_shapley(g).phi
    est = np.array([monte_carlo_shapley(g, 50, seed=s).phi for s in range(200)])
    se = est.std(axis=0, ddof=1) / math.sqrt(est.shape[0])
    assert np.all(np.abs(est.mean(axis=0) - exact) <= 3 * se + 1e-12)


def test_monte_carlo_thread_count_is_irrelevant():
    rng = np.random.default_rng(6)
    y = np.where(rng.random(80) < 0.5, 1.0, -1.0)
    d = Dataset(rng.normal(size=(80, 6)) + 0.5 * y[:, None], y)
    a, b = GameCache(d), GameCache(d)
    ra = monte_carlo_shapley(a, 30, seed=5, threads=1)
    rb = monte_carlo_shapley(b, 30, seed=5, threads=8)
    assert ra.phi.tobytes() == rb.phi.tobytes()
    assert ra.lp_solves == rb.lp_solves


def test_method_dispatch():
    assert resolve_method("auto", 9) == "exact"
    assert resolve_method("auto", 10) == "mc"
    with pytest.raises(InputError):
        resolve_method("bogus", 3)
    g = random_monotone_game(3, np.random.default_rng(0))
    assert shapley(g, "auto").method == "exact"
    assert shapley(g, "mc", samperm=5).samperm == 5


def test_limits():
    with pytest.raises(InputError):
        permutation_shapley(random_monotone_game(9, np.random.default_rng(0)))
    with pytest.raises(SizeLimitError):
        exact_shapley(random_monotone_game(4, np.random.default_rng(0)), limit=3)
    with pytest.raises(InputError):
        monte_carlo_shapley(random_monotone_game(2, np.random.default_rng(0)), samperm=0)


def test_svea_sums_to_total_error():
    g = random_monotone_game(4, np.random.default_rng(3))
    c = g.grand_value + 0.3
    alloc = svea(exact_shapley(g), c, c - g.grand_value)
    assert alloc.e.sum() == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(InputError):
        svea(exact_shapley(g), 0.1, 0.2)


def test_game_svea_on_data_reports_solves_once():
    rng = np.random.default_rng(8)
    y = np.where(rng.random(60) < 0.4, 1.0, -1.0)
    d = Dataset(rng.normal(size=(60, 3)) + 0.7 * y[:, None], y)
    cache = GameCache(d)
    alloc = game_svea(cache)
    assert alloc.shapley.lp_solves == 7
    assert alloc.e.sum() == pytest.approx(alloc.total_error, abs=1e-9)
    assert np.all(alloc.e <= alloc.empty_error / 3 + 1e-9)


def test_titanic_shapley_matches_reference_values():
    alloc = exact_shapley(fixtures.titanic_game())
    np.testing.assert_allclose(alloc.phi, [0.0, 0.00227, 0.195820082], atol=5e-6)
    assert alloc.phi[2] == pytest.approx(0.195820082, abs=1e-9)
