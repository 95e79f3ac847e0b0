"""Shapley values of a game and the error apportioning derived from them.

Three estimators share one result type:

* ``exact``: the subset formula, weight ``|S|! (n-|S|-1)! / n!`` on the
  marginal contribution of ``j`` to each ``S`` not containing ``j``;
* ``permutation``: the average marginal contribution over all ``n!``
  orders (an independent oracle for small ``n``);
* ``monte_carlo``: the same average over ``samPerm`` sampled orders.

Sampled order ``k`` is a Fisher–Yates shuffle driven by the SplitMix64
stream keyed by ``(seed, k)``, so the estimate does not depend on how the
work is scheduled.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import InputError
from .game import EXHAUSTIVE_LIMIT, full_mask, require_exhaustive

PERMUTATION_LIMIT = 8
AUTO_EXACT_BELOW = 10
DEFAULT_SAMPERM = 100


@dataclass(frozen=True)
class ShapleyAllocation:
    phi: np.ndarray
    grand_value: float
    method: str
    samperm: int | None = None
    seed: int | None = None
    lp_solves: int = 0

    @property
    def n(self) -> int:
        return self.phi.size


@dataclass(frozen=True)
class SveaAllocation:
    """Error apportioning ``e_j = empty_error / n - phi_j``."""

    e: np.ndarray
    empty_error: float
    total_error: float
    shapley: ShapleyAllocation

    @property
    def phi(self) -> np.ndarray:
        return self.shapley.phi

    @property
    def n(self) -> int:
        return self.e.size


def _solves_since(game, before: int) -> int:
    return getattr(game, "lp_solves", 0) - before


def exact_shapley(game, threads: int = 1, limit: int = EXHAUSTIVE_LIMIT) -> ShapleyAllocation:
    """Subset-formula Shapley values; evaluates every coalition."""
    n = game.n
    require_exhaustive(n, limit)
    before = getattr(game, "lp_solves", 0)
    v = game.all_values(threads)
    masks = np.arange(1 << n)
    sizes = np.array([bin(s).count("1") for s in range(1 << n)])
    weight = np.array([1.0 / (n * math.comb(n - 1, s)) if s < n else 0.0
                       for s in range(n + 1)])
    phi = np.empty(n)
    for j in range(n):
        bit = 1 << j
        without = masks[(masks & bit) == 0]
        phi[j] = np.sum(weight[sizes[without]] * (v[without | bit] - v[without]))
    return ShapleyAllocation(phi, float(v[-1]), "exact",
                             lp_solves=_solves_since(game, before))


def permutation_shapley(game) -> ShapleyAllocation:
    """Average marginal contribution over all ``n!`` player orders (``n <= 8``)."""
    n = game.n
    if n > PERMUTATION_LIMIT:
        raise InputError(f"full permutation enumeration needs n <= {PERMUTATION_LIMIT}, got {n}")
    before = getattr(game, "lp_solves", 0)
    totals = [0.0] * n
    count = 0
    for order in itertools.permutations(range(n)):
        mask, prev = 0, game.value(0)
        for j in order:
            mask |= 1 << j
            cur = game.value(mask)
            totals[j] += cur - prev
            prev = cur
        count += 1
    phi = np.array(totals) / count
    return ShapleyAllocation(phi, game.value(full_mask(n)), "permutation",
                             lp_solves=_solves_since(game, before))


def sampled_permutations(n: int, samperm: int, seed: int) -> np.ndarray:
    """``samperm x n`` matrix; row ``k`` is the order keyed by ``(seed, k)``."""
    return np.array([streams.permutation(streams.derive_key(seed, k), n)
                     for k in range(samperm)], dtype=np.int64).reshape(samperm, n)


def monte_carlo_shapley(game, samperm: int = DEFAULT_SAMPERM, seed: int = 0,
                        threads: int = 1) -> ShapleyAllocation:
    """Monte Carlo estimate from ``samperm`` sampled orders.

    The coalitions touched by the sampled orders are evaluated first (each
    missing one exactly once, possibly in parallel); the marginal matrix is
    then reduced in permutation-index order. Each row telescopes to
    ``v(N) - v(empty)``, so the estimate is exactly efficient up to rounding.
    """
    if samperm < 1:
        raise InputError(f"samPerm must be at least 1, got {samperm}")
    n = game.n
    before = getattr(game, "lp_solves", 0)
    orders = sampled_permutations(n, samperm, seed)
    bits = np.left_shift(np.int64(1), orders)
    prefix = np.cumsum(bits, axis=1)
    needed = np.unique(np.concatenate([[0], prefix.ravel()]))
    table = dict(zip(needed.tolist(), game.values(needed.tolist(), threads).tolist()))
    values = np.vectorize(table.__getitem__, otypes=[float])(prefix)
    prev = np.hstack([np.full((samperm, 1), table[0]), values[:, :-1]])
    marginals = np.zeros((samperm, n))
    np.put_along_axis(marginals, orders, values - prev, axis=1)
    phi = marginals.sum(axis=0) / samperm
    return ShapleyAllocation(phi, float(table[full_mask(n)]), "monte_carlo",
                             samperm=samperm, seed=seed,
                             lp_solves=_solves_since(game, before))


def resolve_method(method: str, n: int) -> str:
    if method == "auto":
        return "exact" if n < AUTO_EXACT_BELOW else "mc"
    if method not in ("exact", "permutation", "mc"):
        raise InputError(f"unknown Shapley method {method!r}; use auto, exact, permutation or mc")
    return method


def shapley(game, method: str = "auto", samperm: int = DEFAULT_SAMPERM, seed: int = 0,
            threads: int = 1) -> ShapleyAllocation:
    """Dispatch on ``method``: ``auto`` is exact below 10 features, else Monte Carlo."""
    method = resolve_method(method, game.n)
    if method == "exact":
        return exact_shapley(game, threads)
    if method == "permutation":
        return permutation_shapley(game)
    return monte_carlo_shapley(game, samperm, seed, threads)


def svea(phi: ShapleyAllocation, empty_error: float, total_error: float) -> SveaAllocation:
    """``e_j = empty_error / n - phi_j``; sums to ``total_error`` when ``phi`` is efficient."""
    values = np.asarray(phi.phi, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InputError("Shapley vector must be a non-empty 1-d array")
    if total_error < -1e-12 or empty_error < total_error - 1e-9:
        raise InputError(f"need empty_error >= total_error >= 0, got "
                         f"{empty_error!r} and {total_error!r}")
    e = empty_error / values.size - values
    return SveaAllocation(e, float(empty_error), float(total_error), phi)


def game_svea(cache, method: str = "auto", samperm: int = DEFAULT_SAMPERM, seed: int = 0,
              threads: int = 1) -> SveaAllocation:
    """Shapley values of a :class:`~svea.game.GameCache` followed by :func:`svea`."""
    alloc = shapley(cache, method, samperm, seed, threads)
    total = cache.training_error(full_mask(cache.n))
    return svea(alloc, cache.empty_error, total)
