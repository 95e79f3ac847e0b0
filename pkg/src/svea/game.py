"""The classification game built from hinge-loss training errors.

Players are feature indices ``0..n-1``; a coalition is an ``int`` bitmask
with bit ``j`` set when feature ``j`` is a member. For a coalition ``S`` the
training error ``tr_er(S)`` is the smallest mean hinge loss of an
unregularised linear classifier that may only use the features in ``S``
plus an intercept, and the game value is ``v(S) = tr_er(empty) - tr_er(S)``.

The hinge LP is solved through its dual,

    maximise  sum(alpha)
    s.t.      sum_i alpha_i y_i x_ij = 0   for j in S
              sum_i alpha_i y_i      = 0
              0 <= alpha_i <= 1,

whose optimum is ``m * tr_er(S)``. The row multipliers give the primal
classifier, and its primal hinge loss is checked against the dual value on
every solve.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset
from .errors import InputError, NumericalError, SizeLimitError
from .lp import LinearProgram, LPError, solve_boxed

EXHAUSTIVE_LIMIT = 20
PRACTICAL_LIMIT = 12
NEGATIVE_VALUE_TOL = 1e-6
_CERTIFICATE_TOL = 1e-7


class GameError(InputError):
    """Invalid coalition or a cache used with the wrong dataset."""


# -- coalitions ------------------------------------------------------------

def mask_of(members: Iterable[int]) -> int:
    mask = 0
    for j in members:
        if j < 0:
            raise GameError(f"negative feature index {j}")
        mask |= 1 << int(j)
    return mask


def members_of(mask: int) -> tuple[int, ...]:
    out, j = [], 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


def full_mask(n: int) -> int:
    return (1 << n) - 1


def format_coalition(mask: int) -> str:
    """1-based set notation, e.g. ``{2,3}``."""
    return "{" + ",".join(str(j + 1) for j in members_of(mask)) + "}"


def _check_mask(mask: int, n: int) -> int:
    mask = int(mask)
    if mask < 0 or mask >> n:
        raise GameError(f"coalition mask {mask:#x} names features outside 1..{n}")
    return mask


# -- hinge LPs -------------------------------------------------------------

def hinge_dual_lp(x: np.ndarray, y: np.ndarray) -> LinearProgram:
    """Dual of the hinge-loss LP on the columns of ``x`` (may have zero columns)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = y.size
    rows = np.vstack([(x * y[:, None]).T, y[None, :]])
    return LinearProgram(-np.ones(m), rows, ("=",) * rows.shape[0], np.zeros(rows.shape[0]),
                         np.zeros(m), np.ones(m))


def hinge_primal_lp(x: np.ndarray, y: np.ndarray) -> LinearProgram:
    """The hinge-loss LP itself over ``(w, b, xi)``, for dumps and cross-checks.

    minimise ``mean(xi)`` s.t. ``y_i (w . x_i + b) + xi_i >= 1``, ``xi >= 0``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m, r = x.shape
    matrix = np.hstack([x * y[:, None], y[:, None], np.eye(m)])
    objective = np.concatenate([np.zeros(r + 1), np.full(m, 1.0 / m)])
    lower = np.concatenate([np.full(r + 1, -np.inf), np.zeros(m)])
    return LinearProgram(objective, matrix, (">=",) * m, np.ones(m), lower, None)


@dataclass(frozen=True)
class TrainedLinearClassifier:
    """``f(x) = weights . x[members] + intercept`` and its mean hinge loss."""

    coalition: int
    members: tuple[int, ...]
    weights: np.ndarray
    intercept: float
    training_error: float

    def decision(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        return features[:, list(self.members)] @ self.weights + self.intercept

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Labels in ``{-1, +1}``; a zero score counts as ``+1``."""
        return np.where(self.decision(features) >= 0.0, 1.0, -1.0)

    def correct(self, d: Dataset) -> int:
        """Number of rows with ``y * f(x) >= 0``."""
        return int(np.count_nonzero(d.labels * self.decision(d.features) >= 0.0))

    def accuracy(self, d: Dataset) -> float:
        return self.correct(d) / d.m


def train_classifier(d: Dataset, mask: int) -> TrainedLinearClassifier:
    """Solve the hinge LP for coalition ``mask`` on dataset ``d``."""
    mask = _check_mask(mask, d.n)
    members = members_of(mask)
    x = d.features[:, list(members)]
    try:
        outcome = solve_boxed(hinge_dual_lp(x, d.labels))
    except LPError as exc:
        raise type(exc)(f"coalition {format_coalition(mask)}: {exc}") from exc
    if not outcome.optimal:
        # alpha = 0 is always feasible and the box is bounded.
        raise NumericalError(f"coalition {format_coalition(mask)}: hinge LP reported "
                             f"{outcome.status.value}")
    r = len(members)
    weights = -outcome.duals[:r]
    intercept = float(-outcome.duals[r])
    dual_value = -outcome.objective_value / d.m
    margins = d.labels * (x @ weights + intercept)
    primal_value = float(np.maximum(0.0, 1.0 - margins).mean())
    if abs(primal_value - dual_value) > _CERTIFICATE_TOL * max(1.0, primal_value):
        raise NumericalError(
            f"coalition {format_coalition(mask)}: primal hinge loss {primal_value!r} "
            f"and dual value {dual_value!r} disagree")
    return TrainedLinearClassifier(mask, members, weights, intercept, max(dual_value, 0.0))


def empty_training_error(d: Dataset) -> float:
    """Hinge error of the best intercept-only classifier (solved as an LP)."""
    return train_classifier(d, 0).training_error


def coalition_training_error(d: Dataset, members: Iterable[int]) -> TrainedLinearClassifier:
    """Classifier for the coalition given as 0-based feature indices."""
    return train_classifier(d, mask_of(members))


# -- games -----------------------------------------------------------------

class _Game:
    """Shared interface: ``n``, ``value(mask)``, ``values(masks)``."""

    n: int

    @property
    def grand_mask(self) -> int:
        return full_mask(self.n)

    def value(self, mask: int) -> float:
        raise NotImplementedError

    def values(self, masks: Sequence[int], threads: int = 1) -> np.ndarray:
        return np.array([self.value(s) for s in masks], dtype=float)

    def all_values(self, threads: int = 1) -> np.ndarray:
        """``v`` for every mask ``0 .. 2**n - 1`` (indexed by mask)."""
        require_exhaustive(self.n)
        return self.values(range(1 << self.n), threads)

    @property
    def grand_value(self) -> float:
        return self.value(self.grand_mask)


def require_exhaustive(n: int, limit: int = EXHAUSTIVE_LIMIT) -> None:
    if n > limit:
        raise SizeLimitError(
            f"exhaustive evaluation of 2^{n} coalitions exceeds the limit of "
            f"n <= {limit}; use the Monte Carlo Shapley estimator instead")


class GameCache(_Game):
    """Lazily computed classification game on one dataset.

    Holds ``tr_er`` per evaluated coalition. Lookups are lock-free reads;
    inserts take a lock and the first insert wins. :meth:`values` evaluates
    each missing coalition exactly once, so LP-solve counts do not depend on
    the number of worker threads.
    """

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.n = dataset.n
        self.fingerprint = dataset.fingerprint
        self._errors: dict[int, float] = {}
        self._classifiers: dict[int, TrainedLinearClassifier] = {}
        self._lock = threading.Lock()
        self.lp_solves = 0
        self.clamped = 0
        empty = train_classifier(dataset, 0)
        self._insert(0, empty.training_error, solved=True)
        self.empty_error = empty.training_error

    def check_dataset(self, d: Dataset) -> None:
        if d.fingerprint != self.fingerprint:
            raise GameError("game cache was built for a different dataset")

    def _insert(self, mask: int, tr_er: float, solved: bool) -> float:
        with self._lock:
            if solved:
                self.lp_solves += 1
            return self._errors.setdefault(mask, tr_er)

    def _solve(self, mask: int) -> float:
        clf = train_classifier(self.dataset, mask)
        if mask == self.grand_mask:
            with self._lock:
                self._classifiers.setdefault(mask, clf)
        return clf.training_error

    def training_error(self, mask: int) -> float:
        mask = _check_mask(mask, self.n)
        cached = self._errors.get(mask)
        if cached is not None:
            return cached
        return self._insert(mask, self._solve(mask), solved=True)

    def value(self, mask: int) -> float:
        v = self.empty_error - self.training_error(mask)
        if v < 0.0:
            if v < -NEGATIVE_VALUE_TOL:
                raise NumericalError(
                    f"v{format_coalition(mask)} = {v!r} is negative beyond tolerance")
            with self._lock:
                self.clamped += 1
            v = 0.0
        return v

    def values(self, masks: Sequence[int], threads: int = 1) -> np.ndarray:
        masks = [_check_mask(s, self.n) for s in masks]
        missing = sorted({s for s in masks if s not in self._errors})
        if missing:
            if threads > 1 and len(missing) > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    errors = list(pool.map(self._solve, missing))
            else:
                errors = [self._solve(s) for s in missing]
            for s, e in zip(missing, errors):
                self._insert(s, e, solved=True)
        return np.array([self.value(s) for s in masks], dtype=float)

    def classifier(self, mask: int) -> TrainedLinearClassifier:
        """Trained classifier for ``mask``; kept for the grand coalition and on request."""
        mask = _check_mask(mask, self.n)
        with self._lock:
            clf = self._classifiers.get(mask)
        if clf is None:
            clf = train_classifier(self.dataset, mask)
            with self._lock:
                clf = self._classifiers.setdefault(mask, clf)
            self._insert(mask, clf.training_error, solved=True)
        return clf

    def __contains__(self, mask: int) -> bool:
        return mask in self._errors

    def __len__(self) -> int:
        return len(self._errors)

    def entries(self) -> list[tuple[int, float, float]]:
        """``(mask, tr_er, v)`` for every cached coalition, sorted by mask."""
        return [(s, self._errors[s], self.value(s)) for s in sorted(self._errors)]

    def cached_training_errors(self) -> dict[int, float]:
        return dict(self._errors)


def characteristic_value(cache: GameCache, d: Dataset, members: Iterable[int]) -> float:
    """``v(S)`` for 0-based members, after checking ``cache`` belongs to ``d``."""
    cache.check_dataset(d)
    return cache.value(mask_of(members))


def enumerate_all(d_or_cache, threads: int = 1, limit: int = EXHAUSTIVE_LIMIT) -> GameCache:
    """Fill a cache with all ``2**n`` coalitions."""
    cache = d_or_cache if isinstance(d_or_cache, GameCache) else GameCache(d_or_cache)
    require_exhaustive(cache.n, limit)
    cache.values(range(1 << cache.n), threads)
    return cache


class TabularGame(_Game):
    """A game given by an explicit table ``values[mask]``.

    Used for stored fixtures and for randomly generated games. ``empty_error``
    is optional; when present, ``training_error(S) = empty_error - v(S)``.
    """

    def __init__(self, values: Sequence[float], empty_error: float | None = None):
        table = np.asarray(values, dtype=float).reshape(-1)
        size = table.size
        n = size.bit_length() - 1
        if size < 2 or size != 1 << n:
            raise GameError(f"a game table needs 2^n entries with n >= 1, got {size}")
        if not np.all(np.isfinite(table)):
            raise GameError("game table contains non-finite values")
        if table[0] != 0.0:
            raise GameError(f"v(empty) must be 0, got {table[0]!r}")
        table.setflags(write=False)
        self.table = table
        self.n = n
        self.empty_error = empty_error
        self.lp_solves = 0

    def value(self, mask: int) -> float:
        return float(self.table[_check_mask(mask, self.n)])

    def values(self, masks: Sequence[int], threads: int = 1) -> np.ndarray:
        return self.table[np.asarray(list(masks), dtype=np.int64)].astype(float)

    def all_values(self, threads: int = 1) -> np.ndarray:
        return self.table.copy()

    def training_error(self, mask: int) -> float:
        if self.empty_error is None:
            raise GameError("this game table carries no empty-coalition error")
        return self.empty_error - self.value(mask)

    @classmethod
    def from_function(cls, n: int, fn, empty_error: float | None = None) -> "TabularGame":
        return cls([fn(s) for s in range(1 << n)], empty_error)

    def is_monotone(self, tol: float = 1e-12) -> bool:
        for j in range(self.n):
            bit = 1 << j
            without = np.array([s for s in range(1 << self.n) if not s & bit])
            if np.any(self.table[without | bit] < self.table[without] - tol):
                return False
        return True


def random_monotone_game(n: int, rng: np.random.Generator, scale: float = 1.0) -> TabularGame:
    """Random monotone game: ``v(S)`` is a maximum over random increments of subsets."""
    size = 1 << n
    table = np.zeros(size)
    inc = rng.random(size) * scale
    inc[0] = 0.0
    for s in range(1, size):
        best = 0.0
        for j in members_of(s):
            best = max(best, table[s & ~(1 << j)])
        table[s] = best + inc[s]
    return TabularGame(table)


# -- CSV dump --------------------------------------------------------------

GAME_CSV_HEADER = ("coalition_mask", "tr_er", "v")


def game_rows(game) -> list[tuple[int, float | None, float]]:
    if isinstance(game, GameCache):
        return game.entries()
    has_err = getattr(game, "empty_error", None) is not None
    return [(s, game.training_error(s) if has_err else None, game.value(s))
            for s in range(1 << game.n)]


def write_game_csv(game, handle) -> None:
    handle.write(",".join(GAME_CSV_HEADER) + "\n")
    for mask, tr_er, v in game_rows(game):
        handle.write(f"{mask},{'' if tr_er is None else repr(float(tr_er))},{v!r}\n")


def read_game_csv(handle) -> TabularGame:
    """Inverse of :func:`write_game_csv` for a complete table.

    The ``tr_er`` column may be blank; if present it fixes ``empty_error``.
    """
    lines = [ln.strip() for ln in handle if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or tuple(c.strip() for c in lines[0].split(",")) != GAME_CSV_HEADER:
        raise GameError(f"game CSV must start with the header {','.join(GAME_CSV_HEADER)}")
    entries: dict[int, float] = {}
    empty_error = None
    for line_no, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise GameError(f"game CSV line {line_no}: expected 3 cells")
        try:
            mask, v = int(cells[0]), float(cells[2])
            if mask == 0 and cells[1]:
                empty_error = float(cells[1])
        except ValueError:
            raise GameError(f"game CSV line {line_no}: unparsable cell") from None
        if mask in entries:
            raise GameError(f"game CSV line {line_no}: duplicate mask {mask}")
        entries[mask] = v
    size = max(entries) + 1
    size = 1 << max(1, (size - 1).bit_length())
    missing = [s for s in range(size) if s not in entries]
    if missing:
        raise GameError(f"game CSV is missing {len(missing)} coalitions, e.g. mask {missing[0]}")
    return TabularGame([entries[s] for s in range(size)], empty_error)
