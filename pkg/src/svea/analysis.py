"""Feature selection from SVEA and diagnostics of the classification game."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InputError, NumericalError
from .game import (EXHAUSTIVE_LIMIT, PRACTICAL_LIMIT, GameCache, GameError, full_mask,
                   format_coalition, mask_of, require_exhaustive, train_classifier)
from .lp import LinearProgram, solve
from .shapley import SveaAllocation

TIE_TOLERANCE = 1e-8
CORE_TOLERANCE = 1e-6
STRUCTURE_TOLERANCE = 1e-9


# -- selection ------------------------------------------------------------

@dataclass(frozen=True)
class SelectionResult:
    """``svea_neg`` holds 0-based indices with ``e_j < -tie_tolerance``.

    ``ranking`` lists all indices by increasing ``e_j``, ties broken by index.
    """

    svea_neg: tuple[int, ...]
    boundary: tuple[int, ...]
    ranking: tuple[int, ...]
    separable: bool
    threshold: float = 0.0
    tie_tolerance: float = TIE_TOLERANCE

    @property
    def empty(self) -> bool:
        return not self.svea_neg


def select_features(alloc: SveaAllocation, tie_tolerance: float = TIE_TOLERANCE) -> SelectionResult:
    e = np.asarray(alloc.e, dtype=float)
    neg = tuple(int(j) for j in np.flatnonzero(e < -tie_tolerance))
    boundary = tuple(int(j) for j in np.flatnonzero(np.abs(e) <= tie_tolerance))
    ranking = tuple(int(j) for j in np.lexsort((np.arange(e.size), e)))
    return SelectionResult(neg, boundary, ranking, bool(alloc.total_error <= tie_tolerance),
                           0.0, tie_tolerance)


def power_of_classification(train: Dataset, test: Dataset, members) -> float:
    """Correct test predictions of the ``members`` classifier over those of the full one."""
    mask = mask_of(members)
    if mask == 0:
        raise InputError("power of classification needs a non-empty feature set")
    if test.n != train.n:
        raise InputError("train and test sets have different numbers of features")
    full = train_classifier(train, full_mask(train.n)).correct(test)
    if full == 0:
        raise NumericalError("the full-feature classifier classifies no test point correctly")
    return train_classifier(train, mask).correct(test) / full


@dataclass(frozen=True)
class TopLPoint:
    l: int
    features: tuple[int, ...]
    accuracy: float


def accuracy_vs_top_l(train: Dataset, test: Dataset, selection: SelectionResult) -> list[TopLPoint]:
    """Test accuracy of hinge classifiers on the ``l`` best-ranked features, ``l = 1..n``."""
    out = []
    for l in range(1, len(selection.ranking) + 1):
        feats = tuple(sorted(selection.ranking[:l]))
        clf = train_classifier(train, mask_of(feats))
        out.append(TopLPoint(l, feats, clf.accuracy(test)))
    return out


# -- rationality and core -------------------------------------------------

@dataclass(frozen=True)
class RationalityReport:
    individually_rational: tuple[bool, ...]
    coalitionally_rational: bool
    scope: str  # "full" or "partial"
    coalitions_checked: int
    worst_coalition: int | None
    worst_excess: float
    in_imputation_set: bool

    @property
    def all_individually_rational(self) -> bool:
        return all(self.individually_rational)


def rationality_checks(alloc: SveaAllocation, game, tol: float = CORE_TOLERANCE,
                       exhaustive: bool | None = None) -> RationalityReport:
    """Check ``e_j <= tr_er({j})`` and ``sum_{j in S} e_j <= tr_er(S)``.

    The coalition check covers all ``2^n - 1`` coalitions when the game is
    small enough (or ``exhaustive`` is true), otherwise only the coalitions
    already present in the cache. Imputation membership of ``phi`` is
    ``phi_j >= v({j})`` for all ``j`` together with ``sum(phi) = v(N)``.
    """
    n = alloc.n
    if game.n != n:
        raise InputError("allocation and game have different numbers of players")
    e = alloc.e
    singles = game.values([1 << j for j in range(n)])
    tr_single = alloc.empty_error - singles
    ir = tuple(bool(e[j] <= tr_single[j] + tol) for j in range(n))

    if exhaustive is None:
        exhaustive = n <= EXHAUSTIVE_LIMIT and (not isinstance(game, GameCache) or n <= PRACTICAL_LIMIT)
    if exhaustive:
        require_exhaustive(n)
        masks = np.arange(1, 1 << n)
        scope = "full"
    else:
        masks = np.array(sorted(s for s in game.cached_training_errors() if s), dtype=np.int64)
        scope = "partial"
    v = game.values(masks.tolist())
    tr = alloc.empty_error - v
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    excess = bits @ e - tr
    worst = int(np.argmax(excess)) if masks.size else -1
    worst_excess = float(excess[worst]) if masks.size else 0.0
    phi = alloc.phi
    grand = game.value(full_mask(n))
    imputation = bool(np.all(phi >= singles - tol) and abs(phi.sum() - grand) <= tol)
    return RationalityReport(ir, bool(worst_excess <= tol), scope, int(masks.size),
                             int(masks[worst]) if masks.size else None, worst_excess,
                             imputation)


NONEMPTY = "NonEmpty"
EMPTY = "Empty"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class CoreCheck:
    status: str
    optimum: float | None
    grand_value: float | None
    allocation: np.ndarray | None


def bondareva_core_check(game, tol: float = CORE_TOLERANCE,
                         limit: int = EXHAUSTIVE_LIMIT) -> CoreCheck:
    """Decide core non-emptiness from ``min sum(x) s.t. x(S) >= v(S) for all S``.

    The LP is solved in its dual (balanced-collection) form,

        maximise  sum_S lambda_S v(S)   s.t.  sum_{S ni j} lambda_S = 1,  lambda >= 0,

    which has only ``n`` rows. Both optima coincide; the row multipliers give
    a minimising ``x``. Returns ``Unknown`` when ``n`` exceeds ``limit``.
    """
    n = game.n
    if n > limit:
        return CoreCheck(UNKNOWN, None, None, None)
    v = game.all_values()
    masks = np.arange(1, 1 << n)
    incidence = ((masks[None, :] >> np.arange(n)[:, None]) & 1).astype(float)
    lp = LinearProgram(-v[1:], incidence, ("=",) * n, np.ones(n), 0.0, None)
    out = solve(lp)
    if not out.optimal:
        raise NumericalError(f"balanced-collection LP ended {out.status.value}")
    optimum = -out.objective_value
    x = -out.duals
    grand = float(v[-1])
    if optimum < grand - tol:
        raise NumericalError(f"core LP optimum {optimum!r} is below v(N) = {grand!r}")
    status = NONEMPTY if optimum <= grand + tol else EMPTY
    return CoreCheck(status, float(optimum), grand, x)


# -- convexity and superadditivity ---------------------------------------

@dataclass(frozen=True)
class Witness:
    s: int
    t: int
    lhs: float  # v(S u T) [+ v(S n T)]
    rhs: float  # v(S) + v(T)

    def describe(self) -> str:
        return (f"S={format_coalition(self.s)}, T={format_coalition(self.t)}: "
                f"{self.lhs:.6g} < {self.rhs:.6g}")


@dataclass(frozen=True)
class StructureReport:
    convex: bool | None
    superadditive: bool | None
    convexity_witness: Witness | None = None
    superadditivity_witness: Witness | None = None


def structure_checks(game, allow_large: bool = False,
                     tol: float = STRUCTURE_TOLERANCE) -> StructureReport:
    """Exhaustive convexity and superadditivity checks over pairs ``S < T``.

    Convexity: ``v(S u T) + v(S n T) >= v(S) + v(T)`` for all pairs.
    Superadditivity: ``v(S u T) >= v(S) + v(T)`` for disjoint pairs.
    The reported witness is the first failing pair in ``(S, T)`` mask order.
    Above ``n = 12`` the check is refused unless ``allow_large`` is set.
    """
    n = game.n
    if n > EXHAUSTIVE_LIMIT or (n > PRACTICAL_LIMIT and not allow_large):
        return StructureReport(None, None)
    v = game.all_values()
    masks = np.arange(1 << n)
    conv = sup = None
    for s in range(1 << n):
        t = masks[s + 1:]
        if t.size == 0:
            break
        union, inter = s | t, s & t
        rhs = v[s] + v[t]
        if conv is None:
            lhs = v[union] + v[inter]
            bad = np.flatnonzero(lhs < rhs - tol)
            if bad.size:
                k = bad[0]
                conv = Witness(s, int(t[k]), float(lhs[k]), float(rhs[k]))
        if sup is None:
            lhs = v[union]
            bad = np.flatnonzero((inter == 0) & (lhs < rhs - tol))
            if bad.size:
                k = bad[0]
                sup = Witness(s, int(t[k]), float(lhs[k]), float(rhs[k]))
        if conv is not None and sup is not None:
            break
    return StructureReport(conv is None, sup is None, conv, sup)


# -- subspace bound -------------------------------------------------------

@dataclass(frozen=True)
class SubspaceBound:
    """Per-class lower bounds on ``P(|X_k| <= eps_k for all k in A | Y = y)``.

    ``probability_lower_bound`` mixes the class bounds with the empirical
    class frequencies; ``raw`` keeps the unclamped products.
    """

    a_set: tuple[int, ...]
    epsilons: tuple[float, ...]
    per_class: dict
    raw: dict
    probability_lower_bound: float
    empirical_fraction: float
    empirical_per_class: dict = field(default_factory=dict)


def chebyshev_subspace_bound(d: Dataset, a_set, epsilons) -> SubspaceBound:
    """Product of Chebyshev bounds ``prod_k (1 - var(X_k | Y=y) / eps_k^2)``.

    Variances are empirical (``n - 1`` divisor) within each class.
    """
    cols = tuple(int(j) for j in a_set)
    if not cols:
        raise InputError("the candidate feature set must be non-empty")
    if any(j < 0 or j >= d.n for j in cols):
        raise GameError(f"feature index out of range 0..{d.n - 1}")
    eps = np.broadcast_to(np.asarray(epsilons, dtype=float), (len(cols),)).copy()
    if np.any(~(eps > 0)):
        raise InputError("every epsilon must be positive")
    per_class, raw, emp_class = {}, {}, {}
    mixed = 0.0
    inside = np.all(np.abs(d.features[:, list(cols)]) <= eps, axis=1)
    for label in (1, -1):
        rows = d.labels == label
        count = int(np.count_nonzero(rows))
        if count == 0:
            continue
        sub = d.features[rows][:, list(cols)]
        var = sub.var(axis=0, ddof=1) if count > 1 else np.zeros(len(cols))
        product = float(np.prod(1.0 - var / eps ** 2))
        raw[label] = product
        per_class[label] = min(max(product, 0.0), 1.0)
        emp_class[label] = float(np.mean(inside[rows]))
        mixed += per_class[label] * count / d.m
    return SubspaceBound(cols, tuple(float(e) for e in eps), per_class, raw,
                         float(mixed), float(np.mean(inside)), emp_class)
