"""Interval estimates of SVEA that are robust to the particular training sample.

The training set is cut into disjoint subsets of ``m_s`` rows, the full
game + SVEA pipeline runs on each subset, subsets are averaged in groups of
30, and a Student-t interval is placed around the mean of the ``G`` group
means.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset, default_subset_size, disjoint_partition
from .errors import InputError
from .game import GameCache
from .shapley import DEFAULT_SAMPERM, game_svea

GROUP_SIZE = 30


# -- Student t ------------------------------------------------------------
#
# With x = sqrt(df) * tan(theta) the t density becomes
#     k(df) * cos(theta)^(df - 1) d theta,   k = Gamma((df+1)/2) / (sqrt(pi) Gamma(df/2)),
# which is smooth and bounded on [0, pi/2). Both tails therefore map to a
# finite interval and the CDF is a plain quadrature over theta.

def _simpson(f, a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a, b, tol, depth=50):
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, b, fa, fm, fb)
    stack = [(a, b, fa, fm, fb, whole, tol, depth)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = _simpson(f, a, m, fa, flm, fm)
        right = _simpson(f, m, b, fm, frm, fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            total += left + right + (left + right - whole) / 15.0
        else:
            stack.append((m, b, fm, frm, fb, right, tol / 2.0, depth - 1))
            stack.append((a, m, fa, flm, fm, left, tol / 2.0, depth - 1))
    return total


def _check_df(df: float) -> float:
    df = float(df)
    if not df > 0 or not math.isfinite(df):
        raise InputError(f"degrees of freedom must be positive, got {df}")
    return df


def t_cdf(x: float, df: float) -> float:
    """``P(T <= x)`` for ``T`` Student-t with ``df`` degrees of freedom."""
    df = _check_df(df)
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    theta = math.atan(abs(x) / math.sqrt(df))
    const = math.exp(math.lgamma((df + 1.0) / 2.0) - math.lgamma(df / 2.0)) / math.sqrt(math.pi)
    power = df - 1.0
    # Split at the density's width so that large df stays well resolved.
    mid = min(theta, 4.0 / math.sqrt(df))
    area = _adaptive_simpson(lambda t: math.cos(t) ** power, 0.0, mid, 1e-13)
    if theta > mid:
        area += _adaptive_simpson(lambda t: math.cos(t) ** power, mid, theta, 1e-13)
    half = min(const * area, 0.5)
    return 0.5 + half if x > 0 else 0.5 - half


def t_quantile(p: float, df: float) -> float:
    """Inverse of :func:`t_cdf` by bisection on ``theta``."""
    df = _check_df(df)
    if not 0.0 < p < 1.0:
        raise InputError(f"probability must lie strictly between 0 and 1, got {p}")
    if p == 0.5:
        return 0.0
    target = abs(p - 0.5) + 0.5
    lo, hi = 0.0, math.pi / 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(math.sqrt(df) * math.tan(mid), df) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    x = math.sqrt(df) * math.tan(0.5 * (lo + hi))
    return x if p > 0.5 else -x


# -- subset pipeline ------------------------------------------------------

@dataclass(frozen=True)
class GroupedSvea:
    """SVEA on each used subset (rows) and the group means over 30 subsets."""

    subset_svea: np.ndarray
    group_means: np.ndarray
    m_s: int
    ss: int
    feature_names: tuple[str, ...]

    @property
    def groups(self) -> int:
        return self.group_means.shape[0]

    @property
    def unused_subsets(self) -> int:
        return self.ss - GROUP_SIZE * self.groups


def minimum_rows(m_s: int) -> int:
    return GROUP_SIZE * m_s


def subset_svea(d: Dataset, m_s: int | None = None, seed: int = 0, method: str = "auto",
                samperm: int = DEFAULT_SAMPERM, threads: int = 1) -> GroupedSvea:
    """Run SVEA on ``30 * G`` disjoint subsets of ``m_s`` rows each.

    ``ss = floor(m / m_s)`` subsets are cut; the first ``30 * G`` of them,
    ``G = floor(ss / 30)``, are used and the rest are left out.
    """
    if m_s is None:
        m_s = default_subset_size(d.n)
    if d.m < minimum_rows(m_s):
        raise InputError(f"{d.m} rows are too few: one group of {GROUP_SIZE} subsets of "
                         f"{m_s} rows needs at least {minimum_rows(m_s)} rows")
    parts = disjoint_partition(d, m_s, seed)
    groups = parts.count // GROUP_SIZE
    used = parts.subsets[:GROUP_SIZE * groups]

    def run(k):
        # Monte Carlo seeds are tied to the subset index for reproducibility.
        return game_svea(GameCache(used[k]), method, samperm, seed + k).e

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, range(len(used))))
    else:
        rows = [run(k) for k in range(len(used))]
    matrix = np.vstack(rows)
    means = matrix.reshape(groups, GROUP_SIZE, d.n).mean(axis=1)
    return GroupedSvea(matrix, means, m_s, parts.count, d.feature_names)


BELOW = "BelowZero"
SPANNING = "Spanning"
ABOVE = "AboveZero"


@dataclass(frozen=True)
class FeatureInterval:
    name: str
    mean: float
    std: float
    half_width: float

    @property
    def lower(self) -> float:
        return self.mean - self.half_width

    @property
    def upper(self) -> float:
        return self.mean + self.half_width

    @property
    def classification(self) -> str:
        if self.upper < 0.0:
            return BELOW
        if self.lower > 0.0:
            return ABOVE
        return SPANNING


@dataclass(frozen=True)
class IntervalEstimate:
    alpha: float
    groups: int
    m_s: int
    t_star: float
    features: tuple[FeatureInterval, ...]

    @property
    def df(self) -> int:
        return self.groups - 1

    def indices(self, label: str) -> list[int]:
        """0-based indices of features with the given classification."""
        return [j for j, f in enumerate(self.features) if f.classification == label]


def interval_from_means(group_means: np.ndarray, alpha: float = 0.05, m_s: int = 0,
                        names=None) -> IntervalEstimate:
    """t interval ``mean +- t*_{alpha/2, G-1} s / sqrt(G)`` per column."""
    means = np.atleast_2d(np.asarray(group_means, dtype=float))
    groups, n = means.shape
    if groups < 2:
        raise InputError(f"need at least 2 groups for an interval, got {groups}; "
                         "supply more rows or a smaller subset size")
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    names = names or tuple(f"x{j + 1}" for j in range(n))
    t_star = t_quantile(1.0 - alpha / 2.0, groups - 1)
    grand = means.mean(axis=0)
    std = means.std(axis=0, ddof=1)
    half = t_star * std / math.sqrt(groups)
    feats = tuple(FeatureInterval(names[j], float(grand[j]), float(std[j]), float(half[j]))
                  for j in range(n))
    return IntervalEstimate(alpha, groups, m_s, t_star, feats)


def group_and_interval(g: GroupedSvea, alpha: float = 0.05) -> IntervalEstimate:
    return interval_from_means(g.group_means, alpha, g.m_s, g.feature_names)
