"""Dense simplex solvers with bounded variables.

:func:`solve` is a general two-phase primal simplex. :func:`solve_boxed` is a
dual simplex for the special case of equality rows with finite variable
boxes; the hinge-loss LPs have exactly that shape and it is far faster there.

Every constraint row is turned into an equality with a bounded slack, and
variables keep their own ``[lower, upper]`` box, so free variables never get
split into positive and negative parts. The basis inverse is held as an
explicit dense ``k x k`` matrix (``k`` = number of rows) and updated with a
rank-one eta step per pivot, refactorised periodically.

In :func:`solve`, pricing uses Dantzig's rule and falls back to Bland's rule after
``5 * (rows + cols)`` iterations. A nonbasic variable that reaches its
opposite bound before any basic variable blocks does a *bound flip*: the
basis does not change, so the simplex multipliers and reduced costs stay
valid, and the next candidate in Dantzig order is tried without repricing.
This matters a lot for LPs with many box-constrained columns and only a few
rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

FEAS_TOL = 1e-7
OPT_TOL = 1e-9

_PIVOT_TOL = 1e-9
_REFACTOR_EVERY = 64

_SENSE_ALIASES = {
    ">=": ">=", "≥": ">=", "ge": ">=",
    "<=": "<=", "≤": "<=", "le": "<=",
    "=": "=", "==": "=", "eq": "=",
}


class LPError(Exception):
    """Base class for solver failures."""


class LPStructureError(LPError, ValueError):
    """The LP is malformed (shape mismatch, NaN, crossed bounds)."""


class IterationLimitError(LPError):
    """The simplex ran out of iterations before reaching a verdict."""


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``minimize objective @ x`` subject to row constraints and variable bounds.

    ``matrix[i] @ x  senses[i]  rhs[i]`` for every row ``i``; ``senses`` holds
    ``">="``, ``"<="`` or ``"="``. Bounds may be infinite.
    """

    objective: np.ndarray
    matrix: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        if n == 0:
            raise LPStructureError("an LP needs at least one variable")
        a = np.asarray(self.matrix, dtype=float)
        if a.size == 0:
            a = a.reshape(0, n)
        if a.ndim != 2 or a.shape[1] != n:
            raise LPStructureError(
                f"constraint matrix has shape {a.shape}, expected (*, {n})")
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if b.size != a.shape[0]:
            raise LPStructureError(
                f"{a.shape[0]} constraint rows but {b.size} right-hand sides")
        senses = tuple(self.senses)
        if len(senses) != a.shape[0]:
            raise LPStructureError(
                f"{a.shape[0]} constraint rows but {len(senses)} senses")
        try:
            senses = tuple(_SENSE_ALIASES[s] for s in senses)
        except KeyError as exc:
            raise LPStructureError(f"unknown constraint sense {exc.args[0]!r}") from None
        lo = _bound_vector(self.lower, n, 0.0, "lower")
        hi = _bound_vector(self.upper, n, np.inf, "upper")
        for name, arr in (("objective", c), ("matrix", a), ("rhs", b)):
            if not np.all(np.isfinite(arr)):
                raise LPStructureError(f"{name} contains non-finite entries")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise LPStructureError("bounds contain NaN")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise LPStructureError("lower bound +inf or upper bound -inf")
        if np.any(lo > hi):
            j = int(np.argmax(lo > hi))
            raise LPStructureError(
                f"variable {j} has lower bound {lo[j]} above upper bound {hi[j]}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_rows(
        cls,
        objective: Sequence[float],
        constraints: Iterable[tuple[Sequence[float], str, float]] = (),
        lower=None,
        upper=None,
    ) -> "LinearProgram":
        """Build from a list of ``(coefficients, sense, rhs)`` triples."""
        objective = np.asarray(objective, dtype=float)
        rows, senses, rhs = [], [], []
        for coeffs, sense, value in constraints:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != objective.shape:
                raise LPStructureError(
                    f"constraint row of length {coeffs.size}, expected {objective.size}")
            rows.append(coeffs)
            senses.append(sense)
            rhs.append(value)
        matrix = np.array(rows).reshape(len(rows), objective.size)
        return cls(objective, matrix, tuple(senses), np.array(rhs, dtype=float),
                   lower, upper)

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_constraints(self) -> int:
        return self.matrix.shape[0]

    def max_violation(self, x) -> float:
        """Largest violation of any row constraint or bound at ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.num_constraints:
            lhs = self.matrix @ x
            sense = np.array(self.senses)
            gap = np.zeros_like(lhs)
            ge, le, eq = sense == ">=", sense == "<=", sense == "="
            gap[ge] = np.maximum(self.rhs[ge] - lhs[ge], 0.0)
            gap[le] = np.maximum(lhs[le] - self.rhs[le], 0.0)
            gap[eq] = np.abs(lhs[eq] - self.rhs[eq])
            worst = float(gap.max(initial=0.0))
        worst = max(worst, float(np.maximum(self.lower - x, 0.0).max(initial=0.0)))
        worst = max(worst, float(np.maximum(x - self.upper, 0.0).max(initial=0.0)))
        return worst


def _bound_vector(value, n, default, name):
    if value is None:
        return np.full(n, default, dtype=float)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise LPStructureError(f"{name} bounds have length {arr.size}, expected {n}")
    return arr.copy()


@dataclass(frozen=True, eq=False)
class LPOutcome:
    """Result of :func:`solve`.

    ``objective_value``, ``primal`` and ``duals`` are only meaningful when
    ``status`` is OPTIMAL. ``duals`` are the simplex multipliers of the row
    constraints, so ``objective - matrix.T @ duals`` are the reduced costs.
    """

    status: Status
    objective_value: float
    primal: np.ndarray
    duals: np.ndarray
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def solve(
    lp: LinearProgram,
    *,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    max_iter: int | None = None,
) -> LPOutcome:
    """Solve ``lp`` with the two-phase bounded-variable simplex.

    Raises :class:`IterationLimitError` rather than returning a point that
    was not certified optimal, infeasible or unbounded.
    """
    if not isinstance(lp, LinearProgram):
        raise LPStructureError("solve() expects a LinearProgram")
    n, k = lp.num_vars, lp.num_constraints

    # Equality form: structural columns followed by one slack per inequality.
    slack_rows = [i for i, s in enumerate(lp.senses) if s != "="]
    a = np.zeros((k, n + len(slack_rows)))
    a[:, :n] = lp.matrix
    for col, i in enumerate(slack_rows, start=n):
        a[i, col] = -1.0 if lp.senses[i] == ">=" else 1.0
    lo = np.concatenate([lp.lower, np.zeros(len(slack_rows))])
    hi = np.concatenate([lp.upper, np.full(len(slack_rows), np.inf)])
    cost = np.concatenate([lp.objective, np.zeros(len(slack_rows))])

    cols = a.shape[1]
    if max_iter is None:
        max_iter = 50 * (k + cols)
    bland_after = 5 * (k + cols)

    if k == 0:
        return _solve_unconstrained(lp)

    engine = _Simplex(a, lp.rhs, lo, hi, feas_tol, opt_tol, max_iter, bland_after)
    status = engine.run(cost)
    if status is not Status.OPTIMAL:
        return LPOutcome(status, float("nan"), np.full(n, np.nan),
                         np.full(k, np.nan), engine.iterations)
    x = engine.x[:n].copy()
    duals = engine.multipliers(np.concatenate([cost, np.zeros(k)]))
    return LPOutcome(Status.OPTIMAL, float(lp.objective @ x), x, duals,
                     engine.iterations)


def _solve_unconstrained(lp: LinearProgram) -> LPOutcome:
    x = np.empty(lp.num_vars)
    for j, (c, lo, hi) in enumerate(zip(lp.objective, lp.lower, lp.upper)):
        if c > 0:
            x[j] = lo
        elif c < 0:
            x[j] = hi
        else:
            x[j] = lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)
        if not np.isfinite(x[j]):
            return LPOutcome(Status.UNBOUNDED, float("nan"), np.full(lp.num_vars, np.nan),
                             np.empty(0), 0)
    return LPOutcome(Status.OPTIMAL, float(lp.objective @ x), x, np.empty(0), 0)


class _Simplex:
    """Working state of one solve. Columns past ``n_real`` are artificials."""

    def __init__(self, a, b, lo, hi, feas_tol, opt_tol, max_iter, bland_after):
        k, n = a.shape
        self.k, self.n_real = k, n
        self.b = np.asarray(b, dtype=float)
        self.feas_tol, self.opt_tol = feas_tol, opt_tol
        self.max_iter, self.bland_after = max_iter, bland_after
        self.iterations = 0

        x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        resid = self.b - a @ x
        sign = np.where(resid >= 0.0, 1.0, -1.0)
        self.a = np.hstack([a, np.diag(sign)])
        self.lo = np.concatenate([lo, np.zeros(k)])
        self.hi = np.concatenate([hi, np.full(k, np.inf)])
        self.x = np.concatenate([x, np.abs(resid)])
        self.basis = np.arange(n, n + k)
        self.is_basic = np.zeros(n + k, dtype=bool)
        self.is_basic[self.basis] = True
        self.binv = np.diag(sign)
        self._since_refactor = 0

    def run(self, cost) -> Status:
        k = self.k
        art = slice(self.n_real, self.n_real + k)
        if self.x[art].sum() > self.feas_tol:
            phase1 = np.concatenate([np.zeros(self.n_real), np.ones(k)])
            status = self._optimize(phase1)
            if status is Status.UNBOUNDED:  # cannot happen: phase 1 is bounded below
                raise LPError("phase 1 reported unbounded")
            self._refactor()
            if self.x[art].sum() > self.feas_tol:
                return Status.INFEASIBLE
        # Artificials are pinned to zero for phase 2; basic ones leave on
        # the first pivot that touches their row.
        self.hi[art] = 0.0
        self.x[art] = np.where(self.is_basic[art], self.x[art], 0.0)
        status = self._optimize(np.concatenate([cost, np.zeros(k)]))
        if status is Status.OPTIMAL:
            self._refactor()
        return status

    def multipliers(self, cost) -> np.ndarray:
        return cost[self.basis] @ self.binv

    def _refactor(self):
        self.binv = np.linalg.inv(self.a[:, self.basis])
        xn = np.where(self.is_basic, 0.0, self.x)
        self.x[self.basis] = self.binv @ (self.b - self.a @ xn)
        self._since_refactor = 0

    def _optimize(self, cost) -> Status:
        a, lo, hi, x = self.a, self.lo, self.hi, self.x
        while True:
            if self._since_refactor >= _REFACTOR_EVERY:
                self._refactor()
            d = cost - (cost[self.basis] @ self.binv) @ a
            nonbasic = ~self.is_basic
            up = nonbasic & (x < hi) & (d < -self.opt_tol)
            down = nonbasic & (x > lo) & (d > self.opt_tol)
            eligible = np.flatnonzero(up | down)
            if eligible.size == 0:
                return Status.OPTIMAL
            bland = self.iterations >= self.bland_after
            if not bland:
                eligible = eligible[np.argsort(-np.abs(d[eligible]), kind="stable")]

            # Reduced costs survive bound flips, so keep walking the candidate
            # list until something actually changes the basis.
            for q in eligible:
                if self.iterations >= self.max_iter:
                    raise IterationLimitError(
                        f"simplex hit the iteration limit ({self.max_iter})")
                self.iterations += 1
                direction = 1.0 if d[q] < 0 else -1.0
                col = self.binv @ a[:, q]
                step, row, to_upper = self._ratio_test(q, col, direction, bland)
                if not np.isfinite(step):
                    return Status.UNBOUNDED
                x[self.basis] -= (direction * step) * col
                if row < 0:
                    x[q] = hi[q] if direction > 0 else lo[q]
                    continue
                x[q] += direction * step
                leaving = self.basis[row]
                x[leaving] = hi[leaving] if to_upper else lo[leaving]
                self._pivot(row, q, col)
                break

    def _ratio_test(self, q, col, direction, bland):
        """Step length and blocking row (-1 for a bound flip of ``q``)."""
        g = direction * col
        xb = self.x[self.basis]
        lim = np.full(self.k, np.inf)
        dec = g > _PIVOT_TOL
        inc = g < -_PIVOT_TOL
        lim[dec] = (xb[dec] - self.lo[self.basis][dec]) / g[dec]
        lim[inc] = (self.hi[self.basis][inc] - xb[inc]) / (-g[inc])
        np.maximum(lim, 0.0, out=lim)
        t_rows = lim.min()
        t_flip = self.hi[q] - self.lo[q]
        if t_flip <= t_rows:
            return t_flip, -1, False
        if not np.isfinite(t_rows):
            return np.inf, -1, False
        ties = np.flatnonzero(lim <= t_rows + 1e-12 * (1.0 + t_rows))
        if bland:
            row = int(ties[np.argmin(self.basis[ties])])
        else:
            row = int(ties[np.argmax(np.abs(g[ties]))])
        return t_rows, row, bool(inc[row])

    def _pivot(self, row, q, col):
        leaving = self.basis[row]
        pivot_row = self.binv[row] / col[row]
        self.binv -= np.outer(col, pivot_row)
        self.binv[row] = pivot_row
        self.basis[row] = q
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self._since_refactor += 1


def solve_boxed(
    lp: LinearProgram,
    *,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    max_iter: int | None = None,
) -> LPOutcome:
    """Dual simplex with a bound-flipping ratio test for boxed equality LPs.

    Every row must be an equality and every variable must have finite
    bounds. Any basis is then dual feasible once each nonbasic variable sits
    at the bound matching the sign of its reduced cost, so no phase 1 is
    needed. A single iteration may flip many nonbasic variables between
    their bounds (long step), which keeps the iteration count small when the
    LP has few rows and many columns, as the hinge-loss duals do.
    """
    if not isinstance(lp, LinearProgram):
        raise LPStructureError("solve_boxed() expects a LinearProgram")
    if any(s != "=" for s in lp.senses):
        raise LPStructureError("solve_boxed() needs equality rows only")
    if not (np.all(np.isfinite(lp.lower)) and np.all(np.isfinite(lp.upper))):
        raise LPStructureError("solve_boxed() needs finite bounds on every variable")
    n, k = lp.num_vars, lp.num_constraints
    if k == 0:
        return _solve_unconstrained(lp)
    if max_iter is None:
        max_iter = 50 * (k + n)

    # Artificial columns (fixed at zero) supply the starting basis.
    a = np.hstack([lp.matrix, np.eye(k)])
    lo = np.concatenate([lp.lower, np.zeros(k)])
    hi = np.concatenate([lp.upper, np.zeros(k)])
    cost = np.concatenate([lp.objective, np.zeros(k)])
    width = hi - lo
    movable = width > 0.0
    basis = np.arange(n, n + k)
    is_basic = np.zeros(n + k, dtype=bool)
    is_basic[basis] = True
    at_upper = cost < 0.0
    at_upper[basis] = False

    iterations = 0
    while True:
        binv = np.linalg.inv(a[:, basis])
        pi = cost[basis] @ binv
        d = cost - pi @ a
        xn = np.where(at_upper, hi, lo)
        xn[basis] = 0.0
        xb = binv @ (lp.rhs - a @ xn)
        below = lo[basis] - xb
        above = xb - hi[basis]
        infeas = np.maximum(below, above)
        r = int(np.argmax(infeas))
        if infeas[r] <= feas_tol:
            break
        if iterations >= max_iter:
            raise IterationLimitError(
                f"dual simplex hit the iteration limit ({max_iter})")
        iterations += 1

        to_lower = below[r] > above[r]
        sigma = 1.0 if to_lower else -1.0
        alpha = sigma * (binv[r] @ a)
        candidates = movable & ~is_basic & (
            (~at_upper & (alpha < -_PIVOT_TOL)) | (at_upper & (alpha > _PIVOT_TOL)))
        idx = np.flatnonzero(candidates)
        if idx.size == 0:
            return LPOutcome(Status.INFEASIBLE, float("nan"), np.full(n, np.nan),
                             np.full(k, np.nan), iterations)
        ratios = np.maximum(np.where(at_upper[idx], -d[idx], d[idx]), 0.0) / np.abs(alpha[idx])
        order = idx[np.lexsort((-np.abs(alpha[idx]), ratios))]
        slope = infeas[r]
        drops = np.abs(alpha[order]) * width[order]
        cumulative = slope - np.cumsum(drops)
        # The last breakpoint can cancel the slope exactly; allow for rounding.
        stop = np.flatnonzero(cumulative <= opt_tol * (1.0 + slope))
        if stop.size == 0:
            return LPOutcome(Status.INFEASIBLE, float("nan"), np.full(n, np.nan),
                             np.full(k, np.nan), iterations)
        s = int(stop[0])
        flipped = order[:s]
        at_upper[flipped] = ~at_upper[flipped]
        q = int(order[s])
        leaving = basis[r]
        basis[r] = q
        is_basic[leaving] = False
        is_basic[q] = True
        at_upper[q] = False
        at_upper[leaving] = not to_lower

    x = np.where(at_upper, hi, lo)
    x[basis] = xb
    x = x[:n]
    return LPOutcome(Status.OPTIMAL, float(lp.objective @ x), x, pi, iterations)


def format_lp(lp: LinearProgram, names: Sequence[str] | None = None) -> str:
    """Plain-text ``minimize / subject to / bounds`` rendering for debugging."""
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(lp.num_vars)]

    def expr(coeffs):
        terms = [f"{c:+.12g} {v}" for c, v in zip(coeffs, names) if c != 0.0]
        return " ".join(terms) if terms else "0"

    lines = ["minimize", "  " + expr(lp.objective), "subject to"]
    for i in range(lp.num_constraints):
        lines.append(f"  c{i + 1}: {expr(lp.matrix[i])} {lp.senses[i]} {lp.rhs[i]:.12g}")
    lines.append("bounds")
    for v, lo, hi in zip(names, lp.lower, lp.upper):
        if lo == -np.inf and hi == np.inf:
            lines.append(f"  {v} free")
        else:
            lines.append(f"  {lo:.12g} <= {v} <= {hi:.12g}")
    lines.append("end")
    return "\n".join(lines) + "\n"
