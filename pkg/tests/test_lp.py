import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svea.lp import (IterationLimitError, LinearProgram, LPStructureError, Status, format_lp,
                     solve, solve_boxed)

from oracles import vertex_enumeration


def random_bounded_lp(rng, max_vars=6, max_rows=8):
    """Random LP in a finite box; about one in ten is infeasible by design."""
    n = int(rng.integers(1, max_vars + 1))
    k = int(rng.integers(1, max_rows + 1))
    rows = rng.integers(-5, 6, size=(k, n)).astype(float)
    senses = np.array(rng.choice([">=", "<=", "="], size=k, p=[0.45, 0.45, 0.1]))
    lower = np.where(rng.random(n) < 0.5, -5.0, rng.uniform(-3, 0, size=n))
    upper = lower + rng.uniform(1, 8, size=n)
    x0 = rng.uniform(lower, upper)
    slack = rng.uniform(0, 3, size=k) * np.where(rng.random(k) < 0.05, -1.0, 1.0)
    rhs = rows @ x0 + np.where(senses == ">=", -slack, np.where(senses == "<=", slack, 0.0))
    c = rng.integers(-4, 5, size=n).astype(float)
    return LinearProgram(c, rows, tuple(senses), rhs, lower, upper)


def test_single_tight_constraint():
    lp = LinearProgram.from_rows([1.0], [([1.0], ">=", 3.0)], lower=-np.inf)
    out = solve(lp)
    assert out.status is Status.OPTIMAL
    assert out.objective_value == pytest.approx(3.0)
    assert out.primal[0] == pytest.approx(3.0)


def test_contradictory_bounds_infeasible():
    lp = LinearProgram.from_rows([0.0], [([1.0], ">=", 1.0), ([1.0], "<=", 0.0)], lower=-np.inf)
    assert solve(lp).status is Status.INFEASIBLE


def test_two_variable_vertex_example():
    rows = [([1.0, 1.0], "<=", 1.0), ([1.0, 0.0], "<=", 0.7)]
    lp = LinearProgram.from_rows([-1.0, -1.0], rows)
    out = solve(lp)
    expected, _ = vertex_enumeration([-1, -1], [r for r, _, _ in rows], ["<=", "<="], [1, 0.7],
                                     [0, 0], [np.inf, np.inf])
    # Vertex enumeration with infinite upper bounds still works here because
    # the rows and lower bounds close the polytope.
    assert expected == pytest.approx(-1.0)
    assert out.objective_value == pytest.approx(-1.0)


def test_unbounded():
    lp = LinearProgram.from_rows([-1.0, 0.0], [([1.0, -1.0], "<=", 1.0)])
    assert solve(lp).status is Status.UNBOUNDED


def test_unconstrained_lp():
    lp = LinearProgram(np.array([1.0, -1.0]), np.zeros((0, 2)), (), np.zeros(0), [0, -1], [2, 3])
    out = solve(lp)
    assert out.objective_value == pytest.approx(-3.0)


def test_oracle_suite_200_random_lps():
    rng = np.random.default_rng(20240101)
    checked = 0
    for _ in range(200):
        lp = random_bounded_lp(rng)
        ref, _ = vertex_enumeration(lp.objective, lp.matrix, lp.senses, lp.rhs, lp.lower, lp.upper)
        out = solve(lp)
        if ref is None:
            assert out.status is Status.INFEASIBLE
            continue
        assert out.status is Status.OPTIMAL
        assert abs(out.objective_value - ref) <= 1e-6
        assert lp.max_violation(out.primal) <= 1e-7
        assert out.objective_value == pytest.approx(lp.objective @ out.primal, abs=1e-9)
        checked += 1
    assert checked >= 150


def test_duals_give_reduced_cost_certificate():
    rng = np.random.default_rng(5)
    for _ in range(30):
        lp = random_bounded_lp(rng)
        out = solve(lp)
        if not out.optimal:
            continue
        # Strong duality for bounded variables: c.x = b.y + sum of bound terms.
        d = lp.objective - lp.matrix.T @ out.duals
        bound_term = np.where(d > 0, d * lp.lower, d * lp.upper)
        assert out.objective_value == pytest.approx(lp.rhs @ out.duals + bound_term.sum(), abs=1e-7)


def random_boxed_equality_lp(rng):
    n = int(rng.integers(2, 40))
    k = int(rng.integers(1, 5))
    a = rng.normal(size=(k, n))
    x0 = rng.uniform(0, 1, size=n)
    return LinearProgram(rng.normal(size=n), a, ("=",) * k, a @ x0, 0.0, 1.0)


def test_boxed_dual_simplex_matches_primal_simplex():
    rng = np.random.default_rng(11)
    for _ in range(100):
        lp = random_boxed_equality_lp(rng)
        a, b = solve(lp), solve_boxed(lp)
        assert a.status is b.status is Status.OPTIMAL
        assert b.objective_value == pytest.approx(a.objective_value, abs=1e-8)
        assert lp.max_violation(b.primal) <= 1e-7


def test_boxed_detects_infeasible():
    lp = LinearProgram([1.0, 1.0], [[1.0, 1.0]], ("=",), [3.0], 0.0, 1.0)
    assert solve_boxed(lp).status is Status.INFEASIBLE
    assert solve(lp).status is Status.INFEASIBLE


def test_boxed_rejects_inequalities_and_infinite_bounds():
    with pytest.raises(LPStructureError):
        solve_boxed(LinearProgram([1.0], [[1.0]], (">=",), [0.0], 0.0, 1.0))
    with pytest.raises(LPStructureError):
        solve_boxed(LinearProgram([1.0], [[1.0]], ("=",), [0.0], 0.0, None))


def test_determinism_bit_identical():
    rng = np.random.default_rng(3)
    for _ in range(20):
        lp = random_bounded_lp(rng)
        a, b = solve(lp), solve(lp)
        assert a.status is b.status
        if a.optimal:
            assert a.primal.tobytes() == b.primal.tobytes()
            assert a.objective_value == b.objective_value
            assert a.iterations == b.iterations


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_adding_free_zero_cost_variable_never_increases_optimum(seed):
    rng = np.random.default_rng(seed)
    lp = random_bounded_lp(rng, max_vars=4, max_rows=5)
    base = solve(lp)
    if not base.optimal:
        return
    col = rng.integers(-3, 4, size=(lp.num_constraints, 1)).astype(float)
    extended = LinearProgram(np.append(lp.objective, 0.0), np.hstack([lp.matrix, col]),
                             lp.senses, lp.rhs, np.append(lp.lower, -np.inf),
                             np.append(lp.upper, np.inf))
    out = solve(extended)
    assert out.status in (Status.OPTIMAL, Status.UNBOUNDED)
    if out.optimal:
        assert out.objective_value <= base.objective_value + 1e-7


@pytest.mark.parametrize("kwargs, message", [
    (dict(objective=[1.0, 2.0], matrix=[[1.0]], senses=(">=",), rhs=[1.0]), "shape"),
    (dict(objective=[1.0], matrix=[[1.0]], senses=(">=", "<="), rhs=[1.0]), "senses"),
    (dict(objective=[1.0], matrix=[[np.nan]], senses=(">=",), rhs=[1.0]), "non-finite"),
    (dict(objective=[1.0], matrix=[[1.0]], senses=("!",), rhs=[1.0]), "sense"),
])
def test_structural_errors(kwargs, message):
    with pytest.raises(LPStructureError, match=message):
        LinearProgram(lower=None, upper=None, **kwargs)


def test_crossed_bounds_rejected():
    with pytest.raises(LPStructureError, match="above upper"):
        LinearProgram([1.0], [[1.0]], (">=",), [0.0], [2.0], [1.0])


def test_iteration_limit_is_an_error_not_an_answer():
    rng = np.random.default_rng(1)
    lp = random_bounded_lp(rng, max_vars=6, max_rows=8)
    while not solve(lp).optimal or solve(lp).iterations < 2:
        lp = random_bounded_lp(rng)
    with pytest.raises(IterationLimitError):
        solve(lp, max_iter=1)


def test_format_lp_dump():
    lp = LinearProgram.from_rows([1.0, -2.0], [([1.0, 1.0], "<=", 4.0)], lower=[0, -np.inf])
    text = format_lp(lp, ["a", "b"])
    assert text.startswith("minimize")
    assert "subject to" in text and "bounds" in text and text.rstrip().endswith("end")
    assert "a" in text and "b" in text
