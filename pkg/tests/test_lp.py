import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multioss.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, check_feasible, solve_lp


def test_upper_bound_attained():
    sol = solve_lp(LpProblem(c=[-1.0], bounds=[(0, 1)]))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(1.0) and sol.objective_value == pytest.approx(-1.0)


def test_infeasible_against_bound():
    sol = solve_lp(LpProblem(c=[1.0], A_ub=[[-1.0]], b_ub=[-2.0], bounds=[(None, 1)]))
    assert sol.status == INFEASIBLE


def test_unbounded_ray():
    sol = solve_lp(LpProblem(c=[-1.0], bounds=[(0, None)]))
    assert sol.status == UNBOUNDED


def test_free_and_negative_bounds():
    # min x + y, x free with x >= -3 via row, y in [-2, 5]
    prob = LpProblem(c=[1.0, 1.0], A_ub=[[-1.0, 0.0]], b_ub=[3.0], bounds=[(None, None), (-2, 5)])
    sol = solve_lp(prob)
    np.testing.assert_allclose(sol.x, [-3.0, -2.0], atol=1e-12)


def test_equality_rows():
    prob = LpProblem(c=[1.0, 2.0, 3.0], A_eq=[[1, 1, 1], [1, -1, 0]], b_eq=[1, 0])
    sol = solve_lp(prob)
    np.testing.assert_allclose(sol.x, [0.5, 0.5, 0.0], atol=1e-12)
    assert sol.objective_value == pytest.approx(1.5)


def test_degenerate_cycling_example():
    # Beale's classic cycling LP; Bland's rule must terminate
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    sol = solve_lp(LpProblem(c=c, A_ub=A, b_ub=[0, 0, 1]))
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(-0.05)


def vertex_oracle(c, A_ub, b_ub, lo, hi):
    """Minimum of c.x over all basic feasible points of a bounded polytope."""
    n = len(c)
    rows = [(A_ub[i], b_ub[i]) for i in range(len(b_ub))]
    rows += [(-np.eye(n)[j], -lo[j]) for j in range(n)]
    rows += [(np.eye(n)[j], hi[j]) for j in range(n)]
    G = np.array([r[0] for r in rows])
    h = np.array([r[1] for r in rows])
    best = math.inf
    for idx in itertools.combinations(range(len(rows)), n):
        M = G[list(idx)]
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, h[list(idx)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(0, 6))
def test_matches_vertex_enumeration(seed, n, k):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    A = rng.normal(size=(k, n))
    b = rng.normal(size=k)
    lo = -rng.uniform(0, 2, size=n)
    hi = rng.uniform(0, 2, size=n)
    expect = vertex_oracle(c, A, b, lo, hi)
    sol = solve_lp(LpProblem(c=c, A_ub=A, b_ub=b, bounds=list(zip(lo, hi))))
    if math.isinf(expect):
        assert sol.status == INFEASIBLE
    else:
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(expect, abs=1e-6)


def test_against_scipy(rng):
    linprog = pytest.importorskip("scipy.optimize").linprog
    for _ in range(30):
        n, me, mu = 8, 3, 4
        A_eq = rng.uniform(size=(me, n))
        x0 = rng.uniform(size=n)
        b_eq = A_eq @ x0
        A_ub = rng.normal(size=(mu, n))
        b_ub = A_ub @ x0 + rng.uniform(size=mu)
        c = rng.normal(size=n)
        bounds = [(0, 1)] * n
        ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        sol = solve_lp(LpProblem(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, bounds=bounds))
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(ref.fun, abs=1e-7)


def test_weak_duality_and_feasibility(rng):
    for _ in range(30):
        n = 6
        A_eq = rng.uniform(size=(2, n))
        xs = rng.uniform(size=(5, n))
        b_eq = A_eq @ xs[0]
        c = rng.normal(size=n)
        prob = LpProblem(c=c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, 1)] * n)
        sol = solve_lp(prob)
        assert check_feasible(prob, sol.x, 1e-8)
        assert sol.objective_value <= c @ xs[0] + 1e-8


def test_deterministic(rng):
    n = 12
    A_eq = rng.uniform(size=(4, n))
    b_eq = A_eq @ rng.uniform(size=n)
    c = rng.normal(size=n)
    prob = LpProblem(c=c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, 1)] * n)
    a, b = solve_lp(prob), solve_lp(prob)
    assert a.x.tobytes() == b.x.tobytes() and a.iterations == b.iterations


def test_shape_mismatch():
    with pytest.raises(ValueError):
        LpProblem(c=[1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0])
