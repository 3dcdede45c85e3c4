import numpy as np
import pytest

from ippmm.oracle import (
    Infeasible,
    Unbounded,
    solve_diagonal_sdp,
    solve_trace_sdp,
)
from ippmm.problem import SdpProblem, gen_infeasible_trace, kkt_residuals

from _oracles import random_sym


def trace_problem(c):
    n = c.shape[0]
    return SdpProblem([np.eye(n)], np.array([1.0]), c)


def test_trace_oracle_diag():
    sol = solve_trace_sdp(np.diag([1.0, 3.0]))
    assert sol.value == pytest.approx(1.0)
    assert np.allclose(sol.X_star, np.diag([1.0, 0.0]))
    assert sol.provenance == "analytic"


def test_trace_oracle_identity():
    sol = solve_trace_sdp(np.eye(4))
    assert sol.value == pytest.approx(1.0)
    assert np.allclose(sol.Z_star, 0.0)


def test_trace_oracle_offdiagonal():
    sol = solve_trace_sdp(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert sol.value == pytest.approx(-1.0)


def test_trace_oracle_kkt_certificate():
    rng = np.random.default_rng(80)
    for _ in range(10):
        c = random_sym(rng, 5)
        sol = solve_trace_sdp(c)
        res = kkt_residuals(trace_problem(c), sol.X_star, sol.y_star, sol.Z_star)
        assert res.primal_res <= 1e-9
        assert res.dual_res <= 1e-9
        assert abs(res.gap) <= 1e-9
        assert np.all(np.linalg.eigvalsh(sol.Z_star) >= -1e-9)


def test_diagonal_oracle_scalar():
    p = SdpProblem([np.array([[2.0]])], np.array([4.0]), np.array([[3.0]]))
    sol = solve_diagonal_sdp(p)
    assert sol.X_star[0, 0] == pytest.approx(2.0)
    assert sol.value == pytest.approx(6.0)
    assert sol.y_star[0] == pytest.approx(1.5)
    assert sol.Z_star[0, 0] == pytest.approx(0.0)
    assert sol.provenance == "brute_force"


def test_diagonal_oracle_infeasible():
    with pytest.raises(Infeasible):
        solve_diagonal_sdp(gen_infeasible_trace(1))


def test_diagonal_oracle_unbounded():
    # min -x1 - x2 s.t. x1 - x2 = 0, x >= 0: ray (1, 1) improves forever
    p = SdpProblem(
        [np.diag([1.0, -1.0])], np.array([0.0]), np.diag([-1.0, -1.0])
    )
    with pytest.raises(Unbounded):
        solve_diagonal_sdp(p)


def test_diagonal_oracle_matches_linprog():
    from scipy.optimize import linprog

    rng = np.random.default_rng(81)
    hits = 0
    for _ in range(20):
        n, m = 5, 2
        mats = [np.diag(rng.standard_normal(n)) for _ in range(m)]
        cost = np.diag(rng.standard_normal(n))
        x_feas = rng.uniform(0.5, 1.5, size=n)
        b = np.array([float(np.diag(a) @ x_feas) for a in mats])
        p = SdpProblem(mats, b, cost)
        lp = linprog(
            np.diag(cost),
            A_eq=np.vstack([np.diag(a) for a in mats]),
            b_eq=b,
            bounds=[(0, None)] * n,
            method="highs",
        )
        try:
            sol = solve_diagonal_sdp(p)
        except Unbounded:
            assert lp.status == 3  # linprog: unbounded
            continue
        assert lp.status == 0
        assert sol.value == pytest.approx(lp.fun, rel=1e-8, abs=1e-8)
        hits += 1
    assert hits >= 5  # bounded cases actually exercised


def test_diagonal_oracle_kkt_certificate():
    rng = np.random.default_rng(82)
    checked = 0
    for _ in range(20):
        n, m = 4, 2
        mats = [np.diag(rng.standard_normal(n)) for _ in range(m)]
        cost = np.diag(rng.uniform(0.5, 2.0, size=n))  # positive costs: bounded
        x_feas = rng.uniform(0.5, 1.5, size=n)
        b = np.array([float(np.diag(a) @ x_feas) for a in mats])
        p = SdpProblem(mats, b, cost)
        sol = solve_diagonal_sdp(p)
        res = kkt_residuals(p, sol.X_star, sol.y_star, sol.Z_star)
        assert res.primal_res <= 1e-9
        assert res.dual_res <= 1e-9
        assert abs(res.gap) <= 1e-9
        checked += 1
    assert checked == 20


def test_diagonal_oracle_rejects_dense_input():
    rng = np.random.default_rng(83)
    p = SdpProblem([random_sym(rng, 3)], np.array([1.0]), np.eye(3))
    with pytest.raises(ValueError):
        solve_diagonal_sdp(p)
