import numpy as np
import pytest

from ippmm import seminorm
from ippmm.driver import (
    MAX_ITERATIONS,
    OPTIMAL,
    PATHOLOGICAL,
    SolverConfig,
    choose_sigma,
    line_search,
    maybe_update_prox,
    pathology_check,
    solve,
    starting_point,
)
from ippmm.exceptions import StepTooSmall
from ippmm.linalg import frob_inner, is_pd
from ippmm.neighbourhood import check_membership, reg_residuals
from ippmm.newton import NewtonDirection, assemble_rhs, solve_exact
from ippmm.oracle import solve_trace_sdp
from ippmm.problem import (
    SdpProblem,
    gen_feasible,
    gen_infeasible_trace,
    kkt_residuals,
)

from _oracles import random_sym


def scalar_problem():
    return SdpProblem(
        constraint_mats=[np.array([[2.0]])],
        rhs=np.array([4.0]),
        cost=np.array([[3.0]]),
    )


def test_starting_point_mu():
    p, _ = gen_feasible(3, 2, 1, seed=0)
    state, prox = starting_point(p, SolverConfig(rho=2.0))
    assert state.mu == pytest.approx(4.0)
    assert np.allclose(state.X, 2.0 * np.eye(3))
    assert np.allclose(state.y, 0.0)


def test_starting_point_scalar_references():
    state, prox = starting_point(scalar_problem(), SolverConfig(rho=1.0))
    assert prox.params.b_bar[0] == pytest.approx(-2.0)  # 2*1 - 4
    assert prox.params.C_bar[0, 0] == pytest.approx(-2.0)  # 1 - 3
    assert np.allclose(prox.Xi, state.X)
    assert np.allclose(prox.lam, state.y)


def test_starting_point_residuals_zero():
    p, _ = gen_feasible(4, 3, 2, seed=1)
    cfg = SolverConfig()
    state, prox = starting_point(p, cfg)
    ev = seminorm.build(p)
    res = reg_residuals(
        p, prox.params, ev, state.X, state.y, state.Z, prox.Xi, prox.lam, state.mu
    )
    assert res.two_norm == 0.0
    assert res.compl_dev <= 1e-12


def test_choose_sigma_policies():
    cfg = SolverConfig()
    assert choose_sigma(0, cfg) == pytest.approx(0.25)
    cfg_a = SolverConfig(sigma_policy="adaptive")
    assert choose_sigma(1, cfg_a, mu_ratio=0.9) == pytest.approx(0.45)
    assert choose_sigma(1, cfg_a, mu_ratio=0.01) == pytest.approx(0.05)
    cfg_f = SolverConfig(sigma_policy="fixed", sigma_fixed=0.1)
    assert choose_sigma(5, cfg_f) == pytest.approx(0.1)


def test_line_search_rejects_zero_direction():
    p, _ = gen_feasible(3, 2, 1, seed=2)
    cfg = SolverConfig()
    state, prox = starting_point(p, cfg)
    ev = seminorm.build(p)
    zero = NewtonDirection(
        dX=np.zeros((3, 3)), dy=np.zeros(2), dZ=np.zeros((3, 3)),
        err_p=np.zeros(2), err_D=np.zeros((3, 3)), err_mu_norm=0.0,
    )
    with pytest.raises(StepTooSmall):
        line_search(p, prox.params, ev, state, prox, zero, cfg)


def test_line_search_agrees_with_grid_oracle():
    p, _ = gen_feasible(4, 3, 2, seed=3)
    cfg = SolverConfig()
    state, prox = starting_point(p, cfg)
    ev = seminorm.build(p)
    rhs = assemble_rhs(p, prox.params, state, prox, choose_sigma(0, cfg))
    d = solve_exact(p, state, rhs)
    alpha, nxt = line_search(p, prox.params, ev, state, prox, d, cfg)

    # independent grid evaluation of both acceptance tests
    expected = None
    a = 1.0
    while a >= cfg.alpha_min:
        xa = state.X + a * d.dX
        za = state.Z + a * d.dZ
        mua = frob_inner(xa, za) / p.n
        if 0 < mua <= (1 - 0.01 * a) * state.mu:
            ok, _, _ = check_membership(
                p, prox.params, ev, xa, state.y + a * d.dy, za,
                prox.Xi, prox.lam, mua,
            )
            if ok:
                expected = a
                break
        a *= cfg.backtrack_factor
    assert expected is not None
    assert alpha == pytest.approx(expected)
    # accepted iterate passes the membership test by construction
    ok, _, _ = check_membership(
        p, prox.params, ev, nxt.X, nxt.y, nxt.Z, prox.Xi, prox.lam, nxt.mu
    )
    assert ok


def test_maybe_update_prox_at_centered_point():
    p, _ = gen_feasible(3, 2, 1, seed=4)
    cfg = SolverConfig()
    state, prox = starting_point(p, cfg)
    ev = seminorm.build(p)
    # the start has exactly zero anchor-free residuals: update must fire
    new_prox, updated = maybe_update_prox(p, prox.params, ev, state, prox)
    assert updated
    assert np.array_equal(new_prox.Xi, state.X)


def test_maybe_update_prox_rejects_large_residual():
    p, _ = gen_feasible(3, 2, 1, seed=5)
    cfg = SolverConfig()
    state, prox = starting_point(p, cfg)
    ev = seminorm.build(p)
    bad = type(state)(
        X=state.X + 5.0 * np.eye(3), y=state.y + 100.0, Z=state.Z, mu=state.mu
    )
    _, updated = maybe_update_prox(p, prox.params, ev, bad, prox)
    assert not updated


def test_prox_updates_happen_during_solve():
    # anchor updates fire when the iterate path stays semi-norm-close to the
    # anchor; an instance whose solution manifold passes through rho*I is
    # the cleanest end-to-end exercise of the update branch
    cfg = SolverConfig()
    n = 3
    p = SdpProblem([np.eye(n)], np.array([cfg.rho * n]), 0.1 * np.eye(n))
    rep = solve(p, cfg)
    assert rep.status == OPTIMAL
    assert any(rec.prox_updated for rec in rep.trace)


def test_pathology_check_thresholds():
    cfg = SolverConfig()
    x = np.eye(2)
    xi = np.zeros((2, 2))
    y = np.full(1, 2.0 * cfg.K_dagger)
    lam = np.zeros(1)
    assert not pathology_check(0, x, xi, y, lam, cfg)  # fresh anchor
    assert pathology_check(cfg.k_dagger, x, xi, y, lam, cfg)
    assert not pathology_check(cfg.k_dagger, x, x, np.zeros(1), np.zeros(1), cfg)
    assert pathology_check(0, x, x, np.zeros(1), np.zeros(1), cfg,
                           stall_count=cfg.k_dagger)


def test_solve_trace_constrained_analytic():
    c = np.diag([1.0, 3.0])
    p = SdpProblem([np.eye(2)], np.array([1.0]), c)
    rep = solve(p, SolverConfig())
    assert rep.status == OPTIMAL
    assert rep.objective_primal == pytest.approx(1.0, abs=1e-5)
    assert np.allclose(rep.iterate.X, np.diag([1.0, 0.0]), atol=1e-4)
    # oracle agreement and certified bound
    sol = solve_trace_sdp(c)
    assert rep.objective_primal >= sol.value - 1e-6


def test_solve_generated_instance():
    p, _ = gen_feasible(6, 5, 3, seed=7)
    cfg = SolverConfig()
    rep = solve(p, cfg)
    assert rep.status == OPTIMAL
    res = rep.final_residuals
    assert res.primal_res < cfg.tol
    assert res.dual_res < cfg.tol
    assert res.gap < cfg.tol
    assert is_pd(rep.iterate.X) and is_pd(rep.iterate.Z)
    assert frob_inner(rep.iterate.X, rep.iterate.Z) >= 0


def test_solve_infeasible_is_pathological():
    rep = solve(gen_infeasible_trace(3), SolverConfig())
    assert rep.status == PATHOLOGICAL
    assert rep.pathology_reason == "divergence"


def test_solve_runs_out_of_iterations():
    p, _ = gen_feasible(5, 4, 2, seed=8)
    rep = solve(p, SolverConfig(max_outer_iters=3))
    assert rep.status == MAX_ITERATIONS
    assert rep.iterations == 3


def test_trace_length_matches_iterations():
    p, _ = gen_feasible(4, 3, 2, seed=9)
    rep = solve(p, SolverConfig())
    assert len(rep.trace) == rep.iterations
    assert all(rec.k == i for i, rec in enumerate(rep.trace))


def test_mu_decreases_q_linearly():
    p, _ = gen_feasible(5, 4, 2, seed=10)
    rep = solve(p, SolverConfig())
    mu_prev = rep.mu0
    for rec in rep.trace:
        assert rec.mu <= (1 - 0.01 * rec.alpha) * mu_prev * (1 + 1e-14)
        mu_prev = rec.mu


def test_membership_on_every_accepted_iterate():
    p, _ = gen_feasible(5, 4, 2, seed=11)
    rep = solve(p, SolverConfig())
    assert all(rec.membership_ok for rec in rep.trace)


def test_determinism():
    p, _ = gen_feasible(4, 3, 2, seed=12)
    r1 = solve(p, SolverConfig())
    r2 = solve(p, SolverConfig())
    assert r1.status == r2.status
    assert r1.iterations == r2.iterations
    assert np.array_equal(r1.iterate.X, r2.iterate.X)
    for a, b in zip(r1.trace, r2.trace):
        assert a.mu == b.mu and a.alpha == b.alpha and a.two_norm == b.two_norm


def test_regularized_residuals_bounded_by_mu():
    # the corridor bound two_norm <= K_N mu / mu0 forces R-linear decay
    p, _ = gen_feasible(5, 4, 2, seed=13)
    rep = solve(p, SolverConfig())
    params = rep.params
    for rec in rep.trace:
        assert rec.two_norm <= params.K_N * rec.mu / params.mu0 * (1 + 1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(sigma_min=0.6, sigma_max=0.4).validate()
    with pytest.raises(ValueError):
        SolverConfig(mode="wat").validate()
    with pytest.raises(ValueError):
        SolverConfig(sigma_max=0.7).validate()
