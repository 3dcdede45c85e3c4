"""Assembly and solution of the regularized Newton system.

Vectorized form, acting on (vec dX, dy, vec dZ):

    [ -mu I   A'   I  ] [vec dX]   [dual_rhs ]
    [  A    mu I   0  ] [  dy  ] = [primal_rhs]
    [  E      0    F  ] [vec dZ]   [compl_rhs]

The exact backend factorizes the dense (2n^2 + m) block matrix.  The
inexact backend eliminates dZ through the third block (so its residual is
structurally zero), rescales the remaining system into a symmetric
indefinite saddle form with the block scaling D = S^{1/2} E^{-1}, and runs
MINRES until the recovered full-system residuals meet both accuracy bounds:
the 2-norm bound and the semi-norm bound, each proportional to
sigma_min * mu / (4 mu0).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from . import linalg, scaling
from .exceptions import (
    DimensionTooLarge,
    MaxKrylovIterations,
    NotPositiveDefinite,
    SingularOperator,
    SingularSystem,
)
from .problem import SdpProblem, apply_A, apply_Astar
from .seminorm import SeminormEvaluator

__all__ = [
    "NewtonRhs",
    "NewtonDirection",
    "assemble_rhs",
    "solve_exact",
    "solve_inexact",
    "f_solve",
]

DEFAULT_DENSE_CAP = 64


@dataclass
class NewtonRhs:
    dual_rhs: np.ndarray  # first block, symmetric
    primal_rhs: np.ndarray  # second block, length m
    compl_rhs: np.ndarray  # third block: sigma*mu*I - Z^{1/2} X Z^{1/2}


@dataclass
class NewtonDirection:
    dX: np.ndarray
    dy: np.ndarray
    dZ: np.ndarray
    err_p: np.ndarray  # achieved second-block residual
    err_D: np.ndarray  # achieved first-block residual (matrix)
    err_mu_norm: float  # third-block residual norm; zero up to round-off
    krylov_iters: int = 0


def assemble_rhs(p: SdpProblem, params, state, prox, sigma: float) -> NewtonRhs:
    """Right-hand side of the Newton system at the current iterate.

    ``state`` carries (X, y, Z, mu) and ``prox`` the estimates (Xi, lam);
    the centering parameter scales both the barrier target and the
    reference-infeasibility terms.
    """
    mu = state.mu
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    shift = sigma * mu / params.mu0
    dual = (
        p.cost
        + shift * params.C_bar
        - apply_Astar(p, state.y)
        - state.Z
        + sigma * mu * (state.X - prox.Xi)
    )
    primal = (
        -apply_A(p, state.X)
        - sigma * mu * (state.y - prox.lam)
        + p.rhs
        + shift * params.b_bar
    )
    ctx = scaling.ScalingContext.from_z(state.Z)
    compl = scaling.complementarity_residual(ctx, state.X, sigma * mu)
    return NewtonRhs(
        dual_rhs=linalg.symmetrize(dual),
        primal_rhs=primal,
        compl_rhs=linalg.symmetrize(compl),
    )


def _unvec(v: np.ndarray, n: int) -> np.ndarray:
    return v.reshape(n, n, order="F")


def _full_residuals(p, state, rhs, dx, dy, dz, ctx):
    """Achieved residuals of the full three-block system at a direction."""
    mu = state.mu
    err_d = -mu * dx + apply_Astar(p, dy) + dz - rhs.dual_rhs
    err_p = apply_A(p, dx) + mu * dy - rhs.primal_rhs
    err_mu = scaling.apply_E(ctx, dx) + scaling.apply_F(ctx, state.X, dz) - rhs.compl_rhs
    return err_p, err_d, float(np.linalg.norm(err_mu, "fro"))


def solve_exact(
    p: SdpProblem,
    state,
    rhs: NewtonRhs,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> NewtonDirection:
    """Dense factorization of the full block system (desk scale)."""
    n, m = p.n, p.m
    if n > dense_cap:
        raise DimensionTooLarge(f"n = {n} above dense cap {dense_cap}")
    mu = state.mu
    ctx = scaling.ScalingContext.from_z(state.Z)
    zh, zhi = ctx.z_half, ctx.z_halfinv
    n2 = n * n

    e_dense = np.kron(zh, zh)
    zhx = zh @ state.X
    f_dense = 0.5 * (np.kron(zhx, zhi) + np.kron(zhi, zhx))
    a_mat = p.a_matrix

    dim = 2 * n2 + m
    big = np.zeros((dim, dim))
    big[:n2, :n2] = -mu * np.eye(n2)
    big[:n2, n2 : n2 + m] = a_mat.T
    big[:n2, n2 + m :] = np.eye(n2)
    big[n2 : n2 + m, :n2] = a_mat
    big[n2 : n2 + m, n2 : n2 + m] = mu * np.eye(m)
    big[n2 + m :, :n2] = e_dense
    big[n2 + m :, n2 + m :] = f_dense

    full_rhs = np.concatenate(
        [linalg.vec(rhs.dual_rhs), rhs.primal_rhs, linalg.vec(rhs.compl_rhs)]
    )
    try:
        sol = np.linalg.solve(big, full_rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(
            "dense Newton matrix is singular; regularized systems are "
            "nonsingular for mu > 0 and Z PD, so the input data is corrupted"
        ) from exc

    dx = linalg.symmetrize(_unvec(sol[:n2], n))
    dy = sol[n2 : n2 + m].copy()
    dz = linalg.symmetrize(_unvec(sol[n2 + m :], n))

    err_p, err_d, err_mu_norm = _full_residuals(p, state, rhs, dx, dy, dz, ctx)
    scale = 1.0 + float(np.linalg.norm(full_rhs))
    assert (
        np.sqrt(np.sum(err_p**2) + np.sum(err_d**2)) + err_mu_norm
    ) <= 1e-10 * scale, "dense Newton solve lost more than 1e-10 relative accuracy"
    return NewtonDirection(dx, dy, dz, err_p, err_d, err_mu_norm)


def f_solve(ctx: scaling.ScalingContext, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Solve F vec(M) = vec(W) exactly in the eigenbasis of V = Z^{1/2}XZ^{1/2}.

    Since F = S E^{-1} with S the Lyapunov operator of V, the inverse is
    F^{-1} = E S^{-1}: Hadamard-divide by the eigenvalue pair means in the
    V basis, then congruence by Z^{1/2}.
    """
    w = np.asarray(w, dtype=float)
    eigs, q = scaling.lyapunov_eigenbasis(ctx, x)
    floor = linalg.pd_floor(np.asarray(x, dtype=float))
    if eigs[0] <= floor:
        raise SingularOperator(
            f"complementarity operator singular: V eigenvalue {eigs[0]:.3e}"
        )
    s_inv_w = scaling.lyapunov_power_apply(eigs, q, w, -1.0)
    return linalg.symmetrize(ctx.z_half @ s_inv_w @ ctx.z_half)


class _ReducedOperator:
    """Matrix-free symmetric saddle form of the dZ-eliminated system.

    Unknowns are (u_hat, w_tilde) with vec(dX) = D' u_hat and dy = -w_tilde:

        [ I + mu D D'   D A' ] [u_hat ]   [ S^{-1/2} r3 - D r1 ]
        [   A D'       -mu I ] [w_tild] = [        r2          ]
    """

    def __init__(self, p, ctx, x, mu):
        self.p = p
        self.ctx = ctx
        self.mu = mu
        self.n = p.n
        self.m = p.m
        self.eigs, self.q = scaling.lyapunov_eigenbasis(ctx, x)
        floor = linalg.pd_floor(np.asarray(x, dtype=float))
        if self.eigs[0] <= floor:
            raise SingularOperator(
                f"complementarity operator singular: V eigenvalue {self.eigs[0]:.3e}"
            )
        self.applies = 0

    def s_power(self, m_mat, power):
        return scaling.lyapunov_power_apply(self.eigs, self.q, m_mat, power)

    def d_apply(self, m_mat):
        """D = S^{1/2} E^{-1}: congruence by Z^{-1/2}, then S^{1/2}."""
        zhi = self.ctx.z_halfinv
        return self.s_power(zhi @ m_mat @ zhi, 0.5)

    def dt_apply(self, m_mat):
        """D' = E^{-1} S^{1/2}: S^{1/2} first, then congruence by Z^{-1/2}."""
        zhi = self.ctx.z_halfinv
        s = self.s_power(m_mat, 0.5)
        return zhi @ s @ zhi

    def matvec(self, vec_in):
        self.applies += 1
        n, m, n2 = self.n, self.m, self.n * self.n
        u_hat = _unvec(vec_in[:n2], n)
        w_tilde = vec_in[n2:]
        g = self.dt_apply(u_hat)  # D' u_hat as a matrix
        top = (
            u_hat
            + self.mu * self.d_apply(g)
            + self.d_apply(apply_Astar(self.p, w_tilde))
        )
        bottom = apply_A(self.p, g) - self.mu * w_tilde
        return np.concatenate([top.reshape(-1, order="F"), bottom])

    def as_linear_operator(self):
        size = self.n * self.n + self.m
        return scipy.sparse.linalg.LinearOperator(
            (size, size), matvec=self.matvec, dtype=float
        )


def solve_inexact(
    p: SdpProblem,
    state,
    rhs: NewtonRhs,
    params,
    sigma_min: float,
    ev: SeminormEvaluator,
    tol_scale: float = 1.0,
    budget: int | None = None,
) -> NewtonDirection:
    """Krylov solve honoring the two accuracy bounds on (err_p, err_D).

    dZ is recovered exactly from the third block, so the complementarity
    residual is zero by construction; MINRES iterations (plus iterative
    refinement sweeps if needed) continue until

        ||(err_p, vec err_D)||_2 <= tol_scale * sigma_min/(4 mu0) * K_N * mu
        ||(err_p, err_D)||_S     <= tol_scale * sigma_min/(4 mu0) * gamma_S * rho * mu

    or the matrix-application budget (default ``10 (n^2 + m)``) runs out.
    """
    n, m = p.n, p.m
    n2 = n * n
    mu = state.mu
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    ctx = scaling.ScalingContext.from_z(state.Z)
    op = _ReducedOperator(p, ctx, state.X, mu)

    base = sigma_min * mu / (4.0 * params.mu0)
    bound_two = tol_scale * base * params.K_N
    bound_semi = tol_scale * base * params.gamma_S * params.rho

    if budget is None:
        budget = 10 * (n2 + m)

    rhs_top = op.s_power(rhs.compl_rhs, -0.5) - op.d_apply(rhs.dual_rhs)
    reduced_rhs = np.concatenate(
        [rhs_top.reshape(-1, order="F"), rhs.primal_rhs]
    )

    lin_op = op.as_linear_operator()
    sol = np.zeros(n2 + m)

    def recover(packed):
        u_hat = _unvec(packed[:n2], n)
        dx = linalg.symmetrize(op.dt_apply(u_hat))
        dy = -packed[n2:]
        w = rhs.compl_rhs - scaling.apply_E(ctx, dx)
        dz = f_solve(ctx, state.X, w)
        return dx, dy, dz

    last_checks = (False, False)
    for _ in range(1 + 4):  # initial solve plus refinement sweeps
        remaining = budget - op.applies
        if remaining <= 0:
            break
        resid = reduced_rhs - lin_op @ sol
        correction, _ = scipy.sparse.linalg.minres(
            lin_op, resid, rtol=1e-14, maxiter=remaining
        )
        sol = sol + correction

        dx, dy, dz = recover(sol)
        err_p, err_d, err_mu_norm = _full_residuals(p, state, rhs, dx, dy, dz, ctx)
        achieved_two = float(np.sqrt(np.sum(err_p**2) + np.sum(err_d**2)))
        achieved_semi = ev.eval(err_p, err_d)
        last_checks = (achieved_two <= bound_two, achieved_semi <= bound_semi)
        if all(last_checks):
            return NewtonDirection(
                dx, dy, dz, err_p, err_d, err_mu_norm, krylov_iters=op.applies
            )

    raise MaxKrylovIterations(
        f"accuracy bounds unmet after {op.applies} matrix applications "
        f"(2-norm ok: {last_checks[0]}, semi-norm ok: {last_checks[1]})",
        two_norm_ok=last_checks[0],
        semi_norm_ok=last_checks[1],
    )
