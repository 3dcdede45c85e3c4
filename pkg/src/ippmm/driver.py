"""Main solver loop: proximal anchor updates wrapped around damped Newton steps.

Each iteration solves the regularized Newton system at the current iterate,
backtracks to the largest grid step keeping the new point inside the
neighbourhood while decreasing the barrier parameter by at least one percent
of the step, and then refreshes the proximal estimates whenever the
anchor-free residuals have dropped below their mu-proportional thresholds.
Divergence of the iterates from a stale anchor is the signature of a
problem without a KKT point and triggers the pathological exit.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import linalg, neighbourhood, newton, seminorm
from .exceptions import StepTooSmall
from .neighbourhood import NeighbourhoodParams, check_membership
from .problem import SdpProblem, apply_A, apply_Astar, kkt_residuals
from .scaling import ScalingContext, scaled_direction_norms

__all__ = [
    "Iterate",
    "ProxState",
    "SolverConfig",
    "SolveReport",
    "IterationRecord",
    "OPTIMAL",
    "MAX_ITERATIONS",
    "PATHOLOGICAL",
    "starting_point",
    "choose_sigma",
    "line_search",
    "maybe_update_prox",
    "pathology_check",
    "solve",
]

OPTIMAL = "Optimal"
MAX_ITERATIONS = "MaxIterations"
PATHOLOGICAL = "Pathological"


@dataclass
class Iterate:
    X: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    mu: float

    @classmethod
    def from_xyz(cls, x, y, z) -> "Iterate":
        x = linalg.symmetrize(x)
        z = linalg.symmetrize(z)
        y = np.asarray(y, dtype=float).reshape(-1)
        mu = linalg.frob_inner(x, z) / x.shape[0]
        return cls(X=x, y=y, Z=z, mu=mu)


@dataclass
class ProxState:
    Xi: np.ndarray
    lam: np.ndarray
    params: NeighbourhoodParams


@dataclass
class SolverConfig:
    tol: float = 1e-6
    sigma_min: float = 0.05
    sigma_max: float = 0.45
    rho: float = 2.0
    max_outer_iters: int = 300
    backtrack_factor: float = 0.7
    alpha_min: float = 1e-10
    mode: str = "exact"  # "exact" | "inexact"
    k_dagger: int = 40
    K_dagger: float = 10.0
    dense_cap: int = 64
    gamma_S: float = 0.9
    gamma_mu: float = 0.3
    K_N: float | None = None  # None: 10 * max(1, initial infeasibility norm)
    sigma_policy: str = "midpoint"  # "midpoint" | "fixed" | "adaptive"
    sigma_fixed: float = 0.25
    seed: int | None = None  # echoed into artifacts; the solve is deterministic

    def validate(self):
        if not 0 < self.sigma_min <= self.sigma_max <= 0.5:
            raise ValueError(
                f"need 0 < sigma_min <= sigma_max <= 0.5, got "
                f"({self.sigma_min}, {self.sigma_max})"
            )
        if self.mode not in ("exact", "inexact"):
            raise ValueError(f"mode must be 'exact' or 'inexact', got {self.mode!r}")
        if self.sigma_policy not in ("midpoint", "fixed", "adaptive"):
            raise ValueError(f"unknown sigma policy {self.sigma_policy!r}")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError(f"backtrack_factor must be in (0,1)")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


@dataclass
class IterationRecord:
    k: int
    mu: float
    alpha: float
    sigma: float
    two_norm: float
    semi_norm: float
    compl_dev: float
    prox_updated: bool
    krylov_iters: int
    scaled_dx_norm: float
    scaled_dz_norm: float
    trace_identity_relerr: float
    membership_ok: bool
    mu_pre: float = float("nan")  # barrier value the Newton system was built at
    err_two_norm: float = float("nan")  # achieved ||(err_p, vec err_D)||_2
    err_semi_norm: float = float("nan")  # achieved ||(err_p, err_D)||_S
    err_mu_rel: float = float("nan")  # third-block residual / (1 + ||compl_rhs||)


@dataclass
class SolveReport:
    status: str
    iterate: Iterate
    trace: list
    wall_time: float
    config: SolverConfig
    mu0: float
    objective_primal: float
    objective_dual: float
    final_residuals: object
    pathology_reason: str | None = None
    params: NeighbourhoodParams | None = None

    @property
    def iterations(self) -> int:
        return len(self.trace)


def starting_point(p: SdpProblem, cfg: SolverConfig):
    """Scaled-identity start (X0 = Z0 = rho I, y0 = 0) and its anchor state.

    The reference infeasibilities b_bar = A vec(X0) - b and C_bar = Z0 - C
    make the regularized residuals vanish at the start, so the initial
    triple sits at the center of its own neighbourhood.
    """
    n = p.n
    rho = cfg.rho
    x0 = rho * np.eye(n)
    z0 = rho * np.eye(n)
    y0 = np.zeros(p.m)
    mu0 = rho * rho

    b_bar = apply_A(p, x0) - p.rhs
    c_bar = z0 - p.cost
    if cfg.K_N is not None:
        k_n = cfg.K_N
    else:
        infeas = np.sqrt(np.sum(b_bar**2) + np.sum(c_bar**2))
        k_n = 10.0 * max(1.0, float(infeas))
    params = NeighbourhoodParams(
        K_N=k_n,
        gamma_S=cfg.gamma_S,
        gamma_mu=cfg.gamma_mu,
        rho=rho,
        mu0=mu0,
        b_bar=b_bar,
        C_bar=linalg.symmetrize(c_bar),
    )
    state = Iterate(X=x0, y=y0, Z=z0, mu=mu0)
    prox = ProxState(Xi=x0.copy(), lam=y0.copy(), params=params)
    return state, prox


def choose_sigma(k: int, cfg: SolverConfig, mu_ratio: float | None = None) -> float:
    """Centering parameter policy, always clamped to [sigma_min, sigma_max]."""
    if cfg.sigma_policy == "fixed":
        raw = cfg.sigma_fixed
    elif cfg.sigma_policy == "adaptive" and mu_ratio is not None:
        raw = mu_ratio
    else:
        raw = 0.5 * (cfg.sigma_min + cfg.sigma_max)
    return float(min(cfg.sigma_max, max(cfg.sigma_min, raw)))


def line_search(p, params, ev, state, prox, direction, cfg):
    """Largest backtracking-grid step passing both acceptance tests.

    A trial step alpha must reduce the barrier parameter,
    mu(alpha) <= (1 - 0.01 alpha) mu, and land inside the neighbourhood at
    mu(alpha) with the current anchor.  Raises StepTooSmall below alpha_min.
    """
    n = p.n
    alpha = 1.0
    while alpha >= cfg.alpha_min:
        x_a = state.X + alpha * direction.dX
        z_a = state.Z + alpha * direction.dZ
        mu_a = linalg.frob_inner(x_a, z_a) / n
        if 0.0 < mu_a <= (1.0 - 0.01 * alpha) * state.mu:
            y_a = state.y + alpha * direction.dy
            ok, _, _ = check_membership(
                p, params, ev, x_a, y_a, z_a, prox.Xi, prox.lam, mu_a
            )
            if ok:
                return alpha, Iterate(
                    X=linalg.symmetrize(x_a), y=y_a, Z=linalg.symmetrize(z_a), mu=mu_a
                )
        alpha *= cfg.backtrack_factor
    raise StepTooSmall(
        f"no acceptable step above alpha_min = {cfg.alpha_min:g}", alpha=alpha
    )


def maybe_update_prox(p, params, ev, nxt: Iterate, prox: ProxState):
    """Refresh the anchor when the anchor-free residuals are small enough.

    The tested residuals drop the proximal terms: the current iterate is
    accepted as the new anchor exactly when it would sit in its own
    neighbourhood.
    """
    shift = nxt.mu / params.mu0
    r_p = apply_A(p, nxt.X) - (p.rhs + shift * params.b_bar)
    r_d = (p.cost + shift * params.C_bar) - apply_Astar(p, nxt.y) - nxt.Z
    two = float(np.sqrt(np.sum(r_p**2) + np.sum(r_d**2)))
    if two > params.K_N * shift:
        return prox, False
    if ev.eval(r_p, r_d) > params.gamma_S * params.rho * shift:
        return prox, False
    return ProxState(Xi=nxt.X.copy(), lam=nxt.y.copy(), params=params), True


def pathology_check(
    prox_age: int, x, xi, y, lam, cfg: SolverConfig, stall_count: int = 0
) -> bool:
    """No-KKT-point heuristic: a stale anchor plus unbounded drift.

    Also fires when the line search has stalled for k_dagger consecutive
    iterations (an implementation extension, flagged in the report).
    """
    if stall_count >= cfg.k_dagger:
        return True
    if prox_age < cfg.k_dagger:
        return False
    drift = np.sqrt(
        np.sum((np.asarray(x) - np.asarray(xi)) ** 2)
        + np.sum((np.asarray(y) - np.asarray(lam)) ** 2)
    )
    return bool(drift > cfg.K_dagger)


def solve(p: SdpProblem, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the solver to optimality, iteration cap, or pathology detection.

    Termination declares optimality when all three unregularized residuals
    (primal, dual, and complementarity gap) fall below ``cfg.tol``.  The
    barrier parameter decreases Q-linearly by construction: every accepted
    step satisfies mu_next <= (1 - 0.01 alpha) mu, which is asserted.
    """
    cfg = cfg if cfg is not None else SolverConfig()
    cfg.validate()
    p.validate_rank()
    t0 = time.perf_counter()

    ev = seminorm.build(p)
    state, prox = starting_point(p, cfg)
    params = prox.params

    ok, reason, _ = check_membership(
        p, params, ev, state.X, state.y, state.Z, prox.Xi, prox.lam, state.mu
    )
    assert ok, f"starting point escaped its own neighbourhood ({reason})"

    trace: list[IterationRecord] = []
    status = MAX_ITERATIONS
    pathology_reason = None
    prox_age = 0
    stall_count = 0
    mu_prev = None

    for k in range(cfg.max_outer_iters):
        kkt = kkt_residuals(p, state.X, state.y, state.Z)
        if kkt.all_below(cfg.tol):
            status = OPTIMAL
            break

        ratio = state.mu / mu_prev if mu_prev else None
        sigma = choose_sigma(k, cfg, mu_ratio=ratio)
        rhs = newton.assemble_rhs(p, params, state, prox, sigma)
        if cfg.mode == "exact":
            direction = newton.solve_exact(p, state, rhs, dense_cap=cfg.dense_cap)
        else:
            direction = newton.solve_inexact(
                p, state, rhs, params, cfg.sigma_min, ev
            )

        # Diagnostics at the pre-step iterate: the centering trace identity
        # <Z,dX> + <X,dZ> = (sigma-1)<X,Z> and the scaled direction norms.
        lhs = linalg.frob_inner(state.Z, direction.dX) + linalg.frob_inner(
            state.X, direction.dZ
        )
        target = (sigma - 1.0) * state.mu * p.n
        identity_relerr = abs(lhs - target) / (1.0 + abs(target))
        assert identity_relerr <= 1e-8, (
            f"centering trace identity violated: relative error {identity_relerr:.3e}"
        )
        if p.n <= cfg.dense_cap:
            ctx = ScalingContext.from_z(state.Z)
            sdx, sdz = scaled_direction_norms(
                ctx, state.X, direction.dX, direction.dZ, dense_cap=cfg.dense_cap
            )
        else:
            sdx = sdz = float("nan")
        err_two = float(
            np.sqrt(np.sum(direction.err_p**2) + np.sum(direction.err_D**2))
        )
        err_semi = ev.eval(direction.err_p, direction.err_D)
        err_mu_rel = direction.err_mu_norm / (
            1.0 + float(np.linalg.norm(rhs.compl_rhs, "fro"))
        )

        mu_prev = state.mu
        try:
            alpha, nxt = line_search(p, params, ev, state, prox, direction, cfg)
            stall_count = 0
        except StepTooSmall:
            alpha, nxt = 0.0, state
            stall_count += 1

        assert nxt.mu <= (1.0 - 0.01 * alpha) * state.mu * (1.0 + 1e-14), (
            f"barrier decrease contract violated at iteration {k}"
        )
        state = nxt

        prox, updated = maybe_update_prox(p, params, ev, state, prox)
        prox_age = 0 if updated else prox_age + 1

        ok, reason, res = check_membership(
            p, params, ev, state.X, state.y, state.Z, prox.Xi, prox.lam, state.mu
        )
        assert ok, f"accepted iterate left the neighbourhood ({reason})"

        trace.append(
            IterationRecord(
                k=k,
                mu=state.mu,
                alpha=alpha,
                sigma=sigma,
                two_norm=res.two_norm,
                semi_norm=res.semi_norm,
                compl_dev=res.compl_dev,
                prox_updated=updated,
                krylov_iters=direction.krylov_iters,
                scaled_dx_norm=sdx,
                scaled_dz_norm=sdz,
                trace_identity_relerr=identity_relerr,
                membership_ok=ok,
                mu_pre=mu_prev,
                err_two_norm=err_two,
                err_semi_norm=err_semi,
                err_mu_rel=err_mu_rel,
            )
        )

        if pathology_check(
            prox_age, state.X, prox.Xi, state.y, prox.lam, cfg, stall_count
        ):
            status = PATHOLOGICAL
            pathology_reason = "stall" if stall_count >= cfg.k_dagger else "divergence"
            break

    kkt = kkt_residuals(p, state.X, state.y, state.Z)
    return SolveReport(
        status=status,
        iterate=state,
        trace=trace,
        wall_time=time.perf_counter() - t0,
        config=cfg,
        mu0=params.mu0,
        objective_primal=linalg.frob_inner(p.cost, state.X),
        objective_dual=float(p.rhs @ state.y),
        final_residuals=kkt,
        pathology_reason=pathology_reason,
        params=params,
    )
