"""Regularized residuals and membership in the shrinking iterate corridor.

The corridor is parametrized by the proximal estimates (Xi, lambda) and the
barrier parameter mu.  An iterate belongs to it when both matrices are
positive definite, the proximally regularized residuals are small in the
2-norm and in the constraint semi-norm (both thresholds proportional to
mu/mu0), and the symmetrized complementarity stays within gamma_mu * mu of
the identity ray.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg, scaling
from .problem import SdpProblem, apply_A, apply_Astar
from .seminorm import SeminormEvaluator

__all__ = [
    "RegResiduals",
    "NeighbourhoodParams",
    "reg_residuals",
    "in_neighbourhood",
    "check_membership",
]

# Failure reasons reported by in_neighbourhood, in check order.
NOT_PD_X = "NotPD_X"
NOT_PD_Z = "NotPD_Z"
TWO_NORM = "TwoNorm"
SEMI_NORM = "SemiNorm"
COMPLEMENTARITY = "Complementarity"


@dataclass
class NeighbourhoodParams:
    """Corridor constants plus the reference infeasibility of the start."""

    K_N: float
    gamma_S: float
    gamma_mu: float
    rho: float
    mu0: float
    b_bar: np.ndarray
    C_bar: np.ndarray

    def __post_init__(self):
        if not self.K_N > 0:
            raise ValueError(f"K_N must be positive, got {self.K_N}")
        if not 0 < self.gamma_S < 1:
            raise ValueError(f"gamma_S must lie in (0,1), got {self.gamma_S}")
        if not 0 < self.gamma_mu < 1:
            raise ValueError(f"gamma_mu must lie in (0,1), got {self.gamma_mu}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.mu0 > 0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")


@dataclass
class RegResiduals:
    r_p: np.ndarray
    R_d: np.ndarray
    two_norm: float
    semi_norm: float
    compl_dev: float


def reg_residuals(
    p: SdpProblem,
    params: NeighbourhoodParams,
    ev: SeminormEvaluator,
    x, y, z, xi, lam, mu: float,
) -> RegResiduals:
    """Proximally regularized residuals at (X, y, Z) for barrier value mu.

    The returned pair equals (mu/mu0) times the scaled infeasibilities the
    corridor bounds, so membership thresholds are ``K_N * mu/mu0`` and
    ``gamma_S * rho * mu/mu0``.  Requires Z positive definite (the
    complementarity deviation needs Z^{1/2}).
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    xi = np.asarray(xi, dtype=float)
    shift = mu / params.mu0

    r_p = apply_A(p, x) + mu * (y - lam) - p.rhs - shift * params.b_bar
    R_d = (
        apply_Astar(p, y) + z - mu * (x - xi) - p.cost - shift * params.C_bar
    )
    two_norm = float(np.sqrt(np.sum(r_p**2) + np.sum(R_d**2)))
    semi_norm = ev.eval(r_p, R_d)

    ctx = scaling.ScalingContext.from_z(z)
    compl_dev = float(
        np.linalg.norm(scaling.apply_E(ctx, x) - mu * np.eye(p.n), "fro")
    )
    return RegResiduals(r_p, R_d, two_norm, semi_norm, compl_dev)


def in_neighbourhood(
    res: RegResiduals,
    params: NeighbourhoodParams,
    x,
    z,
    mu: float,
):
    """Membership test; returns (ok, reason) with reason None on success."""
    if not linalg.is_pd(np.asarray(x, dtype=float)):
        return False, NOT_PD_X
    if not linalg.is_pd(np.asarray(z, dtype=float)):
        return False, NOT_PD_Z
    shift = mu / params.mu0
    if res.two_norm > params.K_N * shift:
        return False, TWO_NORM
    if res.semi_norm > params.gamma_S * params.rho * shift:
        return False, SEMI_NORM
    if res.compl_dev > params.gamma_mu * mu:
        return False, COMPLEMENTARITY
    return True, None


def check_membership(
    p: SdpProblem,
    params: NeighbourhoodParams,
    ev: SeminormEvaluator,
    x, y, z, xi, lam, mu: float,
):
    """PD-safe composite: test positivity before forming any square roots.

    Returns ``(ok, reason, residuals)`` where residuals is None when the PD
    test already failed.
    """
    if not linalg.is_pd(np.asarray(x, dtype=float)):
        return False, NOT_PD_X, None
    if not linalg.is_pd(np.asarray(z, dtype=float)):
        return False, NOT_PD_Z, None
    res = reg_residuals(p, params, ev, x, y, z, xi, lam, mu)
    ok, reason = in_neighbourhood(res, params, x, z, mu)
    return ok, reason, res
