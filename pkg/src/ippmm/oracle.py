"""Independent reference solvers for test families with closed-form answers.

These deliberately share no code with the solver modules: the trace oracle
is a single eigendecomposition, and the diagonal oracle is an exhaustive
vertex enumeration of the induced linear program.  Agreement with the main
solver is therefore evidence, not tautology.
"""

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import IppmmError
from .problem import SdpProblem

__all__ = [
    "OracleSolution",
    "Infeasible",
    "Unbounded",
    "solve_trace_sdp",
    "solve_diagonal_sdp",
]


class Infeasible(IppmmError):
    """The oracle certified the instance primal infeasible."""


class Unbounded(IppmmError):
    """The oracle certified the instance unbounded below."""


@dataclass
class OracleSolution:
    X_star: np.ndarray
    y_star: np.ndarray
    Z_star: np.ndarray
    value: float
    provenance: str  # "analytic" | "brute_force"


def solve_trace_sdp(c) -> OracleSolution:
    """min <C, X> s.t. Tr X = 1, X PSD: the smallest-eigenvalue projector.

    The optimum is lambda_min(C), attained at X* = q q' for a corresponding
    unit eigenvector; y* = lambda_min and Z* = C - lambda_min I certify it.
    Eigenvalue ties just mean the chosen projector is one of many optima.
    """
    c = np.asarray(c, dtype=float)
    c = 0.5 * (c + c.T)
    w, q = np.linalg.eigh(c)
    lam_min = float(w[0])
    q0 = q[:, 0]
    x_star = np.outer(q0, q0)
    z_star = c - lam_min * np.eye(c.shape[0])
    return OracleSolution(
        X_star=x_star,
        y_star=np.array([lam_min]),
        Z_star=z_star,
        value=lam_min,
        provenance="analytic",
    )


def _independent_rows(m_rows: np.ndarray, b: np.ndarray, tol: float = 1e-9):
    """Keep an independent row subset after certifying b reachable at all."""
    x_ls, *_ = np.linalg.lstsq(m_rows, b, rcond=None)
    if np.linalg.norm(m_rows @ x_ls - b) > tol * max(1.0, float(np.linalg.norm(b))):
        raise Infeasible("right-hand side outside the range of the constraint rows")
    r_fac, perm = scipy.linalg.qr(m_rows.T, mode="r", pivoting=True)[:2]
    diag = np.abs(np.diag(r_fac))
    scale = diag.max(initial=0.0)
    rank = int(np.sum(diag > 1e-10 * scale)) if scale > 0 else 0
    keep = np.sort(perm[:rank])
    return m_rows[keep], b[keep]


def solve_diagonal_sdp(p: SdpProblem) -> OracleSolution:
    """Exhaustive vertex enumeration for all-diagonal instances.

    Diagonal data reduces the problem to the linear program
    ``min c.x  s.t.  M x = b, x >= 0`` over the diagonal of X.  Every basic
    feasible solution is enumerated (the feasible set is pointed, so a
    finite optimum sits at a vertex); simplex-style ray checks at each
    vertex certify unboundedness.
    """
    for a in p.constraint_mats:
        if np.max(np.abs(a - np.diag(np.diag(a)))) > 0:
            raise ValueError("diagonal oracle needs diagonal constraint matrices")
    if np.max(np.abs(p.cost - np.diag(np.diag(p.cost)))) > 0:
        raise ValueError("diagonal oracle needs a diagonal cost matrix")

    n = p.n
    full_rows = np.vstack([np.diag(a) for a in p.constraint_mats])
    c = np.diag(p.cost).copy()

    m_rows, b = _independent_rows(full_rows, p.rhs.copy())
    r = m_rows.shape[0]
    feas_tol = 1e-9

    if r == 0:
        if np.any(c < -feas_tol):
            raise Unbounded("free nonnegative direction with negative cost")
        return OracleSolution(
            X_star=np.zeros((n, n)),
            y_star=np.zeros(p.m),
            Z_star=np.diag(c),
            value=0.0,
            provenance="brute_force",
        )

    vertices = []  # (value, x, basis)
    for basis in itertools.combinations(range(n), r):
        mb = m_rows[:, basis]
        if abs(np.linalg.det(mb)) < 1e-12:
            continue
        xb = np.linalg.solve(mb, b)
        if np.min(xb) < -feas_tol:
            continue
        x = np.zeros(n)
        x[list(basis)] = np.maximum(xb, 0.0)
        value = float(c @ x)
        # Ray test: a nonbasic column whose basic update stays nonnegative
        # and whose reduced cost is negative spans an improving ray.
        y_basis = np.linalg.solve(mb.T, c[list(basis)])
        for j in range(n):
            if j in basis:
                continue
            d_b = np.linalg.solve(mb, -m_rows[:, j])
            if np.min(d_b) >= -1e-12 and c[j] - y_basis @ m_rows[:, j] < -1e-9:
                raise Unbounded(f"improving ray through nonbasic column {j}")
        vertices.append((value, x, basis))

    if not vertices:
        raise Infeasible("no basic feasible point in the enumeration")

    # Among optimal (possibly degenerate) bases, prefer one whose reduced
    # costs are nonnegative so the returned Z* is PSD.
    best_value = min(v[0] for v in vertices)
    ties = [v for v in vertices if v[0] <= best_value + 1e-9 * (1.0 + abs(best_value))]
    value, x, basis = ties[0]
    for cand_value, cand_x, cand_basis in ties:
        mb = m_rows[:, cand_basis]
        y_cand = np.linalg.solve(mb.T, c[list(cand_basis)])
        if np.min(c - m_rows.T @ y_cand) >= -1e-9:
            value, x, basis = cand_value, cand_x, cand_basis
            break

    mb = m_rows[:, basis]
    y_red = np.linalg.solve(mb.T, c[list(basis)])
    # Lift the multipliers from the independent rows back to all m rows.
    y_full, *_ = np.linalg.lstsq(full_rows.T, m_rows.T @ y_red, rcond=None)
    z = c - full_rows.T @ y_full
    return OracleSolution(
        X_star=np.diag(x),
        y_star=y_full,
        Z_star=np.diag(z),
        value=value,
        provenance="brute_force",
    )
