"""Symmetrization operator and the linearized complementarity maps.

With the scaling matrix taken as ``P = Z^{1/2}``, the symmetrized
complementarity is ``H_P(XZ) = Z^{1/2} X Z^{1/2}``, and its linearization
splits into the congruence map ``E: M -> Z^{1/2} M Z^{1/2}`` (derivative in
X) and ``F: M -> H_P(X M)`` (derivative in Z).  Both are applied matrix-free
as congruences; their dense Kronecker forms exist only in tests and in the
diagnostic :func:`scaled_direction_norms` oracle.

The composite ``S = F E = (1/2)(V (x) I + I (x) V)`` with
``V = Z^{1/2} X Z^{1/2}`` is the Lyapunov operator of ``V``; every fractional
power of it diagonalizes in the eigenbasis of ``V``, which keeps all scaled
quantities O(n^3).
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .exceptions import DimensionMismatch, DimensionTooLarge, NotPositiveDefinite

__all__ = [
    "ScalingContext",
    "h_p",
    "apply_E",
    "apply_F",
    "complementarity_residual",
    "scaled_direction_norms",
    "lyapunov_eigenbasis",
    "lyapunov_power_apply",
]


@dataclass(frozen=True)
class ScalingContext:
    """Cached square-root factors of the current dual iterate Z."""

    z_half: np.ndarray
    z_halfinv: np.ndarray
    source_z: np.ndarray

    @classmethod
    def from_z(cls, z: np.ndarray) -> "ScalingContext":
        z = linalg.symmetrize(z)
        # One eigendecomposition serves both factors; raises if Z is not PD.
        w, q = linalg.sym_eig(z)
        floor = linalg.pd_floor(z)
        if w[0] <= floor:
            raise NotPositiveDefinite(
                f"Z has eigenvalue {w[0]:.3e} below floor {floor:.3e}"
            )
        half = linalg.symmetrize((q * np.sqrt(w)) @ q.T)
        halfinv = linalg.symmetrize((q / np.sqrt(w)) @ q.T)
        return cls(z_half=half, z_halfinv=halfinv, source_z=z)

    @property
    def n(self) -> int:
        return self.source_z.shape[0]


def _check_dim(ctx: ScalingContext, b: np.ndarray):
    if b.shape != (ctx.n, ctx.n):
        raise DimensionMismatch(f"operand shape {b.shape}, expected {(ctx.n, ctx.n)}")


def h_p(ctx: ScalingContext, b: np.ndarray) -> np.ndarray:
    """Symmetrization (1/2)(P B P^-1 + (P B P^-1)^T) with P = Z^{1/2}."""
    b = np.asarray(b, dtype=float)
    _check_dim(ctx, b)
    pbp = ctx.z_half @ b @ ctx.z_halfinv
    return 0.5 * (pbp + pbp.T)


def apply_E(ctx: ScalingContext, m: np.ndarray) -> np.ndarray:
    """Congruence Z^{1/2} M Z^{1/2}; the X-derivative of h_p(XZ)."""
    m = np.asarray(m, dtype=float)
    _check_dim(ctx, m)
    return linalg.symmetrize(ctx.z_half @ m @ ctx.z_half)


def apply_F(ctx: ScalingContext, x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """The Z-derivative of h_p(XZ): M -> h_p(X M)."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_dim(ctx, x)
    _check_dim(ctx, m)
    return h_p(ctx, x @ m)


def complementarity_residual(ctx: ScalingContext, x: np.ndarray, sigma_mu: float) -> np.ndarray:
    """Centering residual sigma*mu*I - Z^{1/2} X Z^{1/2}."""
    return sigma_mu * np.eye(ctx.n) - apply_E(ctx, x)


def lyapunov_eigenbasis(ctx: ScalingContext, x: np.ndarray):
    """Eigendecomposition of V = Z^{1/2} X Z^{1/2} (the basis of S = FE)."""
    v = apply_E(ctx, x)
    return linalg.sym_eig(v)


def lyapunov_power_apply(eigs, q, m: np.ndarray, power: float) -> np.ndarray:
    """Apply S^power to a matrix, S being the Lyapunov operator of V = Q diag(eigs) Q'.

    In the eigenbasis of V, S scales entry (i, j) by (eigs_i + eigs_j)/2, so
    any real power acts by Hadamard weights.  Requires V positive definite.
    """
    pair = 0.5 * (eigs[:, None] + eigs[None, :])
    g = q.T @ m @ q
    return q @ (pair**power * g) @ q.T


def scaled_direction_norms(
    ctx: ScalingContext,
    x: np.ndarray,
    dx: np.ndarray,
    dz: np.ndarray,
    dense_cap: int = 64,
):
    """Norms ||D^-T vec(dX)||_2 and ||D vec(dZ)||_2 of the scaled step.

    ``D = S^{1/2} E^{-1}`` with ``S = FE``; the two norms bound the
    complementarity growth of the step and are emitted in iteration traces.
    """
    if ctx.n > dense_cap:
        raise DimensionTooLarge(f"n = {ctx.n} above dense cap {dense_cap}")
    dx = np.asarray(dx, dtype=float)
    dz = np.asarray(dz, dtype=float)
    _check_dim(ctx, dx)
    _check_dim(ctx, dz)
    eigs, q = lyapunov_eigenbasis(ctx, x)
    # D^-T vec(dX) = S^{-1/2} E vec(dX);  D vec(dZ) = S^{1/2} E^-1 vec(dZ).
    e_dx = apply_E(ctx, dx)
    einv_dz = ctx.z_halfinv @ dz @ ctx.z_halfinv
    norm_dx = np.linalg.norm(lyapunov_power_apply(eigs, q, e_dx, -0.5), "fro")
    norm_dz = np.linalg.norm(lyapunov_power_apply(eigs, q, einv_dz, 0.5), "fro")
    return float(norm_dx), float(norm_dz)
