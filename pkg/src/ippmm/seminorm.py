"""Joint infeasibility semi-norm of right-hand-side pairs (b, C).

``seminorm(b, C)`` is the smallest joint norm ``||(vec X, vec Z)||_2`` over
all (X, y, Z) reproducing the data through the constraint operators:
``A vec(X) = b`` and ``A' y + vec(Z) = vec(C)``.  The two blocks decouple:
the X part is the minimum-norm solution of ``A x = b`` and the Z part is the
least-squares residual of ``min_y ||vec(C) - A' y||``.  Data of the form
``C = A* y`` with ``b = 0`` therefore costs nothing, which is what makes
this a semi-norm rather than a norm.
"""

import math

import numpy as np
import scipy.linalg

from . import linalg
from .exceptions import DimensionMismatch
from .problem import SdpProblem

__all__ = ["SeminormEvaluator", "build"]

# Ranks and range-consistency are judged against the leading R diagonal.
_REL_TOL = 1e-10


class SeminormEvaluator:
    """Caches a pivoted QR of A' so repeated evaluations are O(m n^2)."""

    def __init__(self, p: SdpProblem):
        at = p.a_matrix.T  # n^2 x m
        q, r, perm = scipy.linalg.qr(at, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag[0] == 0.0:
            rank = 0
        else:
            rank = int(np.sum(diag > _REL_TOL * diag[0]))
        self.n = p.n
        self.m = p.m
        self.rank = rank
        self._q = q[:, :rank]
        self._r = r
        self._perm = perm

    def eval(self, rhs_b: np.ndarray, rhs_c: np.ndarray) -> float:
        """Semi-norm of the pair; ``inf`` when ``rhs_b`` is unreachable.

        The distinguished value ``math.inf`` reports rhs_b outside the range
        of a rank-deficient constraint operator.
        """
        rhs_b = np.asarray(rhs_b, dtype=float).reshape(-1)
        c_vec = linalg.vec(np.asarray(rhs_c, dtype=float))
        if rhs_b.size != self.m or c_vec.size != self.n**2:
            raise DimensionMismatch(
                f"rhs sizes ({rhs_b.size}, {c_vec.size}) do not match "
                f"evaluator built for (m={self.m}, n^2={self.n ** 2})"
            )
        r = self.rank

        # Minimum-norm x with A x = b lives in range(A') = range(Q_r):
        # writing x = Q_r t turns A x = b into R'[:, :r] t = b[perm].
        bp = rhs_b[self._perm]
        scale = float(np.linalg.norm(rhs_b))
        if r == 0:
            if scale > 0.0:
                return math.inf
            x_norm_sq = 0.0
        else:
            rt = self._r.T  # m x m, lower triangular
            t = scipy.linalg.solve_triangular(rt[:r, :r], bp[:r], lower=True)
            if r < self.m:
                tail = rt[r:, :r] @ t - bp[r:]
                if np.linalg.norm(tail) > _REL_TOL * max(1.0, scale):
                    return math.inf
            x_norm_sq = float(t @ t)

        # Z part: residual of projecting vec(C) onto range(A').
        proj = self._q @ (self._q.T @ c_vec)
        z_norm_sq = float(np.sum((c_vec - proj) ** 2))
        return math.sqrt(x_norm_sq + z_norm_sq)


def build(p: SdpProblem) -> SeminormEvaluator:
    """Factor the constraint operator once; rank deficiency is recorded."""
    return SeminormEvaluator(p)
