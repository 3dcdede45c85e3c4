"""Dense symmetric-matrix kernel.

Storage convention: symmetric matrices are plain ``numpy.ndarray`` objects
that have been passed through :func:`symmetrize`, so exact symmetry
(``M[i, j] == M[j, i]``) can be relied on downstream.  Vectorization stacks
columns, making ``vec`` an isometry between the Frobenius and Euclidean
norms.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import (
    AsymmetricInput,
    ConvergenceFailure,
    DimensionMismatch,
    NonSquareLength,
    NotPositiveDefinite,
)

__all__ = [
    "symmetrize",
    "pd_floor",
    "vec",
    "mat",
    "sym_eig",
    "sqrt_pd",
    "invsqrt_pd",
    "is_pd",
    "frob_inner",
    "SpectralDecomposition",
]

# Reshaped vectors may carry asymmetry up to this absolute tolerance before
# they are rejected as corrupted.
MAT_ASYMMETRY_TOL = 1e-10


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthogonal, columns match eigenvalues


def symmetrize(m) -> np.ndarray:
    """Return (M + M^T)/2 as a float array; the canonical constructor."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def pd_floor(m: np.ndarray) -> float:
    """Numerical positive-definiteness threshold, scaled by the matrix size."""
    return 1e-13 * (1.0 + float(np.linalg.norm(m, "fro")))


def vec(m: np.ndarray) -> np.ndarray:
    """Stack the columns of ``m`` into a vector of length n^2."""
    m = np.asarray(m, dtype=float)
    return m.reshape(-1, order="F").copy()


def mat(v) -> np.ndarray:
    """Inverse of :func:`vec`, up to symmetrization of round-off drift.

    Raises
    ------
    NonSquareLength
        If ``len(v)`` is not a perfect square.
    AsymmetricInput
        If the reshaped matrix is asymmetric beyond ``MAT_ASYMMETRY_TOL``;
        genuine asymmetry here means a solver bug upstream.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise NonSquareLength(f"length {v.size} is not a perfect square")
    m = v.reshape(n, n, order="F")
    if np.max(np.abs(m - m.T)) > MAT_ASYMMETRY_TOL:
        raise AsymmetricInput(
            f"reshaped matrix asymmetric beyond {MAT_ASYMMETRY_TOL:g}"
        )
    return 0.5 * (m + m.T)


def sym_eig(m: np.ndarray) -> SpectralDecomposition:
    """Full spectral decomposition with ascending eigenvalues."""
    try:
        w, q = np.linalg.eigh(np.asarray(m, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SpectralDecomposition(w, q)


def _spectral_power(m: np.ndarray, power: float) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    w, q = sym_eig(m)
    floor = pd_floor(m)
    if w[0] <= floor:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[0]:.3e} below floor {floor:.3e}"
        )
    r = (q * w**power) @ q.T
    return 0.5 * (r + r.T)


def sqrt_pd(m: np.ndarray) -> np.ndarray:
    """Symmetric positive definite square root of a PD matrix."""
    return _spectral_power(m, 0.5)


def invsqrt_pd(m: np.ndarray) -> np.ndarray:
    """Symmetric positive definite inverse square root of a PD matrix."""
    return _spectral_power(m, -0.5)


def is_pd(m: np.ndarray) -> bool:
    """True iff ``m`` is positive definite with margin above the pivot floor.

    Implemented as a Cholesky factorization of the shifted matrix
    ``m - pd_floor(m) * I``, which succeeds exactly when every pivot of the
    symmetric factorization of ``m`` clears the floor.
    """
    m = np.asarray(m, dtype=float)
    shifted = m - pd_floor(m) * np.eye(m.shape[0])
    try:
        np.linalg.cholesky(shifted)
    except np.linalg.LinAlgError:
        return False
    return True


def frob_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Trace inner product Tr(AB) for symmetric A, B."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(np.sum(a * b))
