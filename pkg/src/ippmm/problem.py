"""SDP problem data model, SDPA sparse-format I/O, and instance generators.

A problem is the standard-form primal

    min  <C, X>   s.t.  <A_i, X> = b_i  (i = 1..m),  X PSD,

together with its dual ``max b'y  s.t.  sum_i y_i A_i + Z = C, Z PSD``.
"""

import io
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from . import linalg
from .exceptions import (
    DimensionMismatch,
    DuplicateEntry,
    IndexOutOfRange,
    RankDeficientDraw,
    SdpaSyntaxError,
)

__all__ = [
    "SdpProblem",
    "KktResiduals",
    "apply_A",
    "apply_Astar",
    "kkt_residuals",
    "parse_sdpa",
    "write_sdpa",
    "gen_feasible",
    "gen_infeasible_trace",
]

# Rank-revealing threshold relative to the largest R diagonal of the pivoted
# QR of the vectorized constraint matrix.
RANK_REL_TOL = 1e-10


class RankDeficiencyWarning(UserWarning):
    """Constraint operator is numerically rank deficient."""


@dataclass
class SdpProblem:
    """Constraint matrices ``A_i``, right-hand side ``b``, and cost ``C``."""

    constraint_mats: list
    rhs: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        self.constraint_mats = [linalg.symmetrize(a) for a in self.constraint_mats]
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.cost = linalg.symmetrize(self.cost)
        if not self.constraint_mats:
            raise DimensionMismatch("need at least one constraint matrix")
        n = self.cost.shape[0]
        for i, a in enumerate(self.constraint_mats):
            if a.shape != (n, n):
                raise DimensionMismatch(
                    f"constraint matrix {i} has shape {a.shape}, expected {(n, n)}"
                )
        if self.rhs.size != len(self.constraint_mats):
            raise DimensionMismatch(
                f"rhs length {self.rhs.size} != {len(self.constraint_mats)} constraints"
            )

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    @property
    def m(self) -> int:
        return len(self.constraint_mats)

    @cached_property
    def a_matrix(self) -> np.ndarray:
        """Dense m x n^2 matrix whose rows are vec(A_i)."""
        return np.vstack([linalg.vec(a) for a in self.constraint_mats])

    @cached_property
    def constraint_rank(self) -> int:
        """Numerical rank of the vectorized constraint operator."""
        r = scipy.linalg.qr(self.a_matrix.T, mode="r", pivoting=True)[0]
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag[0] == 0.0:
            return 0
        return int(np.sum(diag > RANK_REL_TOL * diag[0]))

    def validate_rank(self) -> bool:
        """Warn (never fail) when the constraints are linearly dependent."""
        ok = self.constraint_rank == self.m
        if not ok:
            warnings.warn(
                f"constraint operator rank {self.constraint_rank} < m = {self.m}; "
                "the solver may still make progress but duals are not unique",
                RankDeficiencyWarning,
                stacklevel=2,
            )
        return ok


@dataclass
class KktResiduals:
    primal_res: float
    dual_res: float
    gap: float

    def all_below(self, tol: float) -> bool:
        return self.primal_res < tol and self.dual_res < tol and self.gap < tol


def apply_A(p: SdpProblem, x: np.ndarray) -> np.ndarray:
    """Constraint operator: component i is <A_i, X>."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n, p.n):
        raise DimensionMismatch(f"X has shape {x.shape}, expected {(p.n, p.n)}")
    return np.array([linalg.frob_inner(a, x) for a in p.constraint_mats])


def apply_Astar(p: SdpProblem, y: np.ndarray) -> np.ndarray:
    """Adjoint operator: sum_i y_i A_i."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != p.m:
        raise DimensionMismatch(f"y has length {y.size}, expected {p.m}")
    out = np.zeros((p.n, p.n))
    for yi, a in zip(y, p.constraint_mats):
        out += yi * a
    return out


def kkt_residuals(p: SdpProblem, x, y, z) -> KktResiduals:
    """Residuals of the unregularized optimality system at (X, y, Z)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    primal = float(np.linalg.norm(apply_A(p, x) - p.rhs))
    dual = float(np.linalg.norm(p.cost - apply_Astar(p, y) - z, "fro"))
    gap = linalg.frob_inner(x, z) / p.n
    return KktResiduals(primal, dual, gap)


# ---------------------------------------------------------------------------
# SDPA sparse format
#
# Layout: optional comment lines starting with " or *; then m; nblocks;
# nblocks block sizes (negative = diagonal block); m reals; then entry lines
# "k blk i j value" with k = 0 denoting the cost matrix and 1-based upper
# triangle indices (i <= j), mirrored on load.  Multi-block inputs are
# flattened into one block-diagonal matrix.
# ---------------------------------------------------------------------------


def _tokenize_sdpa(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    body = []
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not body and stripped[:1] in ('"', "*"):
            continue
        body.append((lineno, raw))
    return body


def _parse_int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise SdpaSyntaxError(lineno, f"expected integer {what}, got {tok!r}") from None


def _parse_float(tok, lineno, what):
    try:
        return float(tok)
    except ValueError:
        raise SdpaSyntaxError(lineno, f"expected number {what}, got {tok!r}") from None


def parse_sdpa(text) -> SdpProblem:
    """Parse SDPA sparse format (``.dat-s``) into an :class:`SdpProblem`.

    The cost block ``F_0`` maps to ``C``, block ``F_i`` maps to ``A_i``, and
    the objective vector maps to ``b``.  No sign flips are applied.
    """
    body = _tokenize_sdpa(text)
    cursor = 0

    def next_tokens(what):
        nonlocal cursor
        while cursor < len(body):
            lineno, raw = body[cursor]
            cursor += 1
            toks = raw.split()
            if toks:
                return lineno, toks
        last = body[-1][0] if body else 0
        raise SdpaSyntaxError(last, f"unexpected end of input, missing {what}")

    lineno, toks = next_tokens("constraint count")
    m = _parse_int(toks[0], lineno, "constraint count")
    if m < 1:
        raise SdpaSyntaxError(lineno, f"constraint count must be >= 1, got {m}")

    lineno, toks = next_tokens("block count")
    nblocks = _parse_int(toks[0], lineno, "block count")
    if nblocks < 1:
        raise SdpaSyntaxError(lineno, f"block count must be >= 1, got {nblocks}")

    lineno, toks = next_tokens("block sizes")
    cleaned = [t.strip("{}(),") for t in toks]
    cleaned = [t for t in cleaned if t]
    if len(cleaned) != nblocks:
        raise SdpaSyntaxError(
            lineno, f"expected {nblocks} block sizes, got {len(cleaned)}"
        )
    sizes = [_parse_int(t, lineno, "block size") for t in cleaned]
    if any(s == 0 for s in sizes):
        raise SdpaSyntaxError(lineno, "block size 0 is not allowed")
    diag_block = [s < 0 for s in sizes]
    sizes = [abs(s) for s in sizes]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n = int(offsets[-1])

    b = []
    while len(b) < m:
        lineno, toks = next_tokens("right-hand side values")
        for t in toks:
            b.append(_parse_float(t.strip("{}(),"), lineno, "right-hand side"))
            if len(b) > m:
                raise SdpaSyntaxError(lineno, f"more than {m} right-hand side values")
    b = np.array(b)

    mats = [np.zeros((n, n)) for _ in range(m + 1)]
    seen = set()
    while cursor < len(body):
        lineno, raw = body[cursor]
        cursor += 1
        toks = raw.split()
        if not toks:
            continue
        if len(toks) != 5:
            raise SdpaSyntaxError(lineno, f"entry line needs 5 fields, got {len(toks)}")
        k = _parse_int(toks[0], lineno, "matrix index")
        blk = _parse_int(toks[1], lineno, "block index")
        i = _parse_int(toks[2], lineno, "row index")
        j = _parse_int(toks[3], lineno, "column index")
        value = _parse_float(toks[4], lineno, "entry value")
        if not 0 <= k <= m:
            raise IndexOutOfRange(f"line {lineno}: matrix index {k} outside 0..{m}")
        if not 1 <= blk <= nblocks:
            raise IndexOutOfRange(
                f"line {lineno}: block index {blk} outside 1..{nblocks}"
            )
        size = sizes[blk - 1]
        if not (1 <= i <= size and 1 <= j <= size):
            raise IndexOutOfRange(
                f"line {lineno}: entry ({i},{j}) outside block of size {size}"
            )
        if i > j:
            raise SdpaSyntaxError(lineno, "lower-triangle entry")
        if diag_block[blk - 1] and i != j:
            raise SdpaSyntaxError(lineno, "off-diagonal entry in a diagonal block")
        key = (k, blk, i, j)
        if key in seen:
            raise DuplicateEntry(f"line {lineno}: duplicate entry {key}")
        seen.add(key)
        gi = offsets[blk - 1] + i - 1
        gj = offsets[blk - 1] + j - 1
        mats[k][gi, gj] = value
        mats[k][gj, gi] = value

    return SdpProblem(constraint_mats=mats[1:], rhs=b, cost=mats[0])


def write_sdpa(p: SdpProblem) -> bytes:
    """Serialize as single-block SDPA sparse text; round-trips exactly.

    Entries use ``repr`` so the decimal form parses back to the identical
    float.  Zero entries are omitted, per the sparse format.
    """
    out = io.StringIO()
    out.write(f"{p.m}\n1\n{p.n}\n")
    out.write(" ".join(repr(float(v)) for v in p.rhs) + "\n")
    for k, matrix in enumerate([p.cost] + list(p.constraint_mats)):
        for i in range(p.n):
            for j in range(i, p.n):
                v = matrix[i, j]
                if v != 0.0:
                    out.write(f"{k} 1 {i + 1} {j + 1} {repr(float(v))}\n")
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Instance generators
# ---------------------------------------------------------------------------


def gen_feasible(n: int, m: int, rank_r: int, seed: int):
    """Random instance with a known strictly complementary KKT triple.

    Construction: an orthogonal basis splits R^n into a rank-``rank_r``
    block carrying ``X*`` and its complement carrying ``Z*`` (so X*Z* = 0);
    random symmetric constraints define ``b = A vec(X*)`` and
    ``C = A*y* + Z*``.

    Returns ``(problem, (X_star, y_star, Z_star))``.
    """
    if not 1 <= rank_r <= n - 1:
        raise ValueError(f"rank_r must satisfy 1 <= rank_r <= n-1, got {rank_r}")
    if m > n * (n + 1) // 2:
        raise ValueError(f"m = {m} exceeds dim(S^n) = {n * (n + 1) // 2}")
    rng = np.random.default_rng(seed)

    q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    x_eigs = np.concatenate([rng.uniform(0.5, 2.0, size=rank_r), np.zeros(n - rank_r)])
    z_eigs = np.concatenate([np.zeros(rank_r), rng.uniform(0.5, 2.0, size=n - rank_r)])
    x_star = linalg.symmetrize((q * x_eigs) @ q.T)
    z_star = linalg.symmetrize((q * z_eigs) @ q.T)

    for _ in range(10):
        mats = [linalg.symmetrize(rng.standard_normal((n, n))) for _ in range(m)]
        a_mat = np.vstack([linalg.vec(a) for a in mats])
        if np.linalg.matrix_rank(a_mat, tol=1e-8) == m:
            break
    else:
        raise RankDeficientDraw(f"no full-rank constraint draw after 10 tries (m={m})")

    y_star = rng.standard_normal(m)
    b = a_mat @ linalg.vec(x_star)
    cost = linalg.symmetrize(
        sum(yi * a for yi, a in zip(y_star, mats)) + z_star
    )
    problem = SdpProblem(constraint_mats=mats, rhs=b, cost=cost)
    return problem, (x_star, y_star, z_star)


def gen_infeasible_trace(n: int) -> SdpProblem:
    """Primal-infeasible instance: Tr(X) = -1 has no PSD solution."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    eye = np.eye(n)
    return SdpProblem(constraint_mats=[eye], rhs=np.array([-1.0]), cost=eye.copy())
