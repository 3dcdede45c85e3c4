"""Exception types shared across the package."""


class IppmmError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(IppmmError):
    """Operands have incompatible dimensions."""


class NonSquareLength(IppmmError):
    """Vector length is not a perfect square, cannot reshape to a matrix."""


class AsymmetricInput(IppmmError):
    """Matrix data is asymmetric beyond tolerance; signals an upstream bug."""


class ConvergenceFailure(IppmmError):
    """Iterative eigensolver exceeded its sweep budget."""


class NotPositiveDefinite(IppmmError):
    """Matrix is not positive definite (smallest pivot below the floor)."""


class DimensionTooLarge(IppmmError):
    """Problem size exceeds the dense-backend cap."""


class SingularSystem(IppmmError):
    """Dense Newton system factorization failed; indicates corrupted data."""


class SingularOperator(IppmmError):
    """Linearized complementarity operator is singular (X or Z not PD)."""


class MaxKrylovIterations(IppmmError):
    """Iterative Newton solve exhausted its matrix-application budget.

    Carries the achieved residual tests so callers can report how far the
    solve got.
    """

    def __init__(self, message, two_norm_ok=None, semi_norm_ok=None):
        super().__init__(message)
        self.two_norm_ok = two_norm_ok
        self.semi_norm_ok = semi_norm_ok


class SdpaSyntaxError(IppmmError):
    """Malformed SDPA sparse input."""

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateEntry(IppmmError):
    """Same (matrix, block, i, j) entry appears twice in an SDPA file."""


class IndexOutOfRange(IppmmError):
    """SDPA entry indices exceed the declared block or constraint counts."""


class RankDeficientDraw(IppmmError):
    """Random instance generator failed to draw a full-rank constraint set."""


class InconsistentSystem(IppmmError):
    """Right-hand side outside the range of a rank-deficient operator."""


class StepTooSmall(IppmmError):
    """Backtracking line search fell below the minimum step length."""

    def __init__(self, message, alpha=None):
        super().__init__(message)
        self.alpha = alpha
