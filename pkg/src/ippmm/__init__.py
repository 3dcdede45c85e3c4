"""Regularized primal-dual interior point solver for semidefinite programs.

The solver combines an infeasible interior point method with proximal
multiplier estimates: every Newton system carries primal-dual
regularization proportional to the barrier parameter, iterates are kept in
a shrinking residual corridor, and a divergence heuristic flags instances
without a KKT point.
"""

from .driver import (
    MAX_ITERATIONS,
    OPTIMAL,
    PATHOLOGICAL,
    Iterate,
    ProxState,
    SolveReport,
    SolverConfig,
    solve,
)
from .problem import (
    SdpProblem,
    gen_feasible,
    gen_infeasible_trace,
    kkt_residuals,
    parse_sdpa,
    write_sdpa,
)

__version__ = "0.1.0"

__all__ = [
    "SdpProblem",
    "SolverConfig",
    "SolveReport",
    "Iterate",
    "ProxState",
    "solve",
    "parse_sdpa",
    "write_sdpa",
    "gen_feasible",
    "gen_infeasible_trace",
    "kkt_residuals",
    "OPTIMAL",
    "MAX_ITERATIONS",
    "PATHOLOGICAL",
    "__version__",
]
