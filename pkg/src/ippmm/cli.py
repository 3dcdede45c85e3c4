"""Command-line front end: solve, generate, and check SDP instances.

Exit codes: 0 optimal (or check passed), 1 input/parameter error,
2 iteration limit, 3 pathological termination.
"""

import argparse
import dataclasses
import hashlib
import json
import sys

import numpy as np

from . import driver, problem
from .exceptions import IppmmError

STATUS_EXIT_CODES = {
    driver.OPTIMAL: 0,
    driver.MAX_ITERATIONS: 2,
    driver.PATHOLOGICAL: 3,
}


def _add_solver_flags(sub):
    sub.add_argument("--tol", type=float, default=1e-6, help="termination tolerance")
    sub.add_argument("--max-iter", type=int, default=300, help="outer iteration cap")
    sub.add_argument(
        "--mode", choices=("exact", "inexact"), default="exact",
        help="Newton backend",
    )
    sub.add_argument("--rho", type=float, default=2.0, help="starting-point scale")
    sub.add_argument("--sigma-min", type=float, default=0.05, help="centering lower bound")
    sub.add_argument("--sigma-max", type=float, default=0.45, help="centering upper bound")
    sub.add_argument(
        "--kn", type=float, default=None,
        help="neighbourhood 2-norm constant (default: scaled to the instance)",
    )
    sub.add_argument("--gamma-s", type=float, default=0.9, help="semi-norm fraction")
    sub.add_argument("--gamma-mu", type=float, default=0.3, help="complementarity fraction")
    sub.add_argument(
        "--k-dagger", type=int, default=40,
        help="iterations per proximal sub-problem before divergence is tested",
    )
    sub.add_argument(
        "--big-k-dagger", type=float, default=10.0,
        help="drift norm above which a stale anchor is declared pathological",
    )
    sub.add_argument("--dense-cap", type=int, default=64, help="dense backend size cap")
    sub.add_argument("--json-out", default=None, metavar="PATH", help="write a JSON run artifact")
    sub.add_argument("--seed", type=int, default=None, help="echoed into artifacts")
    sub.add_argument("--quiet", action="store_true", help="suppress console output")


def _config_from_args(args) -> driver.SolverConfig:
    return driver.SolverConfig(
        tol=args.tol,
        max_outer_iters=args.max_iter,
        mode=args.mode,
        rho=args.rho,
        sigma_min=args.sigma_min,
        sigma_max=args.sigma_max,
        K_N=args.kn,
        gamma_S=args.gamma_s,
        gamma_mu=args.gamma_mu,
        k_dagger=args.k_dagger,
        K_dagger=args.big_k_dagger,
        dense_cap=args.dense_cap,
        seed=args.seed,
    )


def _problem_digest(p: problem.SdpProblem) -> dict:
    data = problem.write_sdpa(p)
    nnz_cost = int(np.count_nonzero(p.cost))
    nnz_cons = int(sum(np.count_nonzero(a) for a in p.constraint_mats))
    return {
        "n": p.n,
        "m": p.m,
        "nnz_cost": nnz_cost,
        "nnz_constraints": nnz_cons,
        "sha256": hashlib.sha256(data).hexdigest(),
    }


def run_artifact(report: driver.SolveReport, p: problem.SdpProblem) -> dict:
    """Schema-stable JSON document for a finished solve."""
    return {
        "status": report.status,
        "iterations": report.iterations,
        "objective_primal": report.objective_primal,
        "objective_dual": report.objective_dual,
        "final_residuals": {
            "primal": report.final_residuals.primal_res,
            "dual": report.final_residuals.dual_res,
            "gap": report.final_residuals.gap,
        },
        "trace": [
            {
                "k": rec.k,
                "mu": rec.mu,
                "alpha": rec.alpha,
                "sigma": rec.sigma,
                "two_norm": rec.two_norm,
                "semi_norm": rec.semi_norm,
                "compl_dev": rec.compl_dev,
                "prox_updated": rec.prox_updated,
                "krylov_iters": rec.krylov_iters,
            }
            for rec in report.trace
        ],
        "config_echo": dataclasses.asdict(report.config),
        "problem_digest": _problem_digest(p),
    }


def cmd_solve(args) -> int:
    try:
        with open(args.path, "rb") as fh:
            p = problem.parse_sdpa(fh.read())
        cfg = _config_from_args(args)
        cfg.validate()
    except (OSError, IppmmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = driver.solve(p, cfg)

    if args.json_out:
        try:
            with open(args.json_out, "w") as fh:
                json.dump(run_artifact(report, p), fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    if not args.quiet:
        res = report.final_residuals
        print(f"status            {report.status}")
        print(f"iterations        {report.iterations}")
        print(f"objective <C,X>   {report.objective_primal:.12g}")
        print(f"objective b'y     {report.objective_dual:.12g}")
        print(f"primal residual   {res.primal_res:.6e}")
        print(f"dual residual     {res.dual_res:.6e}")
        print(f"gap <X,Z>/n       {res.gap:.6e}")
        if report.pathology_reason:
            print(f"pathology reason  {report.pathology_reason}")
    return STATUS_EXIT_CODES[report.status]


def _solution_document(x, y, z, value=None) -> dict:
    doc = {
        "X": np.asarray(x).tolist(),
        "y": np.asarray(y).reshape(-1).tolist(),
        "Z": np.asarray(z).tolist(),
    }
    if value is not None:
        doc["value"] = float(value)
    return doc


def cmd_generate(args) -> int:
    try:
        if args.kind == "feasible":
            if args.m is None or args.rank is None:
                raise ValueError("feasible generation needs --m and --rank")
            p, (x, y, z) = problem.gen_feasible(
                args.n, args.m, args.rank, seed=args.seed if args.seed is not None else 0
            )
        else:
            p = problem.gen_infeasible_trace(args.n)
    except (ValueError, IppmmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        with open(args.out, "wb") as fh:
            fh.write(problem.write_sdpa(p))
        if args.kind == "feasible":
            sidecar = args.out + ".solution.json"
            with open(sidecar, "w") as fh:
                json.dump(_solution_document(x, y, z), fh, indent=2)
                fh.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if not args.quiet:
        print(f"wrote {args.out} (n={p.n}, m={p.m})")
        if args.kind == "feasible":
            print(f"wrote {sidecar}")
    return 0


def cmd_check(args) -> int:
    try:
        with open(args.path, "rb") as fh:
            p = problem.parse_sdpa(fh.read())
        with open(args.solution) as fh:
            doc = json.load(fh)
        x = np.asarray(doc["X"], dtype=float)
        y = np.asarray(doc["y"], dtype=float)
        z = np.asarray(doc["Z"], dtype=float)
        if x.shape != (p.n, p.n) or z.shape != (p.n, p.n) or y.size != p.m:
            raise ValueError(
                f"solution shapes {x.shape}/{y.shape}/{z.shape} do not match "
                f"instance (n={p.n}, m={p.m})"
            )
        res = problem.kkt_residuals(p, x, y, z)
    except (OSError, KeyError, ValueError, IppmmError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if not args.quiet:
        print(f"primal residual   {res.primal_res:.6e}")
        print(f"dual residual     {res.dual_res:.6e}")
        print(f"gap <X,Z>/n       {res.gap:.6e}")
    return 0 if res.all_below(args.tol) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ippmm",
        description="Regularized primal-dual interior point solver for SDP",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve_p = sub.add_parser("solve", help="solve an SDPA sparse instance")
    solve_p.add_argument("path", help="instance file (.dat-s)")
    _add_solver_flags(solve_p)
    solve_p.set_defaults(func=cmd_solve)

    gen_p = sub.add_parser("generate", help="write a test instance")
    gen_p.add_argument("kind", choices=("feasible", "infeasible"))
    gen_p.add_argument("--n", type=int, required=True, help="matrix dimension")
    gen_p.add_argument("--m", type=int, default=None, help="constraint count")
    gen_p.add_argument("--rank", type=int, default=None, help="rank of the planted X*")
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out", required=True, help="output SDPA path")
    gen_p.add_argument("--quiet", action="store_true")
    gen_p.set_defaults(func=cmd_generate)

    check_p = sub.add_parser("check", help="evaluate KKT residuals of a solution")
    check_p.add_argument("path", help="instance file (.dat-s)")
    check_p.add_argument("solution", help="solution JSON with X, y, Z")
    check_p.add_argument("--tol", type=float, default=1e-6)
    check_p.add_argument("--quiet", action="store_true")
    check_p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
