"""Command-line interface: solve / estimate / adapt single problems and run
full experiment configs."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .adapt import AdaptConfig, adaptive_stationary
from .dgspace import DofMap
from .estimate import error_norms, estimate_stationary
from .forms import solve_stationary
from .harness import ExperimentConfig, run_experiment, write_csv, compute_rates
from .mesh import build_structured, write_mesh_text, write_vtk
from .problems import lshape_case1, lshape_case2, sine_stationary

PROBLEMS = {
    "sgbhe-sine": (sine_stationary, "unit-square"),
    "lshape-case1": (lshape_case1, "l-shape"),
    "lshape-case2": (lshape_case2, "l-shape"),
}


def _add_common(p):
    p.add_argument("--degree", type=int, default=None, help="polynomial degree (1 or 2)")
    p.add_argument("--penalty", type=float, default=None, help="jump penalty constant")
    p.add_argument("--mu", type=float, default=None, help="maximum-marking fraction")
    p.add_argument("--tol", type=float, default=None, help="target global indicator")
    p.add_argument("--levels", type=str, default=None, help="comma-separated mesh levels")
    p.add_argument("--eta", type=float, default=None, help="memory coefficient")
    p.add_argument("--kernel-tau", type=float, default=None, help="power-kernel exponent")
    p.add_argument("--dt", type=float, default=None, help="time step")
    p.add_argument("--out-dir", type=str, default=None, help="output directory")
    p.add_argument("--dump-meshes", action="store_true", default=None)
    p.add_argument("--snapshot-every", type=int, default=None)


def _problem(args):
    if args.problem not in PROBLEMS:
        sys.exit(f"unknown problem {args.problem!r}; choose from {sorted(PROBLEMS)}")
    build, domain = PROBLEMS[args.problem]
    from .forms import ModelParams
    degree = args.degree or 1
    penalty = args.penalty or ModelParams.default_penalty(degree)
    params = ModelParams(penalty=penalty)
    return build(params), domain, degree, params


def _cmd_solve(args, estimate=False):
    prob, domain, degree, params = _problem(args)
    n = int((args.levels or "16").split(",")[0])
    mesh = build_structured(domain, n)
    dm = DofMap(mesh, degree)
    u, report, f_h = solve_stationary(dm, params, f=prob.f, g=prob.g)
    out_dir = args.out_dir or "results"
    os.makedirs(out_dir, exist_ok=True)
    cell_data = {"u_mean": u.cell_coeffs().mean(axis=1)}
    msg = f"solved {args.problem} on {domain} n={n} ({dm.n_dofs} dofs, " \
          f"{report.iterations} Newton iterations)"
    if prob.exact is not None:
        errs = error_norms(prob.exact, prob.exact_grad, u, params)
        msg += f"; dg error {errs['dg']:.4e}, l2 error {errs['l2']:.4e}"
    if estimate:
        est = estimate_stationary(u, prob.f, f_h, params, g=prob.g)
        cell_data["indicator"] = est.per_cell
        msg += f"; indicator {est.total:.4e}, data osc {est.data_oscillation:.4e}"
    path = os.path.join(out_dir, f"{args.problem}.vtk")
    write_vtk(path, mesh, cell_data=cell_data)
    write_mesh_text(os.path.join(out_dir, f"{args.problem}.mesh"), mesh)
    print(msg)
    print(f"wrote {path}")


def _cmd_adapt(args):
    prob, domain, degree, params = _problem(args)
    cfg = AdaptConfig(mu=args.mu or 0.5, tol=args.tol or 0.0,
                      max_refinements=25, max_dofs=60_000)
    levels = adaptive_stationary(prob, degree, cfg)
    out_dir = args.out_dir or "results"
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for lev in levels:
        rows.append({
            "series": "adaptive", "level": lev.level,
            "h_max": float(lev.mesh.h_cell.max()), "dofs": lev.dofs,
            "dg_error": lev.dg_error, "l2_error": lev.l2_error,
            "indicator": lev.estimate.total,
            "data_osc": lev.estimate.data_oscillation,
            "efficiency": (lev.estimate.total / lev.dg_error
                           if lev.dg_error else float("inf")),
            "rate": "",
        })
        if args.dump_meshes:
            write_vtk(os.path.join(out_dir, f"adapt_level{lev.level:02d}.vtk"),
                      lev.mesh, cell_data={"indicator": lev.estimate.per_cell})
    if rows[0]["dg_error"] is not None:
        compute_rates(rows, mode="dof")
    path = os.path.join(out_dir, f"adapt_{args.problem}.csv")
    write_csv(path, rows)
    print(f"{len(levels)} adaptive levels, final dofs {levels[-1].dofs}, "
          f"final indicator {levels[-1].estimate.total:.4e}")
    print(f"wrote {path}")


def _cmd_run(args):
    overrides = {
        "degree": args.degree, "penalty": args.penalty, "mu": args.mu,
        "tol": args.tol, "levels": args.levels, "eta": args.eta,
        "kernel_tau": args.kernel_tau, "dt": args.dt, "out_dir": args.out_dir,
        "dump_meshes": args.dump_meshes, "snapshot_every": args.snapshot_every,
    }
    configs = ExperimentConfig.from_file(args.config, overrides=overrides)
    for cfg in configs:
        rows = run_experiment(cfg)
        print(f"{cfg.experiment}: {len(rows)} rows -> "
              f"{os.path.join(cfg.out_dir, cfg.experiment + '.csv')}")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gbhdg",
        description="Adaptive DG solver for the generalized Burgers-Huxley "
                    "equation with weakly singular memory kernels")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a built-in problem once")
    p_solve.add_argument("--problem", default="sgbhe-sine")
    _add_common(p_solve)

    p_est = sub.add_parser("estimate", help="solve and export the estimator map")
    p_est.add_argument("--problem", default="sgbhe-sine")
    _add_common(p_est)

    p_adapt = sub.add_parser("adapt", help="run the adaptive loop on a problem")
    p_adapt.add_argument("--problem", default="lshape-case2")
    _add_common(p_adapt)

    p_run = sub.add_parser("run", help="run experiment config file(s)")
    p_run.add_argument("config")
    _add_common(p_run)

    args = parser.parse_args(argv)
    if args.command == "solve":
        _cmd_solve(args, estimate=False)
    elif args.command == "estimate":
        _cmd_solve(args, estimate=True)
    elif args.command == "adapt":
        _cmd_adapt(args)
    elif args.command == "run":
        _cmd_run(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
