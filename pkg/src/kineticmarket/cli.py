"""Command line driver.

Subcommands:
    simulate-mc <config>   Monte Carlo run: trajectory, snapshots, samples
    solve-fp <config>      coupled Fokker-Planck run: trajectory, grids
    steady-state <config>  steady price density vs the analytic Gamma law
    analyze <dir>          tail fit, lognormality, equilibrium report
    verify                 run every acceptance criterion, print pass/fail

Exit codes: 0 success, 1 configuration/validation error (offending key
named), 2 runtime failure (market crash, non-convergence, failed
criterion) with reports still written.  One experiment writes one
self-describing directory: config copy, trajectory, snapshots, reports.
Environment: KINETICMARKET_OUT_ROOT sets the default output root,
KINETICMARKET_THREADS caps BLAS thread counts.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

if "KINETICMARKET_THREADS" in os.environ:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, os.environ["KINETICMARKET_THREADS"])

import numpy as np

from . import acceptance, analysis, fokker_planck as fp, ioutil, montecarlo as mc
from .config import ExperimentConfig, load_config, save_config
from .model import ParameterError


def _out_dir(args, cfg_name: str) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get("KINETICMARKET_OUT_ROOT", "."))
    return root / cfg_name


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.mc = dataclasses.replace(cfg.mc, seed=args.seed)
    return cfg


def cmd_simulate_mc(args) -> int:
    cfg = _load(args)
    outdir = _out_dir(args, cfg.name)
    outdir.mkdir(parents=True, exist_ok=True)
    save_config(outdir / "config.cfg", cfg)
    traj = mc.run(cfg.params, cfg.mc)
    ioutil.write_trajectory_csv(outdir / "trajectory.csv", traj)
    ioutil.write_snapshots(outdir, traj.snapshots)
    ioutil.write_samples_csv(outdir / "final_opinions.csv", traj.final_y)
    ioutil.write_samples_csv(outdir / "final_prices.csv", traj.final_s)
    ioutil.write_report(outdir / "report.txt", {
        "status": traj.status,
        "t_final": float(traj.t[-1]),
        "S_final": float(traj.S[-1]),
        "Y_final": float(traj.Y[-1]),
        "E_final": float(traj.E[-1]),
    })
    if traj.status == "crash":
        print(f"market crash at t={traj.t[-1]:g}; reports written to {outdir}",
              file=sys.stderr)
        return 2
    print(f"wrote {outdir}")
    return 0


def cmd_solve_fp(args) -> int:
    cfg = _load(args)
    outdir = _out_dir(args, cfg.name)
    outdir.mkdir(parents=True, exist_ok=True)
    save_config(outdir / "config.cfg", cfg)
    rows, f_grid, v_grid, snaps = fp.solve_coupled(cfg.params, cfg.fp)
    traj = mc.Trajectory(t=rows[:, 0], S=rows[:, 1], Y=rows[:, 2], E=rows[:, 3],
                         acc_op=np.ones(len(rows)), acc_pr=np.ones(len(rows)))
    ioutil.write_trajectory_csv(outdir / "trajectory.csv", traj)
    ioutil.write_grid_csv(outdir / "final_f.csv", f_grid)
    ioutil.write_grid_csv(outdir / "final_v.csv", v_grid)
    for idx, (t, fg, vg) in enumerate(snaps):
        ioutil.write_grid_csv(outdir / f"grid_f_{idx:04d}.csv", fg)
        ioutil.write_grid_csv(outdir / f"grid_v_{idx:04d}.csv", vg)
    ioutil.write_report(outdir / "report.txt", {
        "status": "ok",
        "mass_f": f_grid.mass(),
        "mass_v": v_grid.mass(),
        "S_final": float(rows[-1, 1]),
        "Y_final": float(rows[-1, 2]),
    })
    print(f"wrote {outdir}")
    return 0


def cmd_steady_state(args) -> int:
    cfg = _load(args)
    outdir = _out_dir(args, cfg.name)
    outdir.mkdir(parents=True, exist_ok=True)
    save_config(outdir / "config.cfg", cfg)
    p = cfg.params
    try:
        report = fp.solve_steady(p, n_cells=cfg.fp.n_price_cells,
                                 tol=cfg.fp.steady_tol,
                                 s_min=p.S_F * cfg.fp.s_min_factor,
                                 s_max=p.S_F * cfg.fp.s_max_factor,
                                 max_steps=cfg.fp.max_steps)
        status = 0
    except fp.ConvergenceError as exc:
        report = exc.report
        status = 2
        print(str(exc), file=sys.stderr)
    grid = report.grid
    mu = fp.pareto_mu(p.rho_F, p.gamma_F, p.zeta2)
    exact = fp.analytic_gamma_steady(grid.centers, mu, p.S_F)
    l1 = analysis.l1_distance(grid.edges, grid.values, grid.edges, exact)
    ioutil.write_grid_csv(outdir / "steady_v.csv", grid)
    ioutil.write_report(outdir / "report.txt", {
        "status": "ok" if report.converged else "no-convergence",
        "mu": mu,
        "rel_l1_vs_analytic": l1,
        "mean": grid.mean(),
        "mass_drift": report.mass_drift,
        "steps": report.n_steps,
        "residual": report.residual,
    })
    if status == 0:
        print(f"wrote {outdir}")
    return status


def cmd_analyze(args) -> int:
    indir = Path(args.dir)
    outdir = Path(args.out) if args.out else indir
    outdir.mkdir(parents=True, exist_ok=True)
    prices = ioutil.read_samples_csv(indir / "final_prices.csv")
    traj = ioutil.read_trajectory_csv(indir / "trajectory.csv")
    cfg = load_config(indir / "config.cfg")

    entries: dict = {}
    k0 = analysis.default_tail_count(prices.size)
    for label, k in (("half_k", k0 // 2), ("k", k0), ("double_k", min(2 * k0, prices.size - 1))):
        try:
            fit = analysis.hill_estimator(prices, k)
            entries[f"hill_mu_{label}"] = fit.mu_hat
            entries[f"hill_ci_{label}"] = fit.ci_half
            entries[f"hill_count_{label}"] = fit.k
        except ValueError as exc:
            entries[f"hill_mu_{label}"] = f"error: {exc}"
    try:
        ln = analysis.lognormality_check(prices)
        entries["ks_stat"] = ln.ks_stat
        entries["ks_p_value"] = ln.p_value
    except ValueError as exc:
        entries["ks_stat"] = f"error: {exc}"
    eq = analysis.classify_equilibrium(cfg.params.rho_F, float(traj.S[-1]),
                                       float(traj.Y[-1]), cfg.params)
    entries["equilibrium_label"] = eq.label
    entries["S_final"] = float(traj.S[-1])
    entries["Y_final"] = float(traj.Y[-1])
    entries["phi0"] = eq.phi0
    ioutil.write_report(outdir / "analysis.txt", entries)
    print(f"wrote {outdir / 'analysis.txt'}")
    return 0


def cmd_verify(args) -> int:
    results = acceptance.run_all()
    return 0 if all(r.passed for r in results) else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kineticmarket",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("simulate-mc", cmd_simulate_mc),
                     ("solve-fp", cmd_solve_fp),
                     ("steady-state", cmd_steady_state)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(fn=fn)

    p = sub.add_parser("analyze")
    p.add_argument("dir")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("verify")
    p.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (mc.DegeneratePriceError, fp.ConvergenceError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
