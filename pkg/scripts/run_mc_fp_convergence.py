#!/usr/bin/env python3
"""Quasi-invariant scaling study: distance between Monte Carlo histograms and
the deterministic solver's densities as the scaling parameter shrinks."""

import argparse
from pathlib import Path

import numpy as np

from kineticmarket import analysis, ioutil
from kineticmarket.fokker_planck import FpConfig, solve_coupled
from kineticmarket.model import ModelParams
from kineticmarket.montecarlo import McConfig, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/mc_fp_convergence")
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.5, 0.1, 0.02])
    args = ap.parse_args()

    params = ModelParams(alpha1=0.8, alpha2=0.0, beta=1.0, sigma2=0.3,
                         zeta2=0.2, gamma_F=1.0, rho=0.5, rho_F=0.5)
    fp_cfg = FpConfig(n_opinion_cells=200, n_price_cells=256, dt=2e-3,
                      t_end=1.0, s0_sigma_log=0.3)
    _, f_grid, v_grid, _ = solve_coupled(params, fp_cfg)

    y_edges = np.linspace(-1.0, 1.0, 41)
    s_edges = np.geomspace(1e-2, 1e2, 61)
    f_ref = analysis.rebin_density(f_grid.edges, f_grid.values / params.rho, y_edges)
    v_ref = analysis.rebin_density(v_grid.edges, v_grid.values, s_edges)

    outdir = Path(args.out)
    report: dict = {}
    for eps in args.eps:
        cfg = McConfig(n_agents=args.n, n_prices=args.n, dt=1.0, t_end=1.0,
                       seed=21, scale_eps=eps, s0_sigma_log=0.3)
        traj = run(params, cfg)
        f_mc = analysis.histogram_density(traj.final_y, y_edges)
        v_mc = analysis.histogram_density(traj.final_s, s_edges)
        d_f = analysis.l1_distance(y_edges, f_mc, y_edges, f_ref)
        d_v = analysis.l1_distance(s_edges, v_mc, s_edges, v_ref)
        report[f"l1_f_eps{eps:g}"] = d_f
        report[f"l1_v_eps{eps:g}"] = d_v
        ioutil.write_histogram_csv(outdir / f"hist_y_eps{eps:g}.csv", y_edges, f_mc)
        ioutil.write_histogram_csv(outdir / f"hist_s_eps{eps:g}.csv", s_edges, v_mc)
        print(f"eps={eps:g}: L1(opinion)={d_f:.5f}  L1(price)={d_v:.5f}")
    ioutil.write_grid_csv(outdir / "fp_f.csv", f_grid)
    ioutil.write_grid_csv(outdir / "fp_v.csv", v_grid)
    ioutil.write_report(outdir / "report.txt", report)
    print(f"wrote {outdir}")


if __name__ == "__main__":
    main()
