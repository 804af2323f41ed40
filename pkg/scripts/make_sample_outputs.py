#!/usr/bin/env python3
"""Regenerates the sample CSVs shipped under sample_outputs/.

These files are the fixed inputs for the plotting package and its tests:
boom and crash trajectories, a stationary heavy-tail price sample with its
tail fit, the matching analytic steady density, and the value-function curve.
"""

import argparse
from pathlib import Path

import numpy as np

from kineticmarket import analysis, ioutil
from kineticmarket.fokker_planck import DensityGrid, analytic_gamma_steady, pareto_mu
from kineticmarket.model import ModelParams, ValueFunctionSpec, value_function
from kineticmarket.montecarlo import McConfig, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="sample_outputs")
    args = ap.parse_args()
    outdir = Path(args.out)

    # boom and crash trajectories (pure speculators, biased initial opinions)
    spec_params = ModelParams(alpha1=0.3, alpha2=0.3, beta=1.0, sigma2=0.05,
                              zeta2=0.05, rho=1.0, rho_F=0.0)
    for label, (lo, hi) in (("boom", (0.0, 1.0)), ("crash", (-1.0, 0.0))):
        cfg = McConfig(n_agents=2000, n_prices=2000, dt=1.0, t_end=5.0,
                       seed=101, scale_eps=0.02, y_lo=lo, y_hi=hi)
        traj = run(spec_params, cfg)
        ioutil.write_trajectory_csv(outdir / f"trajectory_{label}.csv", traj)

    # stationary run with fundamentalists: heavy-tail price sample
    tail_params = ModelParams(alpha1=0.0, alpha2=0.0, beta=1.0, sigma2=0.02,
                              zeta2=0.2, a=0.2, b=0.5, gamma_F=0.6,
                              rho=0.5, rho_F=0.5, S_F=1.0)
    cfg = McConfig(n_agents=20_000, n_prices=100_000, dt=1.0, t_end=300.0,
                   seed=4, scale_eps=0.25, s0_mean=1.0, s0_sigma_log=0.3)
    traj = run(tail_params, cfg)
    mu = pareto_mu(tail_params.rho_F, tail_params.gamma_F, tail_params.zeta2)
    fit = analysis.hill_estimator(traj.final_s, k=500)
    ioutil.write_samples_csv(outdir / "final_prices.csv", traj.final_s)
    ioutil.write_report(outdir / "tail_fit.txt", {
        "mu_predicted": mu,
        "mu_hat": fit.mu_hat,
        "ci_half": fit.ci_half,
        "k": fit.k,
    })

    # histogram of the same sample plus the analytic steady curve it tracks
    s_edges = np.geomspace(1e-2, 1e2, 81)
    hist = analysis.histogram_density(traj.final_s, s_edges)
    ioutil.write_histogram_csv(outdir / "price_hist.csv", s_edges, hist)
    centers = np.sqrt(s_edges[:-1] * s_edges[1:])
    ioutil.write_grid_csv(outdir / "steady_analytic.csv",
                          DensityGrid(s_edges,
                                      analytic_gamma_steady(centers, mu, tail_params.S_F),
                                      "price"))

    # value-function curve sampled on a uniform trend grid
    spec = ValueFunctionSpec(R=0.0, L_gain=1.0, L_loss=2.0)
    x_edges = np.linspace(-1.5, 1.5, 301)
    x_mid = 0.5 * (x_edges[:-1] + x_edges[1:])
    ioutil.write_grid_csv(outdir / "value_function.csv",
                          DensityGrid(x_edges, value_function(x_mid, spec), "opinion"))

    print(f"mu_hat = {fit.mu_hat:.3f} +/- {fit.ci_half:.3f} (predicted {mu:g})")
    print(f"wrote {outdir}")


if __name__ == "__main__":
    main()
