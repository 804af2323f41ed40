#!/usr/bin/env python3
"""Boom/crash dichotomy: runs the pure-speculator market from bullish and
bearish initial opinion pools across seeds and reports the fitted exponential
price trend per run."""

import argparse
from pathlib import Path

import numpy as np

from kineticmarket import ioutil
from kineticmarket.model import ModelParams
from kineticmarket.montecarlo import McConfig, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/boom_crash")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--t-end", type=float, default=5.0)
    args = ap.parse_args()

    params = ModelParams(alpha1=0.3, alpha2=0.3, beta=1.0, sigma2=0.05,
                         zeta2=0.05, rho=1.0, rho_F=0.0)
    outdir = Path(args.out)
    report: dict = {}
    for label, (lo, hi) in (("boom", (0.0, 1.0)), ("crash", (-1.0, 0.0))):
        slopes = []
        for seed in range(args.seeds):
            cfg = McConfig(n_agents=2000, n_prices=2000, dt=1.0,
                           t_end=args.t_end, seed=100 + seed, scale_eps=0.1,
                           y_lo=lo, y_hi=hi)
            traj = run(params, cfg)
            slope = np.polyfit(traj.t, np.log(np.maximum(traj.S, 1e-300)), 1)[0]
            slopes.append(slope)
            ioutil.write_trajectory_csv(outdir / f"{label}_seed{seed:02d}.csv", traj)
        report[f"{label}_mean_log_slope"] = float(np.mean(slopes))
        report[f"{label}_sign_hits"] = int(sum(
            np.sign(s) == (1 if label == "boom" else -1) for s in slopes))
        print(f"{label}: mean d(log S)/dt = {np.mean(slopes):+.4f}, "
              f"sign hits {report[f'{label}_sign_hits']}/{args.seeds}")
    ioutil.write_report(outdir / "report.txt", report)
    print(f"wrote {outdir}")


if __name__ == "__main__":
    main()
