"""End-to-end verification checks wiring the simulators, solvers, and
statistics together.  Each check returns a CriterionResult; the CLI
`verify` subcommand and the acceptance test suite both run them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis, fokker_planck as fp, montecarlo as mc
from .model import ModelParams, ValueFunctionSpec, interact_opinions


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.detail.items())
        return f"[{status}] criterion {self.cid}: {self.name} ({info})"


def criterion_pareto_tail() -> CriterionResult:
    """Stationary price tail of the mixed-population market matches the
    predicted exponent mu = 4 within 15%."""
    params = ModelParams(alpha1=0.0, alpha2=0.0, beta=1.0, sigma2=0.02,
                         zeta2=0.2, a=0.2, b=0.5, gamma_F=0.6,
                         rho=0.5, rho_F=0.5, S_F=1.0)
    mu = fp.pareto_mu(params.rho_F, params.gamma_F, params.zeta2)
    cfg = mc.McConfig(n_agents=20_000, n_prices=100_000, dt=1.0, t_end=300.0,
                      seed=4, scale_eps=0.25, s0_mean=1.0, s0_sigma_log=0.3)
    traj = mc.run(params, cfg)
    # k below the n^(2/3) default: the Hill estimate of an inverse-Gamma
    # tail carries a downward theta/s bias at shallow thresholds.
    fit = analysis.hill_estimator(traj.final_s, k=500)
    passed = abs(fit.mu_hat - mu) <= 0.15 * mu
    return CriterionResult(1, "Pareto tail exponent", passed,
                           {"mu": mu, "mu_hat": fit.mu_hat, "k": fit.k,
                            "ci_half": fit.ci_half})


def criterion_gamma_steady() -> CriterionResult:
    """Steady-state solver reproduces the analytic inverse-Gamma law."""
    params = ModelParams(alpha2=0.0, beta=1.0, zeta2=0.2, gamma_F=0.4,
                         rho=0.5, rho_F=0.5, S_F=1.0)
    mu = fp.pareto_mu(params.rho_F, params.gamma_F, params.zeta2)  # = 3
    report = fp.solve_steady(params, n_cells=512)
    grid = report.grid
    exact = fp.analytic_gamma_steady(grid.centers, mu, params.S_F)
    l1 = analysis.l1_distance(grid.edges, grid.values, grid.edges, exact)
    mean_err = abs(grid.mean() - params.S_F) / params.S_F
    passed = l1 <= 2e-2 and mean_err <= 1e-2
    return CriterionResult(2, "Gamma steady state", passed,
                           {"rel_l1": l1, "mean_rel_err": mean_err,
                            "steps": report.n_steps,
                            "mass_drift": report.mass_drift})


def criterion_lognormal() -> CriterionResult:
    """Pure speculative regime: lognormal prices and exponential growth
    of the second moment at rate zeta2."""
    params = ModelParams(alpha1=0.5, alpha2=0.0, sigma2=0.1, zeta2=0.1,
                         beta=1.0, rho=1.0, rho_F=0.0)
    cfg = mc.McConfig(n_agents=10_000, n_prices=10_000, dt=1.0, t_end=1.0,
                      seed=3, scale_eps=0.02, s0_mean=1.0, s0_sigma_log=0.0)
    traj = mc.run(params, cfg)
    rep = analysis.lognormality_check(traj.final_s)
    growth = traj.E[-1] / traj.E[0]
    target = math.exp(params.zeta2 * 1.0)
    growth_err = abs(growth - target) / target
    passed = rep.p_value > 0.01 and growth_err <= 0.05
    return CriterionResult(3, "lognormal regime", passed,
                           {"ks_p": rep.p_value, "E_growth": growth,
                            "E_target": target, "growth_rel_err": growth_err})


def criterion_boom_crash() -> CriterionResult:
    """Sign of the fitted exponential price rate follows the sign of the
    initial mean propensity in >= 9 of 10 seeds each way."""
    params = ModelParams(alpha1=0.3, alpha2=0.3, sigma2=0.05, zeta2=0.05,
                         beta=1.0, rho=1.0, rho_F=0.0,
                         value_fn=ValueFunctionSpec(R=0.0, L_gain=1.0, L_loss=2.0))
    hits = {"boom": 0, "crash": 0}
    for direction, (lo, hi) in (("boom", (0.0, 1.0)), ("crash", (-1.0, 0.0))):
        for seed in range(10):
            cfg = mc.McConfig(n_agents=2000, n_prices=2000, dt=1.0, t_end=5.0,
                              seed=100 + seed, scale_eps=0.1,
                              y_lo=lo, y_hi=hi, s0_mean=1.0)
            traj = mc.run(params, cfg)
            s = np.maximum(traj.S, 1e-300)
            slope = np.polyfit(traj.t, np.log(s), 1)[0]
            want = 1.0 if direction == "boom" else -1.0
            if slope * want > 0:
                hits[direction] += 1
    passed = hits["boom"] >= 9 and hits["crash"] >= 9
    return CriterionResult(4, "boom/crash dichotomy", passed,
                           {"boom_hits": hits["boom"], "crash_hits": hits["crash"]})


def criterion_equilibrium() -> CriterionResult:
    """Classifier recognizes configurations (i)-(iii) and refuses (i)/(ii)
    when the value function is not neutral at zero trend."""
    neutral = ModelParams(value_fn=ValueFunctionSpec(R=0.0, L_gain=2.0, L_loss=2.0))
    biased = ModelParams(value_fn=ValueFunctionSpec(R=0.2, L_gain=2.0, L_loss=2.0))
    checks = {}
    checks["i"] = analysis.classify_equilibrium(0.5, neutral.S_F, 0.0, neutral).label == "i"
    checks["ii"] = analysis.classify_equilibrium(0.0, 100.0, 0.0, neutral).label == "ii"
    ystar = max(analysis.crash_fixed_points(neutral))
    checks["iii"] = analysis.classify_equilibrium(0.0, 0.0, ystar, neutral).label == "iii"
    checks["i_refused"] = analysis.classify_equilibrium(0.5, biased.S_F, 0.0, biased).label == "none"
    checks["ii_refused"] = analysis.classify_equilibrium(0.0, 100.0, 0.0, biased).label == "none"
    passed = all(checks.values())
    return CriterionResult(5, "equilibrium classification", passed, checks)


def criterion_conservation() -> CriterionResult:
    """Mass conservation of both solvers over 1e4 steps, MC closure, and
    exact pairwise sum conservation for constant herding, zero noise."""
    params = ModelParams(alpha1=0.6, alpha2=0.1, sigma2=0.1, zeta2=0.1,
                         gamma_F=0.5, rho=0.5, rho_F=0.5)
    f = fp.opinion_grid(64, params.rho)
    v = fp.price_grid(64, 1e-3, 1e3, density=fp.lognormal_init(1.0, 0.4))
    mf0, mv0 = f.mass(), v.mass()
    for _ in range(10_000):
        fp.fp_opinion_step(f, params, 0.1, 0.2, 1e-3)
        fp.fp_price_step(v, params, 0.05, 1e-3)
    drift_f = abs(f.mass() - mf0)
    drift_v = abs(v.mass() - mv0)
    pos_ok = f.values.min() >= 0 and v.values.min() >= 0

    traj = mc.run(params, mc.McConfig(n_agents=2000, n_prices=2000, dt=0.5,
                                      t_end=20.0, seed=5))
    closure_ok = (np.abs(traj.final_y).max() <= 1.0
                  and traj.final_s.min() >= 0.0 and traj.status == "ok")

    # Constant herding: b is forced > 0 by the invariants, so take it at
    # the float noise floor where the |y|-dependence is below 1e-16.
    const_h = ModelParams(alpha1=0.7, alpha2=0.0, a=0.5, b=5e-17, sigma2=0.0)
    rng = np.random.default_rng(7)
    ya, yb = rng.uniform(-1, 1, 10_000), rng.uniform(-1, 1, 10_000)
    na, nb, _ = interact_opinions(ya, yb, 0.0, 0.0, 0.0, const_h)
    rel = np.abs((na + nb) - (ya + yb)) / np.maximum(np.abs(ya + yb), 1.0)
    sum_ok = bool(rel.max() <= 1e-14)

    passed = (drift_f <= 1e-10 and drift_v <= 1e-10 and pos_ok
              and closure_ok and sum_ok)
    return CriterionResult(6, "conservation and closure", passed,
                           {"fp_mass_drift_f": drift_f, "fp_mass_drift_v": drift_v,
                            "mc_closure": closure_ok, "sum_conservation": sum_ok,
                            "max_rel_sum_err": float(rel.max())})


def _mc_fp_l1(eps: float, params: ModelParams, fp_f: fp.DensityGrid,
              fp_v: fp.DensityGrid, t_end: float, seed: int):
    cfg = mc.McConfig(n_agents=200_000, n_prices=200_000, dt=1.0, t_end=t_end,
                      seed=seed, scale_eps=eps, s0_mean=1.0, s0_sigma_log=0.3)
    traj = mc.run(params, cfg)
    y_edges = np.linspace(-1, 1, 41)
    y_density = params.rho * analysis.histogram_density(traj.final_y, y_edges)
    f_ref = analysis.rebin_density(fp_f.edges, fp_f.values, y_edges)
    l1_f = analysis.l1_distance(y_edges, y_density, y_edges, f_ref)
    s_edges = np.geomspace(1e-2, 1e2, 61)
    s_density = analysis.histogram_density(traj.final_s, s_edges)
    v_ref = analysis.rebin_density(fp_v.edges, fp_v.values, s_edges)
    l1_v = analysis.l1_distance(s_edges, s_density, s_edges, v_ref)
    return l1_f, l1_v


def criterion_mc_fp_consistency() -> CriterionResult:
    """MC histograms approach the Fokker-Planck solutions monotonically
    under the quasi-invariant scaling eps in {0.5, 0.1, 0.02}."""
    params = ModelParams(alpha1=0.8, alpha2=0.0, sigma2=0.3, zeta2=0.2,
                         beta=1.0, gamma_F=1.0, rho=0.5, rho_F=0.5, S_F=1.0)
    fcfg = fp.FpConfig(n_opinion_cells=200, n_price_cells=256, dt=2e-3,
                       t_end=1.0, s0_mean=1.0, s0_sigma_log=0.3)
    _, f_grid, v_grid, _ = fp.solve_coupled(params, fcfg)
    detail = {}
    dists_f, dists_v = [], []
    for eps in (0.5, 0.1, 0.02):
        l1_f, l1_v = _mc_fp_l1(eps, params, f_grid, v_grid, 1.0, seed=21)
        dists_f.append(l1_f)
        dists_v.append(l1_v)
        detail[f"l1_f_eps{eps}"] = l1_f
        detail[f"l1_v_eps{eps}"] = l1_v
    passed = (dists_f[0] > dists_f[1] > dists_f[2]
              and dists_v[0] > dists_v[1] > dists_v[2])
    return CriterionResult(7, "MC-FP quasi-invariant consistency", passed, detail)


def criterion_residual_order() -> CriterionResult:
    """The analytic lognormal substituted into the discrete price operator
    leaves a residual that vanishes at order >= 1.8 in the mesh."""
    params = ModelParams(alpha2=0.0, beta=1.0, zeta2=0.3, rho=1.0, rho_F=0.0)
    Y, t, S0 = 0.2, 0.5, 1.0
    E0 = S0 ** 2 * math.exp(0.3)
    residuals = []
    sizes = (128, 256, 512)
    for n in sizes:
        grid = fp.price_grid(n, math.exp(-5.0), math.exp(5.0),
                             density=lambda s: fp.analytic_lognormal(
                                 s, t, E0, S0, params, Y))
        grid.values = fp.analytic_lognormal(grid.centers, t, E0, S0, params, Y)
        lhs = fp.apply_price_operator(grid, params, Y)
        rhs = fp.analytic_lognormal_dt(grid.centers, t, E0, S0, params, Y)
        residuals.append(float(np.abs(lhs - rhs) @ grid.widths))
    orders = [math.log2(residuals[i] / residuals[i + 1]) for i in range(2)]
    passed = min(orders) >= 1.8
    return CriterionResult(8, "analytic residual convergence order", passed,
                           {"res_128": residuals[0], "res_256": residuals[1],
                            "res_512": residuals[2],
                            "order_128_256": orders[0],
                            "order_256_512": orders[1]})


ALL_CRITERIA = (
    criterion_pareto_tail,
    criterion_gamma_steady,
    criterion_lognormal,
    criterion_boom_crash,
    criterion_equilibrium,
    criterion_conservation,
    criterion_mc_fp_consistency,
    criterion_residual_order,
)


def run_all(printer=print) -> list[CriterionResult]:
    results = []
    for fn in ALL_CRITERIA:
        res = fn()
        results.append(res)
        if printer is not None:
            printer(res.line())
    return results
