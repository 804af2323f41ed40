"""Statistical verification layer: tail-index estimation, lognormality
testing, macroscopic equilibrium classification, and L1 distances
between binned densities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from .model import ModelParams, value_function


class DisjointSupportError(ValueError):
    """The two grids cover non-overlapping domains."""


@dataclass
class TailFit:
    mu_hat: float
    k: int
    ci_half: float      # asymptotic 1.96 * mu_hat / sqrt(k)


def default_tail_count(n: int) -> int:
    """Bias-variance default for the Hill order-statistics count."""
    # nudge before flooring so perfect cubes (1000 -> 100) are not lost to
    # float round-off
    return int(math.floor(n ** (2.0 / 3.0) + 1e-9))


def hill_estimator(samples, k: int | None = None) -> TailFit:
    """Hill tail-index estimate from the top k order statistics:
    mu_hat = k / sum_i log(x_(n-i+1) / x_(n-k))."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if k is None:
        k = default_tail_count(n)
    if k < 20 or n <= k:
        raise ValueError("need sample size > k >= 20")
    if np.any(x <= 0):
        raise ValueError("samples must be positive")
    xs = np.sort(x)
    denom = float(np.sum(np.log(xs[n - k:] / xs[n - k - 1])))
    if denom <= 0:
        raise ValueError("degenerate tail: order statistics are all equal")
    mu_hat = k / denom
    return TailFit(mu_hat=mu_hat, k=k, ci_half=1.96 * mu_hat / math.sqrt(k))


@dataclass
class LognormalityReport:
    ks_stat: float
    p_value: float
    log_mean: float
    log_std: float


def lognormality_check(samples) -> LognormalityReport:
    """Kolmogorov-Smirnov test of log-samples against a fitted normal."""
    x = np.asarray(samples, dtype=float)
    if x.size < 1000:
        raise ValueError("need at least 1000 samples")
    if np.any(x <= 0):
        raise ValueError("samples must be positive")
    logs = np.log(x)
    m, sd = float(logs.mean()), float(logs.std(ddof=1))
    if sd == 0:
        raise ValueError("degenerate samples: zero variance")
    res = stats.kstest(logs, "norm", args=(m, sd))
    return LognormalityReport(float(res.statistic), float(res.pvalue), m, sd)


@dataclass
class EquilibriumReport:
    label: str                      # "i" | "ii" | "iii" | "none"
    rho_F: float
    S: float
    Y: float
    phi0: float
    residuals: dict = field(default_factory=dict)
    fixed_points: list = field(default_factory=list)


def crash_fixed_points(params: ModelParams) -> list[float]:
    """Roots of y = Phi(beta * t_C * y) on [-1, 1]."""

    def g(y):
        return y - float(value_function(params.beta * params.t_C * y,
                                        params.value_fn))

    ys = np.linspace(-1.0, 1.0, 4001)
    vals = np.array([g(y) for y in ys])
    roots = []
    for lo, hi, vlo, vhi in zip(ys[:-1], ys[1:], vals[:-1], vals[1:]):
        if vlo == 0.0:
            roots.append(float(lo))
        elif vlo * vhi < 0:
            roots.append(float(brentq(g, lo, hi)))
    if vals[-1] == 0.0:
        roots.append(1.0)
    # Deduplicate near-identical brackets.
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    return out


def classify_equilibrium(rho_F: float, S: float, Y: float,
                         params: ModelParams, tol_S: float = 1e-2,
                         tol_Y: float = 1e-2) -> EquilibriumReport:
    """Match a measured macroscopic state against the three equilibrium
    configurations: (i) both populations, S = S_F, Y = 0; (ii) chartists
    only, Y = 0, S arbitrary; (iii) chartists only, market crash, Y at a
    fixed point of y = Phi(beta t_C y).  (i) and (ii) additionally need a
    neutral reference point, Phi(0) = 0."""
    phi0 = float(value_function(0.0, params.value_fn))
    phi0_ok = abs(phi0) <= tol_Y
    has_F = rho_F > 0
    res: dict = {}

    res["i"] = {"S": abs(S - params.S_F) / params.S_F, "Y": abs(Y),
                "phi0": abs(phi0)}
    res["ii"] = {"Y": abs(Y), "phi0": abs(phi0)}
    fixed = crash_fixed_points(params)
    res["iii"] = {"S": abs(S) / params.S_F,
                  "Y": min((abs(Y - r) for r in fixed), default=math.inf)}

    label = "none"
    if has_F and phi0_ok and res["i"]["S"] <= tol_S and res["i"]["Y"] <= tol_Y:
        label = "i"
    elif not has_F and phi0_ok and res["ii"]["Y"] <= tol_Y:
        label = "ii"
    elif not has_F and res["iii"]["S"] <= tol_S and res["iii"]["Y"] <= tol_Y:
        label = "iii"
    return EquilibriumReport(label, rho_F, S, Y, phi0, res, fixed)


def l1_distance(edges_a, values_a, edges_b, values_b) -> float:
    """L1 distance between two piecewise-constant densities.

    Both are zero-extended over the union of their domains and compared
    on the merged partition, which is exact for step functions.  Raises
    if the domains do not overlap at all.
    """
    ea = np.asarray(edges_a, dtype=float)
    eb = np.asarray(edges_b, dtype=float)
    va = np.asarray(values_a, dtype=float)
    vb = np.asarray(values_b, dtype=float)
    if va.size != ea.size - 1 or vb.size != eb.size - 1:
        raise ValueError("values must have len(edges) - 1 entries")
    if ea[-1] <= eb[0] or eb[-1] <= ea[0]:
        raise DisjointSupportError("grids cover non-overlapping domains")
    edges = np.union1d(ea, eb)
    mids = 0.5 * (edges[:-1] + edges[1:])

    def sample(e, v, x):
        idx = np.searchsorted(e, x, side="right") - 1
        inside = (idx >= 0) & (idx < v.size) & (x >= e[0]) & (x <= e[-1])
        out = np.zeros_like(x)
        out[inside] = v[np.clip(idx, 0, v.size - 1)][inside]
        return out

    diff = np.abs(sample(ea, va, mids) - sample(eb, vb, mids))
    return float(diff @ np.diff(edges))


def rebin_density(edges, values, new_edges) -> np.ndarray:
    """Bin-average a piecewise-constant density onto new edges (exact
    mass redistribution, zero outside the source domain)."""
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    new_edges = np.asarray(new_edges, dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(values * np.diff(edges))))
    mass_at = np.interp(new_edges, edges, cum, left=0.0, right=cum[-1])
    return np.diff(mass_at) / np.diff(new_edges)


def histogram_density(samples, edges) -> np.ndarray:
    """Histogram of samples as a density on the given edges (normalized
    by the full sample count, so mass outside the edges is dropped)."""
    counts, _ = np.histogram(np.asarray(samples, dtype=float), bins=edges)
    return counts / (len(samples) * np.diff(edges))
