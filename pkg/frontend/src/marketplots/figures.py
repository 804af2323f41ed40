"""The four figure kinds rendered from simulator CSVs.

Every renderer is read-only on its inputs and deterministic: fixed styling,
fixed dpi, no timestamps in image metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csvio import read_grid, read_report, read_samples, read_trajectory

_SAVE_KW = dict(dpi=110, metadata={"Software": "marketplots"})


def fit_tail_exponent(samples: np.ndarray, quantile: float = 0.995,
                      n_points: int = 13) -> tuple[float, float, float]:
    """Least-squares Pareto exponent over the upper decade.

    Fits log of the empirical survival function against log price on a
    decade of points starting at the given quantile; the survival slope is
    -mu. Points backed by fewer than 5 samples are dropped. Returns
    (mu_fit, s_lo, s_hi).
    """
    s_lo = float(np.quantile(samples, quantile))
    pts = np.geomspace(s_lo, 10.0 * s_lo, n_points)
    ccdf = np.array([(samples > p).mean() for p in pts])
    mask = ccdf * samples.size >= 5
    if mask.sum() < 3:
        raise ValueError("too few tail samples for a slope fit")
    slope = np.polyfit(np.log(pts[mask]), np.log(ccdf[mask]), 1)[0]
    return -float(slope), s_lo, float(pts[mask][-1])


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def render_trajectory(inputs: list[str], out: str) -> dict:
    fig, ax = _new_axes("t", "S(t)")
    for path in inputs:
        traj = read_trajectory(path)
        ax.plot(traj["t"], traj["S"], lw=1.2, label=Path(path).stem)
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)
    return {"n_series": len(inputs)}


def render_density_overlay(inputs: list[str], out: str) -> dict:
    """First input: simulated histogram (steps). Remaining inputs: analytic
    or solver grids drawn as curves on the same axes."""
    fig, ax = _new_axes("s", "density")
    edges, dens = read_grid(inputs[0])
    centers = 0.5 * (edges[:-1] + edges[1:])
    ax.stairs(dens, edges, label=Path(inputs[0]).stem, color="C0")
    for i, path in enumerate(inputs[1:], start=1):
        g_edges, g_vals = read_grid(path)
        g_centers = 0.5 * (g_edges[:-1] + g_edges[1:])
        ax.plot(g_centers, g_vals, lw=1.4, color=f"C{i}", label=Path(path).stem)
    if edges[0] > 0:
        ax.set_xscale("log")
        ax.set_yscale("log")
        positive = dens > 0
        ax.set_ylim(bottom=max(dens[positive].min() * 0.5, 1e-12))
    ax.legend(fontsize=8)
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)
    return {"n_curves": len(inputs)}


def render_tail_loglog(inputs: list[str], out: str) -> dict:
    """Log-log density of a price sample with the fitted tail slope and, if a
    tail report is supplied as a second input, the predicted -(1+mu) line."""
    samples = read_samples(inputs[0])
    mu_ref = None
    if len(inputs) > 1:
        rep = read_report(inputs[1])
        for key in ("mu_predicted", "mu_hat", "mu"):
            if key in rep:
                mu_ref = float(rep[key])
                break

    mu_fit, s_lo, s_hi = fit_tail_exponent(samples)

    fig, ax = _new_axes("s", "density")
    edges = np.geomspace(samples.min() * 0.999, samples.max() * 1.001, 61)
    counts, _ = np.histogram(samples, edges)
    dens = counts / (samples.size * np.diff(edges))
    centers = np.sqrt(edges[:-1] * edges[1:])
    keep = counts > 0
    ax.loglog(centers[keep], dens[keep], "o", ms=3, label="sample density")

    anchor_idx = np.searchsorted(centers, s_lo)
    anchor_idx = min(max(anchor_idx, 0), keep.size - 1)
    anchor_s = centers[anchor_idx] if keep[anchor_idx] else s_lo
    anchor_d = np.interp(anchor_s, centers[keep], dens[keep])
    line_s = np.geomspace(s_lo, s_hi, 50)
    ax.loglog(line_s, anchor_d * (line_s / anchor_s) ** (-(1.0 + mu_fit)),
              "-", color="C1", label=f"fit slope {-(1.0 + mu_fit):.2f}")
    if mu_ref is not None:
        ax.loglog(line_s, anchor_d * (line_s / anchor_s) ** (-(1.0 + mu_ref)),
                  "--", color="C2", label=f"reference slope {-(1.0 + mu_ref):.2f}")
    ax.legend(fontsize=8)
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)
    return {"mu_fit": mu_fit, "slope_fit": -(1.0 + mu_fit), "mu_ref": mu_ref}


def render_value_function(inputs: list[str], out: str) -> dict:
    edges, values = read_grid(inputs[0])
    centers = 0.5 * (edges[:-1] + edges[1:])
    fig, ax = _new_axes("price trend", "reaction")
    ax.plot(centers, values, lw=1.5)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.axvline(0.0, color="k", lw=0.6)
    ax.set_ylim(-1.1, 1.1)
    fig.savefig(out, **_SAVE_KW)
    plt.close(fig)
    return {"n_points": centers.size}


FIGURE_KINDS = {
    "trajectory": render_trajectory,
    "density-overlay": render_density_overlay,
    "tail-loglog": render_tail_loglog,
    "value-function": render_value_function,
}


def render(kind: str, inputs: list[str], out: str) -> dict:
    if kind not in FIGURE_KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; "
                         f"choose from {sorted(FIGURE_KINDS)}")
    if not inputs:
        raise ValueError("at least one input file is required")
    return FIGURE_KINDS[kind](inputs, out)
