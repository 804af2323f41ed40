"""Deterministic finite-volume solvers for the two mean-field
drift-diffusion equations of the market model, plus the closed-form
reference solutions used as oracles.

Opinion density f(y, t) on [-1, 1]:
    df/dt + d/dy[(rho*a1*H(y)*(Y - y) + rho*a2*(Phi - y)) f]
        = (sigma2*rho/2) d2/dy2 [D(y)^2 f]
Price density V(s, t) on (0, inf):
    dV/dt + d/ds[beta*(rho*Y*s + rho_F*gamma_F*(S_F - s)) V]
        = (zeta2/2) d2/ds2 [s^2 V]

Both are discretized with an exponentially fitted (Chang-Cooper type)
conservative flux and stepped with implicit Euler, which is
unconditionally stable, preserves mass to rounding, and keeps cell
averages nonnegative.  The exponential fitting reproduces the
drift-diffusion balance exactly, so the inverse-Gamma steady state is
captured without spurious tail damping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import gammaln

from .model import ModelParams, herding


class ConvergenceError(RuntimeError):
    """Steady-state iteration did not reach tolerance in max_steps."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateVarianceError(ValueError):
    """Lognormal profile needs E > S^2 (log Z^2 > 0)."""


@dataclass
class DensityGrid:
    """Cell-averaged density on strictly increasing edges."""

    edges: np.ndarray
    values: np.ndarray
    kind: str = "price"   # "opinion" | "price"

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.edges.ndim != 1 or np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if self.values.size != self.edges.size - 1:
            raise ValueError("values must have len(edges) - 1 entries")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def mass(self) -> float:
        return float(self.values @ self.widths)

    def mean(self) -> float:
        return float((self.values * self.centers) @ self.widths) / self.mass()

    def moment(self, order: int) -> float:
        return float((self.values * self.centers ** order) @ self.widths)


def opinion_grid(n_cells: int, rho: float, lo: float = -1.0,
                 hi: float = 1.0) -> DensityGrid:
    """Uniform cells on [-1, 1] with rho mass spread uniformly on [lo, hi]."""
    edges = np.linspace(-1.0, 1.0, n_cells + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    values = np.where((centers >= lo) & (centers <= hi), rho / (hi - lo), 0.0)
    g = DensityGrid(edges, values, "opinion")
    g.values *= rho / g.mass()
    return g


def price_grid(n_cells: int, s_min: float, s_max: float,
               density=None) -> DensityGrid:
    """Log-spaced cells on [s_min, s_max]; density is a callable evaluated
    at cell centers (default: uniform in log s, normalized to unit mass)."""
    edges = np.geomspace(s_min, s_max, n_cells + 1)
    centers = np.sqrt(edges[:-1] * edges[1:])
    if density is None:
        values = 1.0 / centers
    else:
        values = np.asarray(density(centers), dtype=float)
    g = DensityGrid(edges, np.maximum(values, 0.0), "price")
    g.values /= g.mass()
    return g


def lognormal_init(s0_mean: float, sigma_log: float):
    """Lognormal density callable with the given mean and log-std."""
    if sigma_log <= 0:
        raise ValueError("sigma_log must be > 0 for a grid initial condition")
    m = math.log(s0_mean) - 0.5 * sigma_log ** 2
    return lambda s: np.exp(-(np.log(s) - m) ** 2 / (2 * sigma_log ** 2)) \
        / (s * sigma_log * math.sqrt(2 * math.pi))


def _cc_delta(w: np.ndarray) -> np.ndarray:
    """Chang-Cooper interface weight: delta = 1/w - 1/(e^w - 1)."""
    out = np.empty_like(w)
    small = np.abs(w) < 1e-8
    out[small] = 0.5 - w[small] / 12.0
    ws = w[~small]
    with np.errstate(over="ignore"):
        out[~small] = 1.0 / ws - 1.0 / np.expm1(ws)
    return out


def _flux_matrix(edges: np.ndarray, centers: np.ndarray,
                 A_edge: np.ndarray, C_edge: np.ndarray,
                 Cp_edge: np.ndarray):
    """Tridiagonal generator M with du/dt = M u for the flux form
    du/dt = d/dx[C u' + (C' - A) u], zero flux at both domain edges.

    A_edge, C_edge, Cp_edge are drift, diffusion C and dC/dx evaluated at
    the n-1 interior edges.  Returns (lower, diag, upper) bands.
    """
    n = centers.size
    dg = np.diff(centers)                       # center-to-center distances
    B = Cp_edge - A_edge
    ceff = np.where(C_edge > 0, C_edge / dg, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(C_edge > 0, B * dg / np.where(C_edge > 0, C_edge, 1.0), 0.0)
    delta = _cc_delta(w)
    # Pure-drift interfaces fall back to upwinding.
    drift_only = C_edge <= 0
    delta = np.where(drift_only, np.where(B < 0, 1.0, 0.0), delta)
    aR = ceff + B * (1.0 - delta)               # F = aR*u_right + aL*u_left
    aL = -ceff + B * delta
    h = np.diff(edges)

    upper = np.zeros(n)
    lower = np.zeros(n)
    diag = np.zeros(n)
    # Row i: (F_{i+1/2} - F_{i-1/2}) / h_i, boundary fluxes zero.
    upper[1:] = aR / h[:-1]                     # coeff of u_{i+1} in row i
    lower[:-1] = -aL / h[1:]                    # coeff of u_{i-1} in row i+1
    diag[:-1] += aL / h[:-1]
    diag[1:] -= aR / h[1:]
    return lower, diag, upper


def _implicit_step(grid: DensityGrid, lower, diag, upper, dt: float) -> None:
    """Solve (I - dt*M) u_new = u in place; positivity- and mass-preserving."""
    n = grid.values.size
    ab = np.zeros((3, n))
    ab[0, :] = -dt * upper
    ab[1, :] = 1.0 - dt * diag
    ab[2, :] = -dt * lower
    grid.values = solve_banded((1, 1), ab, grid.values)
    if grid.values.min() < -1e-9:
        raise RuntimeError("positivity lost in implicit step")
    np.maximum(grid.values, 0.0, out=grid.values)


def _opinion_coeffs(params: ModelParams, Y: float, phi: float, x: np.ndarray):
    A = params.rho * (params.alpha1 * herding(x, params.a, params.b) * (Y - x)
                      + params.alpha2 * (phi - x))
    g = params.gamma_D
    base = 1.0 - x * x
    C = 0.5 * params.sigma2 * params.rho * base ** (2 * g)
    Cp = -2.0 * params.sigma2 * params.rho * g * x * base ** (2 * g - 1)
    return A, np.asarray(C, dtype=float), np.asarray(Cp, dtype=float)


def _price_coeffs(params: ModelParams, Y: float, x: np.ndarray):
    A = params.beta * (params.rho * Y * x
                       + params.rho_F * params.gamma_F * (params.S_F - x))
    C = 0.5 * params.zeta2 * x * x
    Cp = params.zeta2 * x
    return A, C, Cp


def fp_opinion_step(grid: DensityGrid, params: ModelParams, Y: float,
                    phi: float, dt: float) -> DensityGrid:
    """One implicit conservative step of the opinion equation; Y and phi
    are frozen for the step (Picard lag)."""
    if dt <= 0 or not math.isfinite(dt):
        raise ValueError("dt must be positive and finite")
    x = grid.edges[1:-1]
    A, C, Cp = _opinion_coeffs(params, Y, phi, x)
    bands = _flux_matrix(grid.edges, grid.centers, A, C, Cp)
    _implicit_step(grid, *bands, dt)
    return grid


def fp_price_step(grid: DensityGrid, params: ModelParams, Y: float,
                  dt: float) -> DensityGrid:
    """One implicit conservative step of the price equation."""
    if dt <= 0 or not math.isfinite(dt):
        raise ValueError("dt must be positive and finite")
    x = grid.edges[1:-1]
    A, C, Cp = _price_coeffs(params, Y, x)
    bands = _flux_matrix(grid.edges, grid.centers, A, C, Cp)
    _implicit_step(grid, *bands, dt)
    return grid


def apply_price_operator(grid: DensityGrid, params: ModelParams,
                         Y: float) -> np.ndarray:
    """Evaluate the discrete spatial operator M u (no time step), used for
    residual and convergence-order studies."""
    x = grid.edges[1:-1]
    A, C, Cp = _price_coeffs(params, Y, x)
    lower, diag, upper = _flux_matrix(grid.edges, grid.centers, A, C, Cp)
    u = grid.values
    out = diag * u
    out[:-1] += upper[1:] * u[1:]
    out[1:] += lower[:-1] * u[:-1]
    return out


def integrate_E(E0: float, Y_path, params: ModelParams, t: float) -> float:
    """Second moment of the price density along a frozen Y path:
    dE/dt = (2 beta rho Y(t) + zeta2) E, solved exactly.

    Y_path is either a constant or a pair (times, values) describing a
    piecewise-constant path with values[i] active on [times[i], times[i+1]).
    """
    if E0 <= 0:
        raise ValueError("E0 must be > 0")
    if np.ndim(Y_path) == 0:
        rate = 2.0 * params.beta * params.rho * float(Y_path) + params.zeta2
        return E0 * math.exp(rate * t)
    times, values = (np.asarray(a, dtype=float) for a in Y_path)
    if times.size != values.size or times[0] != 0.0:
        raise ValueError("Y path needs times starting at 0, one value each")
    bounds = np.append(times, np.inf)
    total = 0.0
    for k in range(values.size):
        lo, hi = bounds[k], min(bounds[k + 1], t)
        if hi <= lo:
            break
        total += (2.0 * params.beta * params.rho * values[k] + params.zeta2) * (hi - lo)
    return E0 * math.exp(total)


def lognormal_profile(t: float, E0: float, S0: float, params: ModelParams,
                      Y: float = 0.0):
    """(mean, log-variance) of the self-similar lognormal price density at
    time t with Y frozen: S(t) = S0 e^{beta rho Y t}, Z(t) = sqrt(E)/S."""
    S_t = S0 * math.exp(params.beta * params.rho * Y * t)
    E_t = integrate_E(E0, Y, params, t)
    v = math.log(E_t / S_t ** 2)        # log Z^2
    if v <= 0:
        raise DegenerateVarianceError("need E > S^2 for a lognormal profile")
    return S_t, v


def analytic_lognormal(s, t: float, E0: float, S0: float,
                       params: ModelParams, Y: float = 0.0):
    """Closed-form lognormal solution of the pure-speculator price
    equation, with mean S(t) and log-variance log Z(t)^2."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("prices must be > 0")
    S_t, v = lognormal_profile(t, E0, S0, params, Y)
    m = math.log(S_t) - 0.5 * v
    out = np.exp(-(np.log(s) - m) ** 2 / (2 * v)) / (s * math.sqrt(2 * math.pi * v))
    return float(out) if out.ndim == 0 else out


def analytic_lognormal_dt(s, t: float, E0: float, S0: float,
                          params: ModelParams, Y: float = 0.0):
    """Exact time derivative of analytic_lognormal, for residual oracles."""
    s = np.asarray(s, dtype=float)
    S_t, v = lognormal_profile(t, E0, S0, params, Y)
    m = math.log(S_t) - 0.5 * v
    u = np.log(s) - m
    V = np.exp(-u ** 2 / (2 * v)) / (s * math.sqrt(2 * math.pi * v))
    m_dot = params.beta * params.rho * Y - 0.5 * params.zeta2
    v_dot = params.zeta2
    return V * (u / v * m_dot + (u ** 2 / (2 * v ** 2) - 0.5 / v) * v_dot)


def pareto_mu(rho_F: float, gamma_F: float, zeta2: float) -> float:
    """Tail exponent of the steady price density: mu = 1 + 2 rho_F gamma_F / zeta2."""
    if zeta2 <= 0:
        raise ValueError("mu undefined for zeta2 <= 0")
    mu = 1.0 + 2.0 * rho_F * gamma_F / zeta2
    if mu <= 1:
        raise ValueError("need rho_F * gamma_F > 0 for mu > 1")
    return mu


def analytic_gamma_steady(s, mu: float, S_F: float):
    """Steady price density with fundamentalists: an inverse-Gamma law
    C1(mu) s^-(1+mu) exp(-(mu-1) S_F / s), with mean S_F and Pareto tail
    exponent mu."""
    if mu <= 1:
        raise ValueError("mu must be > 1")
    if S_F <= 0:
        raise ValueError("S_F must be > 0")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("prices must be > 0")
    theta = (mu - 1.0) * S_F
    logpdf = mu * math.log(theta) - gammaln(mu) - (1.0 + mu) * np.log(s) - theta / s
    out = np.exp(logpdf)
    return float(out) if out.ndim == 0 else out


@dataclass
class FpRunReport:
    grid: DensityGrid
    mass_drift: float
    n_steps: int
    residual: float
    converged: bool


def solve_steady(params: ModelParams, n_cells: int = 512, tol: float = 1e-8,
                 s_min: float | None = None, s_max: float | None = None,
                 dt0: float = 0.01, dt_max: float = 50.0,
                 max_steps: int = 100_000) -> FpRunReport:
    """Time-march the price equation with Y = 0 to its steady state.

    Implicit Euler with a geometrically growing step; the residual is the
    L1 change per unit time, which for implicit Euler equals |M u| in L1.
    """
    if params.rho_F * params.gamma_F <= 0 or params.zeta2 <= 0:
        raise ValueError("steady state needs rho_F*gamma_F > 0 and zeta2 > 0")
    if s_min is None:
        s_min = params.S_F * 1e-3
    if s_max is None:
        s_max = params.S_F * 1e3
    grid = price_grid(n_cells, s_min, s_max,
                      density=lognormal_init(params.S_F, 0.5))
    mass0 = grid.mass()
    dt = dt0
    residual = math.inf
    for k in range(1, max_steps + 1):
        prev = grid.values.copy()
        fp_price_step(grid, params, 0.0, dt)
        residual = float(np.abs(grid.values - prev) @ grid.widths) / dt
        if residual < tol:
            report = FpRunReport(grid, abs(grid.mass() - mass0), k, residual, True)
            return report
        dt = min(dt * 1.3, dt_max)
    report = FpRunReport(grid, abs(grid.mass() - mass0), max_steps, residual, False)
    raise ConvergenceError(
        f"no steady state after {max_steps} steps (residual {residual:.3e})",
        report=report,
    )


@dataclass
class FpConfig:
    n_opinion_cells: int = 200
    n_price_cells: int = 256
    s_min_factor: float = 1e-3      # price domain [S_F*s_min_factor, S_F*s_max_factor]
    s_max_factor: float = 1e3
    dt: float = 1e-3
    t_end: float = 1.0
    steady_tol: float = 1e-8
    max_steps: int = 100_000
    snapshot_every: int = 0
    y_lo: float = -1.0
    y_hi: float = 1.0
    s0_mean: float = 1.0
    s0_sigma_log: float = 0.25

    def validate(self):
        from .model import ParameterError

        def req(cond, key, msg):
            if not cond:
                raise ParameterError(key, msg)

        req(self.n_opinion_cells >= 8, "fp.n_opinion_cells", "must be >= 8")
        req(self.n_price_cells >= 8, "fp.n_price_cells", "must be >= 8")
        req(0 < self.s_min_factor < self.s_max_factor, "fp.s_min_factor",
            "need 0 < s_min_factor < s_max_factor")
        req(self.dt > 0, "fp.dt", "must be > 0")
        req(self.t_end >= 0, "fp.t_end", "must be >= 0")
        req(-1 <= self.y_lo < self.y_hi <= 1, "fp.y_lo",
            "initial opinion range must be inside [-1, 1]")
        req(self.s0_mean > 0, "fp.s0_mean", "must be > 0")
        req(self.s0_sigma_log > 0, "fp.s0_sigma_log",
            "grid initial condition needs a spread > 0")


def solve_coupled(params: ModelParams, cfg: FpConfig):
    """Alternate opinion and price steps with the scalars Y, S, Phi frozen
    per step and recomputed from the grids between steps.

    Returns (trajectory_rows, opinion_grid, price_grid, snapshots) where
    rows are (t, S, Y, E) and snapshots are (t, f_grid_copy, v_grid_copy).
    """
    from .model import value_function

    cfg.validate()
    f = opinion_grid(cfg.n_opinion_cells, params.rho, cfg.y_lo, cfg.y_hi)
    v = price_grid(cfg.n_price_cells,
                   params.S_F * cfg.s_min_factor, params.S_F * cfg.s_max_factor,
                   density=lognormal_init(cfg.s0_mean, cfg.s0_sigma_log))
    steps = int(round(cfg.t_end / cfg.dt)) if cfg.t_end > 0 else 0
    rows = []
    snaps = []
    S_prev = None
    for k in range(steps + 1):
        t = k * cfg.dt
        S = v.mean()
        Y = f.mean() / params.rho
        E = v.moment(2)
        rows.append((t, S, Y, E))
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            snaps.append((t, DensityGrid(f.edges.copy(), f.values.copy(), "opinion"),
                          DensityGrid(v.edges.copy(), v.values.copy(), "price")))
        if k == steps:
            break
        x = 0.0 if S_prev is None else (S - S_prev) / (cfg.dt * S)
        phi = float(value_function(x, params.value_fn))
        S_prev = S
        fp_opinion_step(f, params, Y, phi, cfg.dt)
        fp_price_step(v, params, Y, cfg.dt)
    return np.array(rows), f, v, snaps
