"""Monte Carlo solver for the kinetic market system.

Evolves an opinion ensemble and a price ensemble by Nanbu-style binary
interaction rounds: each step the agents are shuffled into disjoint
pairs, each pair fires with probability interaction_rate*dt, and each
price sample updates with probability price_rate*dt.  Rejected events
(states that would leave the admissible domain) are null events.

The optional quasi-invariant scaling factor eps multiplies all
interaction strengths and noise variances by eps and stretches the run
to t_end/eps microscopic time, while all reported times stay in
macroscopic units; as eps shrinks, the histograms approach the
Fokker-Planck solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    ModelParams,
    interact_opinions,
    sample_noise,
    update_price,
    value_function,
)


class DegeneratePriceError(RuntimeError):
    """The market price reached zero; the trend is undefined."""


@dataclass
class McConfig:
    n_agents: int = 10_000
    n_prices: int = 10_000
    dt: float = 1.0                 # microscopic step (event-time units)
    t_end: float = 10.0             # macroscopic horizon
    interaction_rate: float = 1.0   # expected interactions per agent per unit time
    price_rate: float = 1.0         # expected updates per price sample per unit time
    seed: int = 0
    snapshot_every: int = 0         # steps between histogram dumps; 0 = none
    scale_eps: float = 1.0          # quasi-invariant scaling factor
    y_lo: float = -1.0              # initial opinions uniform on [y_lo, y_hi]
    y_hi: float = 1.0
    s0_mean: float = 1.0            # initial prices lognormal with this mean
    s0_sigma_log: float = 0.0       # log-std of initial prices; 0 = all equal
    n_y_bins: int = 50
    n_s_bins: int = 60
    crash_floor_rel: float = 1e-8   # terminate when S < this fraction of S(0)

    def validate(self):
        from .model import ParameterError

        def req(cond, key, msg):
            if not cond:
                raise ParameterError(key, msg)

        req(self.n_agents >= 2, "mc.n_agents", "must be >= 2")
        req(self.n_prices >= 1, "mc.n_prices", "must be >= 1")
        req(self.dt > 0, "mc.dt", "must be > 0")
        req(self.t_end >= 0, "mc.t_end", "must be >= 0")
        req(self.interaction_rate * self.dt <= 1 + 1e-12, "mc.interaction_rate",
            "rate*dt must be <= 1 (per-step event probability)")
        req(self.price_rate * self.dt <= 1 + 1e-12, "mc.price_rate",
            "rate*dt must be <= 1 (per-step event probability)")
        req(0 < self.scale_eps <= 1, "mc.scale_eps", "must be in (0, 1]")
        req(-1 <= self.y_lo < self.y_hi <= 1, "mc.y_lo",
            "initial opinion range must be inside [-1, 1]")
        req(self.s0_mean > 0, "mc.s0_mean", "must be > 0")
        req(self.s0_sigma_log >= 0, "mc.s0_sigma_log", "must be >= 0")
        req(self.snapshot_every >= 0, "mc.snapshot_every", "must be >= 0")


@dataclass
class Snapshot:
    t: float
    y_edges: np.ndarray
    y_density: np.ndarray
    s_edges: np.ndarray
    s_density: np.ndarray


@dataclass
class Trajectory:
    """Time series of (t, S, Y, E, acceptance rates) plus histogram dumps."""

    t: np.ndarray
    S: np.ndarray
    Y: np.ndarray
    E: np.ndarray
    acc_op: np.ndarray
    acc_pr: np.ndarray
    snapshots: list[Snapshot] = field(default_factory=list)
    status: str = "ok"              # "ok" | "crash"
    final_y: np.ndarray | None = None
    final_s: np.ndarray | None = None


def estimate_trend(S_now: float, S_prev: float, dt: float) -> float:
    """Finite-difference estimate of the relative price trend dS/dt / S."""
    if S_now == 0:
        raise DegeneratePriceError("market price hit zero")
    if dt <= 0 or S_prev <= 0:
        raise ValueError("need S_prev > 0 and dt > 0")
    return (S_now - S_prev) / (dt * S_now)


def _snapshot(t: float, y: np.ndarray, s: np.ndarray, rho: float,
              cfg: McConfig) -> Snapshot:
    y_edges = np.linspace(-1.0, 1.0, cfg.n_y_bins + 1)
    y_density, _ = np.histogram(y, bins=y_edges, density=True)
    s_hi = float(s.max())
    s_lo = max(float(s.min()), s_hi * 1e-9)
    if s_lo >= s_hi:
        s_lo, s_hi = s_hi * 0.5, s_hi * 1.5
    s_edges = np.geomspace(s_lo, s_hi, cfg.n_s_bins + 1)
    s_density, _ = np.histogram(s, bins=s_edges, density=True)
    return Snapshot(t, y_edges, rho * y_density, s_edges, s_density)


def run(params: ModelParams, cfg: McConfig) -> Trajectory:
    """March the two ensembles to t_end; deterministic given the seed."""
    cfg.validate()
    eps = cfg.scale_eps
    p = params.scaled(eps) if eps != 1.0 else params
    rng = np.random.default_rng(cfg.seed)
    n, m = cfg.n_agents, cfg.n_prices

    y = rng.uniform(cfg.y_lo, cfg.y_hi, n)
    if cfg.s0_sigma_log > 0:
        mu = np.log(cfg.s0_mean) - 0.5 * cfg.s0_sigma_log ** 2
        s = rng.lognormal(mu, cfg.s0_sigma_log, m)
    else:
        s = np.full(m, float(cfg.s0_mean))

    dt_macro = eps * cfg.dt
    steps = int(round(cfg.t_end / dt_macro)) if cfg.t_end > 0 else 0
    # The collision operator is quadratic in f: an agent meets partners at
    # a frequency proportional to their mass rho.
    p_int = cfg.interaction_rate * cfg.dt * params.rho
    if p_int > 1 + 1e-12:
        from .model import ParameterError

        raise ParameterError("mc.interaction_rate",
                             "rate*dt*rho must be <= 1 (per-step probability)")
    p_int = min(p_int, 1.0)
    p_upd = min(cfg.price_rate * cfg.dt, 1.0)

    rows = []
    snaps: list[Snapshot] = []
    status = "ok"
    S_prev = None
    acc_o = acc_p = 1.0
    floor = cfg.crash_floor_rel * float(s.mean())

    for k in range(steps + 1):
        S = float(s.mean())
        Y = float(y.mean())
        E = float((s * s).mean())
        rows.append((k * dt_macro, S, Y, E, acc_o, acc_p))
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            snaps.append(_snapshot(k * dt_macro, y, s, params.rho, cfg))
        if k == steps:
            break
        if S < floor:
            status = "crash"
            break

        x = 0.0 if S_prev is None else estimate_trend(S, S_prev, dt_macro)
        phi = float(value_function(x, params.value_fn))
        S_prev = S

        # Opinion round: random disjoint pairs, Bernoulli thinning.
        perm = rng.permutation(n)
        npair = n // 2
        i, j = perm[:npair], perm[npair:2 * npair]
        active = rng.random(npair) < p_int
        eta = sample_noise(rng, p.sigma2, npair, p.noise_law)
        eta_star = sample_noise(rng, p.sigma2, npair, p.noise_law)
        yi, yj, ok = interact_opinions(y[i], y[j], phi, eta, eta_star, p)
        take = active & ok
        y[i[take]] = yi[take]
        y[j[take]] = yj[take]
        acc_o = float(ok[active].mean()) if active.any() else 1.0

        # Price round.
        upd = rng.random(m) < p_upd
        eta_s = sample_noise(rng, p.zeta2, m, p.noise_law)
        s_new, okp = update_price(s, Y, eta_s, p)
        s = np.where(upd & okp, s_new, s)
        acc_p = float(okp[upd].mean()) if upd.any() else 1.0

        # Closure invariants; cheap relative to the update itself.
        assert np.abs(y).max() <= 1.0 and s.min() >= 0.0

    arr = np.array(rows)
    return Trajectory(
        t=arr[:, 0], S=arr[:, 1], Y=arr[:, 2], E=arr[:, 3],
        acc_op=arr[:, 4], acc_pr=arr[:, 5],
        snapshots=snaps, status=status, final_y=y, final_s=s,
    )
