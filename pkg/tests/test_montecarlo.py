"""Tests for the stochastic particle simulator: determinism, frozen dynamics,
trend estimation, symmetry, and the second-moment growth law."""

import numpy as np
import pytest

from kineticmarket.fokker_planck import integrate_E
from kineticmarket.model import ModelParams, ParameterError
from kineticmarket.montecarlo import DegeneratePriceError, McConfig, Trajectory, estimate_trend, run


def make_params(**kw):
    defaults = dict(alpha1=0.3, alpha2=0.2, beta=1.0, sigma2=0.05, zeta2=0.05)
    defaults.update(kw)
    return ModelParams(**defaults)


class TestEstimateTrend:
    def test_flat(self):
        assert estimate_trend(100.0, 100.0, 1.0) == 0.0

    def test_substitution(self):
        assert estimate_trend(101.0, 100.0, 1.0) == pytest.approx(1.0 / 101.0)

    def test_exponential_limit(self):
        # for S = e^(g t) the estimate converges to g as dt shrinks
        g = 0.3
        errs = []
        for dt in (1e-1, 1e-2, 1e-3, 1e-4):
            est = estimate_trend(np.exp(g * dt), 1.0, dt)
            errs.append(abs(est - g))
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 1e-4

    def test_degenerate_price(self):
        with pytest.raises(DegeneratePriceError):
            estimate_trend(0.0, 1.0, 1.0)


class TestRun:
    def test_determinism(self):
        p = make_params()
        cfg = McConfig(n_agents=500, n_prices=500, dt=0.1, t_end=2.0, seed=42)
        a = run(p, cfg)
        b = run(p, cfg)
        for field in ("t", "S", "Y", "E", "final_y", "final_s"):
            assert np.array_equal(getattr(a, field), getattr(b, field))
        assert a.status == b.status

    def test_zero_horizon_single_row(self):
        p = make_params()
        cfg = McConfig(n_agents=100, n_prices=100, dt=0.1, t_end=0.0, seed=1)
        traj = run(p, cfg)
        assert len(traj.t) == 1
        assert traj.t[0] == 0.0

    def test_frozen_dynamics(self):
        # zero noise, zero coupling weights, price updates disabled: nothing moves
        p = make_params(alpha1=0.0, alpha2=0.0, sigma2=0.0, zeta2=0.0, rho_F=0.0)
        cfg = McConfig(n_agents=400, n_prices=400, dt=0.5, t_end=10.0, seed=5, price_rate=0.0)
        traj = run(p, cfg)
        assert np.all(traj.S == traj.S[0])
        assert np.all(traj.Y == traj.Y[0])
        assert np.all(traj.E == traj.E[0])

    def test_ensemble_sizes_conserved(self):
        p = make_params()
        cfg = McConfig(n_agents=301, n_prices=200, dt=0.1, t_end=1.0, seed=9)
        traj = run(p, cfg)
        assert traj.final_y.size == 301
        assert traj.final_s.size == 200

    def test_state_stays_admissible(self):
        p = make_params(alpha1=0.5, alpha2=0.4, sigma2=0.2, zeta2=0.2, rho_F=0.5)
        cfg = McConfig(n_agents=1000, n_prices=1000, dt=0.5, t_end=5.0, seed=13)
        traj = run(p, cfg)
        assert np.all(np.abs(traj.final_y) <= 1.0)
        assert np.all(traj.final_s >= 0.0)
        assert np.all(np.abs(traj.Y) <= 1.0)
        assert np.all(traj.S >= 0.0)

    def test_symmetric_propensity_stays_near_zero(self):
        # symmetric initial opinions, no value coupling, symmetric noise
        p = make_params(alpha1=0.5, alpha2=0.0, sigma2=0.05, a=0.2, b=0.5)
        n = 10_000
        for seed in range(5):
            cfg = McConfig(n_agents=n, n_prices=100, dt=0.1, t_end=3.0, seed=seed)
            traj = run(p, cfg)
            assert np.max(np.abs(traj.Y)) <= 4.0 / np.sqrt(n)

    def test_second_moment_growth_matches_ode(self):
        # E(t) tracks the exact exponential of the recorded propensity path
        p = make_params(alpha1=0.0, alpha2=0.0, sigma2=0.0, zeta2=0.1, rho=1.0, rho_F=0.0)
        cfg = McConfig(n_agents=20_000, n_prices=100_000, dt=1.0, t_end=1.0, seed=2,
                       scale_eps=0.05, s0_sigma_log=0.0)
        traj = run(p, cfg)
        growth = traj.E[-1] / traj.E[0]
        predicted = integrate_E(1.0, (traj.t, traj.Y), p, traj.t[-1])
        assert growth == pytest.approx(predicted, rel=0.05)
        # opinions are frozen here, so the pure-noise closed form applies too
        assert growth == pytest.approx(np.exp(p.zeta2 * traj.t[-1]), rel=0.05)

    def test_snapshot_count(self):
        p = make_params()
        cfg = McConfig(n_agents=200, n_prices=200, dt=0.5, t_end=5.0, seed=3, snapshot_every=4)
        traj = run(p, cfg)
        assert len(traj.snapshots) == 3  # steps 0, 4, 8 of 10

    def test_crash_terminates_cleanly(self):
        # pinned bearish opinions drive the price toward zero geometrically
        p = make_params(alpha1=0.0, alpha2=0.0, sigma2=0.0, zeta2=0.0, rho=1.0, rho_F=0.0)
        cfg = McConfig(n_agents=500, n_prices=500, dt=1.0, t_end=100.0, seed=6,
                       y_lo=-1.0, y_hi=-0.9, s0_sigma_log=0.0)
        traj = run(p, cfg)
        assert traj.status == "crash"
        assert traj.t[-1] < 100.0
        rows = np.diff(traj.t)
        assert np.all(rows > 0)

    def test_rate_budget_validated(self):
        p = make_params()
        with pytest.raises(ParameterError):
            McConfig(n_agents=10, n_prices=10, dt=3.0, t_end=1.0, seed=0).validate()
        with pytest.raises(ParameterError):
            McConfig(n_agents=10, n_prices=10, dt=-0.1, t_end=1.0, seed=0).validate()


class TestBoomCrashDichotomy:
    @pytest.mark.parametrize("direction", [+1, -1])
    def test_sign_of_trend_follows_initial_propensity(self, direction):
        p = make_params(alpha1=0.3, alpha2=0.3, sigma2=0.05, zeta2=0.05,
                        rho=1.0, rho_F=0.0)
        hits = 0
        for seed in range(10):
            lo, hi = (0.0, 1.0) if direction > 0 else (-1.0, 0.0)
            cfg = McConfig(n_agents=1000, n_prices=1000, dt=1.0, t_end=5.0,
                           seed=200 + seed, scale_eps=0.1, y_lo=lo, y_hi=hi)
            traj = run(p, cfg)
            slope = np.polyfit(traj.t, np.log(traj.S), 1)[0]
            if np.sign(slope) == direction:
                hits += 1
        assert hits >= 9
