"""Tests for the finite-volume drift-diffusion solvers and their closed-form
reference solutions."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from kineticmarket.fokker_planck import (
    ConvergenceError,
    DegenerateVarianceError,
    FpConfig,
    analytic_gamma_steady,
    analytic_lognormal,
    analytic_lognormal_dt,
    apply_price_operator,
    fp_opinion_step,
    fp_price_step,
    integrate_E,
    lognormal_init,
    opinion_grid,
    pareto_mu,
    price_grid,
    solve_coupled,
    solve_steady,
)
from kineticmarket.model import ModelParams, ParameterError


def make_params(**kw):
    defaults = dict(alpha1=0.3, alpha2=0.2, beta=1.0, sigma2=0.05, zeta2=0.05)
    defaults.update(kw)
    return ModelParams(**defaults)


class TestGrids:
    def test_opinion_grid_mass(self):
        g = opinion_grid(100, rho=0.7)
        assert g.mass() == pytest.approx(0.7, abs=1e-12)
        assert g.edges[0] == -1.0 and g.edges[-1] == 1.0

    def test_price_grid_mass(self):
        g = price_grid(128, 1e-3, 1e3, density=lognormal_init(1.0, 0.3))
        assert g.mass() == pytest.approx(1.0, rel=1e-6)
        assert np.all(np.diff(g.edges) > 0)
        # log spacing: constant ratio between consecutive edges
        r = g.edges[1:] / g.edges[:-1]
        assert np.allclose(r, r[0])


class TestOpinionStep:
    def test_trivial_unchanged(self):
        p = make_params(alpha1=0.0, alpha2=0.0, sigma2=0.0)
        g = opinion_grid(64, rho=0.5)
        g2 = fp_opinion_step(g, p, Y=0.2, phi=0.5, dt=0.1)
        assert np.allclose(g2.values, g.values, atol=1e-14)

    def test_mass_and_positivity(self):
        p = make_params(alpha1=0.6, alpha2=0.3, sigma2=0.2)
        g = opinion_grid(80, rho=0.5)
        for _ in range(300):
            g = fp_opinion_step(g, p, Y=g.mean() / 0.5, phi=0.3, dt=0.05)
            assert np.all(g.values >= 0.0)
            assert g.mass() == pytest.approx(0.5, abs=1e-11)

    def test_drift_relaxes_mean_toward_phi(self):
        # pure value-coupling drift: d<y>/dt = rho*alpha2*(phi - <y>)
        p = make_params(alpha1=0.0, alpha2=0.5, sigma2=0.0, rho=1.0)
        g = opinion_grid(400, rho=1.0)
        # concentrate initial mass near y0 = -0.5
        vals = np.exp(-((g.centers + 0.5) ** 2) / (2 * 0.03**2))
        g.values[:] = vals / np.sum(vals * g.widths)
        phi, dt, t_end = 0.8, 0.002, 2.0
        y0 = g.mean()
        for _ in range(int(t_end / dt)):
            g = fp_opinion_step(g, p, Y=0.0, phi=phi, dt=dt)
        expected = phi + (y0 - phi) * np.exp(-p.rho * p.alpha2 * t_end)
        assert g.mean() == pytest.approx(expected, abs=5e-3)

    def test_symmetry_preserved(self):
        p = make_params(alpha1=0.5, alpha2=0.3, sigma2=0.1)
        g = opinion_grid(64, rho=0.5)
        for _ in range(200):
            g = fp_opinion_step(g, p, Y=0.0, phi=0.0, dt=0.05)
        assert np.allclose(g.values, g.values[::-1], rtol=1e-10, atol=1e-13)
        assert abs(g.mean()) < 1e-12

    def test_dt_validation(self):
        p = make_params()
        g = opinion_grid(32, rho=0.5)
        with pytest.raises(ValueError):
            fp_opinion_step(g, p, Y=0.0, phi=0.0, dt=0.0)


class TestPriceStep:
    def test_trivial_unchanged(self):
        p = make_params(zeta2=0.0, rho_F=0.0)
        g = price_grid(64, 1e-2, 1e2, density=lognormal_init(1.0, 0.3))
        g2 = fp_price_step(g, p, Y=0.0, dt=0.1)
        assert np.allclose(g2.values, g.values, atol=1e-14)

    def test_mass_and_positivity(self):
        p = make_params(zeta2=0.2, rho_F=0.5, gamma_F=1.0)
        g = price_grid(96, 1e-3, 1e3, density=lognormal_init(1.0, 0.3))
        for _ in range(300):
            g = fp_price_step(g, p, Y=0.05, dt=0.02)
            assert np.all(g.values >= 0.0)
            assert g.mass() == pytest.approx(1.0, abs=1e-11)

    def test_drift_relaxes_mean_toward_fundamental(self):
        # noiseless fundamentalist pull: ds/dt = beta*rho_F*gamma_F*(S_F - s)
        p = make_params(zeta2=0.0, rho=1.0, rho_F=0.5, gamma_F=1.0, S_F=2.0, beta=1.0)
        g = price_grid(600, 1e-2, 1e2, density=lognormal_init(0.5, 0.05))
        s0 = g.mean()
        dt, t_end = 0.002, 1.0
        for _ in range(int(t_end / dt)):
            g = fp_price_step(g, p, Y=0.0, dt=dt)
        rate = p.beta * p.rho_F * p.gamma_F
        expected = p.S_F + (s0 - p.S_F) * np.exp(-rate * t_end)
        assert g.mean() == pytest.approx(expected, rel=1e-2)

    def test_second_moment_growth_rate(self):
        # frozen propensity: E(t) = E(0) exp((2*beta*rho*Y + zeta2) t)
        p = make_params(zeta2=0.2, rho=1.0, rho_F=0.0, beta=1.0)
        Y = 0.1
        g = price_grid(512, np.exp(-7.0), np.exp(7.0), density=lognormal_init(1.0, 0.25))
        E0 = g.moment(2)
        dt, t_end = 1e-3, 1.0
        for _ in range(int(t_end / dt)):
            g = fp_price_step(g, p, Y=Y, dt=dt)
        expected = E0 * np.exp((2 * p.beta * p.rho * Y + p.zeta2) * t_end)
        assert g.moment(2) == pytest.approx(expected, rel=1e-2)


class TestIntegrateE:
    def test_pure_noise(self):
        p = make_params(zeta2=0.1, rho=1.0)
        assert integrate_E(2.0, 0.0, p, 3.0) == pytest.approx(2.0 * np.exp(0.3))

    def test_pure_drift(self):
        p = make_params(zeta2=0.0, beta=0.7, rho=1.0)
        c = 0.2
        assert integrate_E(1.0, c, p, 2.0) == pytest.approx(np.exp(2 * 0.7 * c * 2.0))

    def test_piecewise_path_matches_ode_solver(self):
        p = make_params(zeta2=0.15, beta=1.3, rho=0.5)
        times = np.linspace(0.0, 2.0, 21)
        rng = np.random.default_rng(8)
        Y_vals = rng.uniform(-0.5, 0.5, times.size)

        # chain the numerical ODE solver segment by segment so the oracle
        # never integrates across a jump of the piecewise-constant path
        E = 1.0
        for i in range(times.size - 1):
            sol = solve_ivp(
                lambda t, E_, Y=Y_vals[i]: (2 * p.beta * p.rho * Y + p.zeta2) * E_,
                (times[i], times[i + 1]), [E], rtol=1e-13, atol=1e-15)
            E = sol.y[0, -1]
        ours = integrate_E(1.0, (times, Y_vals), p, 2.0)
        assert ours == pytest.approx(E, rel=1e-10)


class TestAnalyticLognormal:
    def setup_method(self):
        self.p = make_params(zeta2=0.3, rho=1.0, rho_F=0.0, beta=1.0)
        self.s = np.geomspace(1e-6, 1e6, 400_001)

    def _quad(self, f):
        return np.trapezoid(f, self.s)

    def test_normalization(self):
        v = analytic_lognormal(self.s, t=0.7, E0=np.exp(0.3), S0=1.0, params=self.p, Y=0.1)
        assert self._quad(v) == pytest.approx(1.0, abs=1e-8)

    def test_mean_tracks_drift(self):
        t, Y = 0.7, 0.1
        v = analytic_lognormal(self.s, t=t, E0=np.exp(0.3), S0=1.0, params=self.p, Y=Y)
        S_t = np.exp(self.p.beta * self.p.rho * Y * t)
        assert self._quad(self.s * v) == pytest.approx(S_t, rel=1e-6)

    def test_degenerate_variance(self):
        with pytest.raises(DegenerateVarianceError):
            analytic_lognormal(self.s, t=0.0, E0=1.0, S0=1.0, params=self.p)

    def test_time_derivative_is_consistent(self):
        # central difference of the profile in t matches the closed-form dV/dt
        s = np.geomspace(1e-2, 1e2, 2001)
        t, h = 0.5, 1e-5
        args = dict(E0=np.exp(0.3), S0=1.0, params=self.p, Y=0.2)
        num = (analytic_lognormal(s, t + h, **args) - analytic_lognormal(s, t - h, **args)) / (2 * h)
        exact = analytic_lognormal_dt(s, t, **args)
        assert np.max(np.abs(num - exact)) < 1e-5 * np.max(np.abs(exact))


class TestGammaSteady:
    def test_pareto_mu(self):
        assert pareto_mu(0.5, 0.2, 0.2) == pytest.approx(2.0)
        assert pareto_mu(0.5, 0.6, 0.2) == pytest.approx(4.0)

    def test_pareto_mu_errors(self):
        with pytest.raises(ValueError):
            pareto_mu(0.5, 0.5, 0.0)
        with pytest.raises(ValueError):
            pareto_mu(0.0, 0.0, 0.2)  # mu = 1 is not a valid tail exponent

    def test_normalization_and_mean(self):
        s = np.geomspace(1e-8, 1e8, 800_001)
        v = analytic_gamma_steady(s, mu=3.0, S_F=2.0)
        assert np.trapezoid(v, s) == pytest.approx(1.0, abs=1e-8)
        assert np.trapezoid(s * v, s) == pytest.approx(2.0, rel=1e-6)


class TestSolveSteady:
    def test_matches_analytic(self):
        p = make_params(alpha1=0.0, alpha2=0.0, zeta2=0.2, beta=1.0,
                        rho_F=0.5, gamma_F=0.4, S_F=1.0)
        rep = solve_steady(p, n_cells=512)
        assert rep.converged
        g = rep.grid
        assert g.mass() == pytest.approx(1.0, abs=1e-10)
        assert g.mean() == pytest.approx(p.S_F, rel=0.01)
        exact = analytic_gamma_steady(g.centers, pareto_mu(p.rho_F, p.gamma_F, p.zeta2), p.S_F)
        rel_l1 = np.sum(np.abs(g.values - exact) * g.widths)
        assert rel_l1 <= 2e-2

    def test_nonconvergence_reported(self):
        p = make_params(zeta2=0.2, rho_F=0.5, gamma_F=0.4)
        with pytest.raises(ConvergenceError) as exc:
            solve_steady(p, n_cells=64, tol=1e-300, max_steps=20)
        assert exc.value.report.n_steps == 20


class TestBoundaryFlux:
    def test_no_mass_escapes(self):
        # long diffusive run: degenerate boundary diffusion means zero leakage
        p = make_params(alpha1=0.0, alpha2=0.0, sigma2=0.5, rho=1.0)
        g = opinion_grid(64, rho=1.0)
        for _ in range(2000):
            g = fp_opinion_step(g, p, Y=0.0, phi=0.0, dt=0.05)
        assert g.mass() == pytest.approx(1.0, abs=1e-10)


class TestCoupledDriver:
    def test_masses_and_growth(self):
        p = make_params(alpha1=0.4, alpha2=0.2, sigma2=0.1, zeta2=0.1,
                        rho=0.5, rho_F=0.5, gamma_F=1.0)
        cfg = FpConfig(n_opinion_cells=80, n_price_cells=96, dt=5e-3, t_end=0.5)
        rows, f_grid, v_grid, snaps = solve_coupled(p, cfg)
        assert f_grid.mass() == pytest.approx(p.rho, abs=1e-9)
        assert v_grid.mass() == pytest.approx(1.0, abs=1e-9)
        t = np.array([r[0] for r in rows])
        assert np.all(np.diff(t) > 0)
        # E column agrees with the exact integral of the recorded Y path
        E = np.array([r[3] for r in rows])
        Y = np.array([r[2] for r in rows])
        predicted = integrate_E(E[0], (t, Y), p, t[-1])
        assert E[-1] == pytest.approx(predicted, rel=0.05)
