"""Round-trip, validation, and determinism tests for the config format, the
CSV dialect, and the command-line driver."""

import os

import numpy as np
import pytest

from kineticmarket.cli import main
from kineticmarket.config import ExperimentConfig, known_keys, load_config, save_config
from kineticmarket.fokker_planck import FpConfig
from kineticmarket.fokker_planck import DensityGrid
from kineticmarket.ioutil import (
    atomic_write,
    read_grid_csv,
    read_report,
    read_samples_csv,
    read_trajectory_csv,
    write_grid_csv,
    write_report,
    write_samples_csv,
    write_trajectory_csv,
)
from kineticmarket.montecarlo import Trajectory
from kineticmarket.model import ModelParams, ParameterError
from kineticmarket.montecarlo import McConfig


def default_config(**mc_kw):
    mc = dict(n_agents=400, n_prices=400, dt=0.5, t_end=2.0, seed=7)
    mc.update(mc_kw)
    return ExperimentConfig(
        name="unit",
        params=ModelParams(alpha1=0.3, alpha2=0.2, beta=1.0, sigma2=0.05, zeta2=0.05),
        mc=McConfig(**mc),
        fp=FpConfig(n_opinion_cells=40, n_price_cells=48, dt=0.01, t_end=0.2),
    )


class TestConfigFormat:
    def test_round_trip_identity(self, tmp_path):
        path = tmp_path / "a.cfg"
        save_config(path, default_config())
        loaded = load_config(path)
        path2 = tmp_path / "b.cfg"
        save_config(path2, loaded)
        assert path.read_bytes() == path2.read_bytes()

    def test_unknown_key_named(self, tmp_path):
        path = tmp_path / "bad.cfg"
        save_config(path, default_config())
        path.write_text(path.read_text() + "model.alpha3 = 0.1\n")
        with pytest.raises(ParameterError) as exc:
            load_config(path)
        assert "alpha3" in exc.value.key

    def test_invariants_revalidated_on_load(self, tmp_path):
        path = tmp_path / "bad.cfg"
        save_config(path, default_config())
        text = path.read_text()
        text = text.replace("model.alpha1 = ", "model.alpha1 = 0.8 #", 1)
        text = text.replace("model.alpha2 = ", "model.alpha2 = 0.5 #", 1)
        # the format has no comments; rewrite the lines properly
        lines = []
        for line in path.read_text().splitlines():
            if line.startswith("model.alpha1"):
                line = "model.alpha1 = 0.8"
            if line.startswith("model.alpha2"):
                line = "model.alpha2 = 0.5"
            lines.append(line)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParameterError) as exc:
            load_config(path)
        assert "alpha" in exc.value.key

    def test_known_keys_cover_all_sections(self):
        keys = known_keys()
        for prefix in ("experiment.", "model.", "value_fn.", "mc.", "fp."):
            assert any(k.startswith(prefix) for k in keys)


class TestCsvDialect:
    @staticmethod
    def make_traj(rng):
        n = 5
        return Trajectory(t=np.arange(n, dtype=float), S=rng.random(n) * np.pi,
                          Y=rng.uniform(-1, 1, n), E=rng.random(n) * 1e17,
                          acc_op=rng.random(n), acc_pr=rng.random(n))

    def test_float_round_trip_exact(self, tmp_path):
        traj = self.make_traj(np.random.default_rng(0))
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, traj)
        back = read_trajectory_csv(path)
        for key in ("t", "S", "Y", "E", "acc_op", "acc_pr"):
            assert np.array_equal(getattr(back, key), getattr(traj, key))

    def test_lf_line_endings_and_header(self, tmp_path):
        path = tmp_path / "t.csv"
        write_trajectory_csv(path, self.make_traj(np.random.default_rng(0)))
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.split(b"\n")[0] == b"t,S,Y,E,acc_op,acc_pr"

    def test_grid_and_samples_round_trip(self, tmp_path):
        edges = np.geomspace(0.1, 10.0, 9)
        values = np.random.default_rng(1).random(8)
        write_grid_csv(tmp_path / "g.csv", DensityGrid(edges, values, "price"))
        back = read_grid_csv(tmp_path / "g.csv")
        assert np.array_equal(edges, back.edges)
        assert np.array_equal(values, back.values)
        samples = np.random.default_rng(2).random(100)
        write_samples_csv(tmp_path / "s.csv", samples)
        assert np.array_equal(read_samples_csv(tmp_path / "s.csv"), samples)

    def test_report_round_trip(self, tmp_path):
        write_report(tmp_path / "r.txt", {"status": "ok", "mu_hat": 3.25})
        rep = read_report(tmp_path / "r.txt")
        assert rep["status"] == "ok"
        assert float(rep["mu_hat"]) == 3.25

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        target = tmp_path / "out.csv"
        atomic_write(target, "x\n1\n")
        assert target.read_text() == "x\n1\n"
        assert os.listdir(tmp_path) == ["out.csv"]


class TestCli:
    def write_cfg(self, tmp_path, **mc_kw):
        path = tmp_path / "exp.cfg"
        save_config(path, default_config(**mc_kw))
        return path

    def test_simulate_mc_deterministic_bytes(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        for name in ("r1", "r2"):
            code = main(["simulate-mc", str(cfg), "--out", str(tmp_path / name)])
            assert code == 0
        a = (tmp_path / "r1" / "trajectory.csv").read_bytes()
        b = (tmp_path / "r2" / "trajectory.csv").read_bytes()
        assert a == b

    def test_seed_override_changes_output(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        assert main(["simulate-mc", str(cfg), "--out", str(tmp_path / "a")]) == 0
        assert main(["simulate-mc", str(cfg), "--out", str(tmp_path / "b"),
                     "--seed", "99"]) == 0
        assert ((tmp_path / "a" / "trajectory.csv").read_bytes()
                != (tmp_path / "b" / "trajectory.csv").read_bytes())

    def test_run_directory_is_self_describing(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out = tmp_path / "run"
        assert main(["simulate-mc", str(cfg), "--out", str(out)]) == 0
        for name in ("config.cfg", "trajectory.csv", "final_opinions.csv",
                     "final_prices.csv", "report.txt"):
            assert (out / name).exists()
        # the stored config copy reloads to the same experiment
        assert load_config(out / "config.cfg").mc.seed == 7

    def test_validation_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        save_config(path, default_config())
        lines = []
        for line in path.read_text().splitlines():
            if line.startswith("model.alpha1"):
                line = "model.alpha1 = 0.8"
            elif line.startswith("model.alpha2"):
                line = "model.alpha2 = 0.5"
            lines.append(line)
        path.write_text("\n".join(lines) + "\n")
        code = main(["simulate-mc", str(path), "--out", str(tmp_path / "x")])
        assert code == 1
        assert "alpha" in capsys.readouterr().err

    def test_missing_config_is_runtime_error(self, tmp_path):
        assert main(["simulate-mc", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "x")]) == 2

    def test_solve_fp_outputs(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out = tmp_path / "fp"
        assert main(["solve-fp", str(cfg), "--out", str(out)]) == 0
        v = read_grid_csv(out / "final_v.csv")
        assert v.mass() == pytest.approx(1.0, abs=1e-8)
        f = read_grid_csv(out / "final_f.csv", kind="opinion")
        assert f.mass() == pytest.approx(0.5, abs=1e-8)

    def test_steady_state_report(self, tmp_path):
        path = tmp_path / "exp.cfg"
        cfg = default_config()
        cfg.params = ModelParams(alpha1=0.0, alpha2=0.0, beta=1.0, sigma2=0.05,
                                 zeta2=0.2, rho_F=0.5, gamma_F=0.4)
        save_config(path, cfg)
        out = tmp_path / "steady"
        assert main(["steady-state", str(path), "--out", str(out)]) == 0
        rep = read_report(out / "report.txt")
        assert float(rep["mu"]) == pytest.approx(3.0)
        assert float(rep["rel_l1_vs_analytic"]) < 2e-2

    def test_analyze_pipeline(self, tmp_path):
        cfg = self.write_cfg(tmp_path, n_prices=2000, n_agents=2000)
        out = tmp_path / "run"
        assert main(["simulate-mc", str(cfg), "--out", str(out)]) == 0
        assert main(["analyze", str(out)]) == 0
        rep = read_report(out / "analysis.txt")
        assert "hill_mu_k" in rep
        assert "equilibrium_label" in rep
        assert "ks_p_value" in rep

    def test_crash_run_exits_2_with_report(self, tmp_path):
        path = tmp_path / "crash.cfg"
        cfg = default_config(dt=1.0, t_end=100.0, y_lo=-1.0, y_hi=-0.9,
                             s0_sigma_log=0.0)
        cfg.params = ModelParams(alpha1=0.0, alpha2=0.0, beta=1.0, sigma2=0.0,
                                 zeta2=0.0, rho=1.0, rho_F=0.0)
        save_config(path, cfg)
        out = tmp_path / "crashrun"
        assert main(["simulate-mc", str(path), "--out", str(out)]) == 2
        rep = read_report(out / "report.txt")
        assert rep["status"] == "crash"
        assert (out / "trajectory.csv").exists()
