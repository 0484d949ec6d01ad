import json

import numpy as np
import pytest
import yaml

from mhdlimit.harness import ConfigError, config_from_dict, fit_rate, load_config, run_simulation
from mhdlimit.harness.cli import main
from mhdlimit.harness.config import apply_overrides, physical_params
from mhdlimit.harness.recipes import build_initial
from mhdlimit.harness.runs import bernstein_stability
from mhdlimit.spectral import Grid, divergence, l2_norm


class TestConfig:
    def test_defaults(self):
        cfg = config_from_dict({"time": {"dt": 0.01}})
        assert cfg.grid.n == 64 and cfg.kind == "simulate-imhd"

    @pytest.mark.parametrize("data,field", [
        ({"grid": {"n": 63}}, "grid"),
        ({"grid": {"nn": 64}}, "grid.nn"),
        ({"bogus": 1}, "bogus"),
        ({"physics": {"mu": "fast"}}, "physics.mu"),
        ({"physics": {"mu": -1.0}}, "physics"),
        ({"time": {"dt": None, "cfl": None}}, "time"),
        ({"time": {"cfl": 0.9}}, "time.cfl"),
        ({"kind": "sweep-lambda", "time": {"dt": 0.01}, "sweep": {"lambdas": [1, 2]}}, "sweep.lambdas"),
        ({"kind": "reconnect", "time": {"dt": 0.01}}, "grid.dim"),
        ({"initial": {"recipe": "vortex"}}, "initial.recipe"),
    ])
    def test_errors_name_field(self, data, field):
        data = {"time": {"dt": 0.01}, **data}
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            config_from_dict(data)

    def test_yaml_round_trip(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text(yaml.safe_dump({"kind": "simulate-imhd", "grid": {"n": 32}, "time": {"dt": 0.01}}))
        cfg = load_config(p)
        assert cfg.grid.n == 32 and cfg.kind == "simulate-imhd"
        assert cfg.digest() == load_config(p).digest()

    def test_malformed_yaml(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("grid: [unclosed")
        with pytest.raises(ConfigError, match="YAML"):
            load_config(p)

    def test_overrides_revalidate(self):
        cfg = config_from_dict({"time": {"dt": 0.01}})
        assert apply_overrides(cfg, {"grid.n": 32}).grid.n == 32
        with pytest.raises(ConfigError):
            apply_overrides(cfg, {"grid.n": 7})

    def test_params_lambda(self):
        cfg = config_from_dict({"time": {"dt": 0.01}, "physics": {"mu": 0.1}})
        assert physical_params(cfg, 10.0).nu == pytest.approx(10.2)


class TestRates:
    def test_synthetic_half(self):
        nu = [10, 40, 160, 640]
        fit = fit_rate([(n, 3 * n**-0.5) for n in nu], -0.5)
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert np.exp(fit.intercept) == pytest.approx(3.0)
        assert fit.residual < 1e-12 and fit.within(-0.6, -0.4)

    def test_two_points(self):
        assert fit_rate([(1, 1), (100, 0.01)]).slope == pytest.approx(-1.0)

    def test_constant(self):
        assert fit_rate([(1, 2), (2, 2), (4, 2)]).slope == pytest.approx(0.0, abs=1e-12)

    def test_noisy(self):
        rng = np.random.default_rng(0)
        nu = np.geomspace(10, 1000, 8)
        err = nu**-0.5 * np.exp(0.01 * rng.standard_normal(8))
        fit = fit_rate(zip(nu, err))
        assert abs(fit.slope + 0.5) < 0.02 and fit.residual < 0.02

    @pytest.mark.parametrize("bad", [[(1, 1)], [(1, 0), (2, 1)], [(-1, 1), (2, 1)]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            fit_rate(bad)


class TestRecipes:
    @pytest.mark.parametrize("name,dim", [("orszag-tang", 2), ("taylor-green", 2), ("taylor-green", 3)])
    def test_solenoidal_field(self, name, dim):
        g = Grid(dim, 16)
        cfg = config_from_dict({"time": {"dt": 0.01}})
        a, v, b = build_initial(name, g, physical_params(cfg))
        assert l2_norm(divergence(b)) < 1e-12 * max(l2_norm(b), 1)
        assert l2_norm(a) == 0

    def test_unknown(self):
        cfg = config_from_dict({"time": {"dt": 0.01}})
        with pytest.raises(ValueError, match="unknown recipe"):
            build_initial("nope", Grid(2, 8), physical_params(cfg))


class TestRuns:
    def _cfg(self, tmp_path, **kw):
        d = {"kind": "simulate-cmhd", "grid": {"n": 16}, "time": {"dt": 0.005, "t_final": 0.05},
             "output": {"directory": str(tmp_path / "out"), "stride": 2}}
        d.update(kw)
        return config_from_dict(d)

    def test_zero_data(self, tmp_path):
        res = run_simulation(self._cfg(tmp_path, initial={"recipe": "zero"}))
        lines = (res.directory / "series.csv").read_text().splitlines()
        assert lines[0] == "time,norm,value"
        energies = [float(ln.split(",")[2]) for ln in lines[1:] if ln.split(",")[1] in ("kinetic", "magnetic")]
        assert energies and all(e == 0 for e in energies)

    def test_deterministic(self, tmp_path):
        a = run_simulation(self._cfg(tmp_path / "a", seed=3))
        b = run_simulation(self._cfg(tmp_path / "b", seed=3))
        assert (a.directory / "series.csv").read_bytes() == (b.directory / "series.csv").read_bytes()
        ma, mb = (json.loads(r.manifest.read_text()) for r in (a, b))
        assert ma["config_hash"] != mb["config_hash"]  # output directories differ
        assert [o["sha256"] for o in ma["outputs"]] == [o["sha256"] for o in mb["outputs"]]

    def test_bernstein_small(self):
        spread, per = bernstein_stability(64, [2, 3], 3, np.random.default_rng(0))
        assert set(per) == {2, 3} and spread >= 0


class TestCLI:
    def test_simulate(self, tmp_path, capsys):
        code = main(["simulate", "--solver", "imhd", "--n", "16", "--dt", "0.01", "--t-final", "0.02",
                     "--output", str(tmp_path)])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["samples"] >= 2
        assert main(["report", str(tmp_path)]) == 0

    def test_config_error_exit(self, tmp_path, capsys):
        assert main(["simulate", "--n", "7", "--output", str(tmp_path)]) == 2
        assert "grid" in capsys.readouterr().err

    def test_unknown_key_exit(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("grid: {n: 16, size: 3}\ntime: {dt: 0.01}\n")
        assert main(["simulate", str(p)]) == 2

    def test_numerical_failure_exit(self, tmp_path):
        # strong compressive data with a huge step breaches the density floor
        code = main(["simulate", "--solver", "cmhd", "--n", "16", "--dt", "5.0", "--t-final", "5.0",
                     "--lam", "0", "--mu", "0.001", "--output", str(tmp_path)])
        assert code == 4

    def test_report_missing(self, tmp_path):
        assert main(["report", str(tmp_path)]) == 2

    def test_sweep_smoke(self, tmp_path, capsys):
        p = tmp_path / "s.yaml"
        p.write_text(yaml.safe_dump({"grid": {"n": 16}, "time": {"dt": 0.01, "t_final": 0.05},
                                     "output": {"stride": 1}, "sweep": {"lambdas": [10, 40, 160]}}))
        assert main(["sweep", str(p), "--output", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "rates.csv").exists()
        assert "Pv_minus_V" in capsys.readouterr().out
