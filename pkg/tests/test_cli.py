import json

import numpy as np
import pytest
from click.testing import CliRunner

from vortexdft.cli import main
from vortexdft.config import ConfigError, RunConfig, dump_config, parse_config


class TestConfig:
    def test_defaults_satisfy_hierarchy(self):
        cfg = RunConfig().validate()
        assert 0 < cfg.delta0 < cfg.eps_inf < cfg.eps < cfg.eps0 < 1

    def test_roundtrip(self):
        cfg = RunConfig()
        cfg2 = parse_config(dump_config(cfg))
        assert cfg2 == cfg

    def test_rejects_bad_hierarchy(self):
        with pytest.raises(ConfigError):
            parse_config("delta0 = 0.2\n")

    def test_rejects_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_config("nonsense = 1\n")

    def test_comments_and_blanks(self):
        cfg = parse_config("# comment\n\nseed = 99   # trailing\n")
        assert cfg.seed == 99


class TestCliCommands:
    def test_special_eval_kroots(self):
        runner = CliRunner()
        res = runner.invoke(main, ["special", "eval", "--fn", "kroots", "--z", "0.004,0.001"])
        assert res.exit_code == 0, res.output
        rec = json.loads(res.output)
        assert len(rec["roots"]) == 4

    def test_special_eval_hankel(self):
        runner = CliRunner()
        res = runner.invoke(main, ["special", "eval", "--fn", "h+", "--zeta", "2.0,0.5"])
        assert res.exit_code == 0, res.output
        rec = json.loads(res.output)
        assert "value" in rec and "derivative" in rec

    def test_special_eval_rejects_origin(self):
        runner = CliRunner()
        res = runner.invoke(main, ["special", "eval", "--fn", "h-", "--zeta", "0,0"])
        assert res.exit_code == 2

    def test_bad_config_exit_code(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("delta0 = 0.5\n")
        runner = CliRunner()
        res = runner.invoke(main, ["--config", str(p), "config"])
        assert res.exit_code == 2

    def test_verify_special_passes(self):
        runner = CliRunner()
        res = runner.invoke(main, ["verify", "special"])
        assert res.exit_code == 0, res.output
        rec = json.loads(res.output[: res.output.rindex("}") + 1])
        assert rec["special"]["passed"]

    def test_profile_solve_and_golden(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "profile.csv"
        res = runner.invoke(main, ["profile", "solve", "--out", str(out)])
        assert res.exit_code == 0, res.output
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        golden = np.loadtxt("tests/golden/profile_sample.csv", delimiter=",", skiprows=1)
        for r_g, rho_g in golden:
            i = np.argmin(np.abs(data[:, 0] - r_g))
            assert abs(data[i, 0] - r_g) < 1e-12   # golden pins exact nodes
            assert abs(data[i, 1] - rho_g) < 1e-9, r_g

    def test_determinism(self, tmp_path):
        runner = CliRunner()
        outs = []
        for k in (1, 2):
            out = tmp_path / f"m{k}.csv"
            res = runner.invoke(main, ["modes", "build", "--out", str(out)])
            assert res.exit_code == 0, res.output
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
