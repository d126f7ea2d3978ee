"""Tests for the YAML config layer and the command-line driver."""

from __future__ import annotations

import json
import textwrap

import numpy as np
import pytest

from spinquench.cli import main
from spinquench.config import (
    ConfigError,
    evaluate_expression,
    load_config,
    parse_config,
    serialize_config,
)
from spinquench.hamiltonians import Model, Parity

LMG_CONFIG = textwrap.dedent("""\
    model:
      name: lmg
      j: 40
      parity: "+"
      gamma_x: -3
      gamma_y: -5
    states:
      - jz0_over_j: "-cos(pi/3)"
        phi0: "pi/2"
    time_grid:
      kind: linear
      t_max: 30
      n_points: 301
""")

DICKE_SCAN_CONFIG = textwrap.dedent("""\
    model:
      name: dicke
      j: 4
      parity: plus
      omega: 1
      omega0: 1
      gamma: 1
      nmax: 60
    target_energy: -1.8
    jz_values: [-0.45, 0.1]
    detection:
      gap_tolerance: 0.12
    time_grid:
      t_max: 20
      n_points: 401
""")

CLASSICAL_CONFIG = textwrap.dedent("""\
    model:
      name: dicke
      j: 4
      omega: 1
      omega0: 1
      gamma: 1
      nmax: 60
    analyses:
      poincare:
        energy: -1.8
        n_phi: 8
        n_jz: 9
        crossings: 10
""")


class TestExpressions:
    def test_literals_and_expressions(self):
        assert evaluate_expression(3) == 3.0
        assert evaluate_expression("-cos(pi/3)") == pytest.approx(-0.5)
        assert evaluate_expression("2*pi/5") == pytest.approx(2 * np.pi / 5)
        assert evaluate_expression("sqrt(2)**2") == pytest.approx(2.0)

    @pytest.mark.parametrize("bad", [
        "__import__('os')", "open('/etc/passwd')", "x + 1", "[1,2]",
        "lambda: 1", True, None,
    ])
    def test_unsafe_or_invalid_rejected(self, bad):
        with pytest.raises(ConfigError):
            evaluate_expression(bad)


class TestConfigParsing:
    def test_lmg_round_trip(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text(LMG_CONFIG)
        cfg = load_config(path)
        assert cfg.model.model is Model.LMG
        assert cfg.model.parity is Parity.PLUS
        assert cfg.states[0].jz0_over_j == pytest.approx(-0.5)
        assert cfg.states[0].phi0 == pytest.approx(np.pi / 2)
        assert cfg.t_max == 30.0
        # serialization parses back to the same physics
        again = parse_config(__import__("yaml").safe_load(serialize_config(cfg)))
        assert again.model == cfg.model
        assert again.states == cfg.states
        assert again.t_max == cfg.t_max

    def test_parity_aliases(self):
        for alias, parity in (("+", Parity.PLUS), ("-", Parity.MINUS),
                              ("minus", Parity.MINUS)):
            cfg = parse_config({"model": {"name": "lmg", "j": 4,
                                          "parity": alias, "gamma_x": -2}})
            assert cfg.model.parity is parity

    def test_missing_model_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"states": []})

    def test_bad_model_name_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"model": {"name": "ising", "j": 4}})

    def test_bad_grid_kind_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"model": {"name": "lmg", "j": 4, "gamma_x": -2},
                          "time_grid": {"kind": "quadratic"}})

    def test_malformed_yaml_reports_line(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("model:\n  name: lmg\n   j: 4\n")
        with pytest.raises(ConfigError, match="line 3"):
            load_config(path)


class TestCliSurvival:
    def test_survival_produces_artifacts(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG)
        out = tmp_path / "out"
        assert main(["survival", "--config", str(cfg), "--out", str(out)]) == 0
        sp = np.genfromtxt(out / "state0_sp.csv", delimiter=",", names=True)
        assert set(sp.dtype.names) == {"t", "sp_numerical", "sp_analytic",
                                       "envelope"}
        assert sp["sp_numerical"][0] == pytest.approx(1.0, abs=1e-12)
        assert (out / "state0_components.csv").exists()
        assert (out / "state0_spectrum_fit.csv").exists()
        manifest = json.loads((out / "survival_manifest.json").read_text())
        assert manifest["command"] == "survival"
        assert "state0_sp.csv" in manifest["artifacts"]
        assert not manifest["warnings"]

    def test_runs_are_deterministic(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["survival", "--config", str(cfg), "--out", str(out_a)]) == 0
        assert main(["survival", "--config", str(cfg), "--out", str(out_b)]) == 0
        for name in ("state0_sp.csv", "state0_components.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_gate_failure_warns_but_succeeds(self, tmp_path):
        # a state centered on the LMG separatrix has a non-Gaussian ladder
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG.replace('"-cos(pi/3)"', "0.999"))
        out = tmp_path / "out"
        assert main(["survival", "--config", str(cfg), "--out", str(out)]) == 0
        sp = np.genfromtxt(out / "state0_sp.csv", delimiter=",", names=True)
        assert set(sp.dtype.names) == {"t", "sp_numerical"}
        manifest = json.loads((out / "survival_manifest.json").read_text())
        assert any("gate" in w.lower() for w in manifest["warnings"])

    def test_override_flag(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG)
        out = tmp_path / "out"
        assert main(["survival", "--config", str(cfg), "--out", str(out),
                     "--override", "time_grid.n_points=51",
                     "--override", "time_grid.t_max=5"]) == 0
        sp = np.genfromtxt(out / "state0_sp.csv", delimiter=",", names=True)
        assert sp["t"].size == 51
        assert sp["t"][-1] == pytest.approx(5.0)

    def test_missing_states_is_config_error(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG.split("states:")[0])
        assert main(["survival", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1

    def test_bad_config_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("model:\n  name: lmg\n   j: 4\n")
        assert main(["survival", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["survival", "--config", str(tmp_path / "nope.yaml"),
                     "--out", str(tmp_path / "o")]) == 2


class TestCliSpectrum:
    def test_spectrum_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG)
        out = tmp_path / "out"
        assert main(["spectrum", "--config", str(cfg), "--out", str(out)]) == 0
        rows = np.genfromtxt(out / "eigenvalues.csv", delimiter=",", names=True)
        assert rows["energy"].size == 41  # 2J+1 = 81 states, plus sector 41
        assert np.all(np.diff(rows["energy"]) >= 0)
        assert (out / "critical_values.txt").exists()


class TestCliDickeScan:
    def test_scan_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(DICKE_SCAN_CONFIG)
        out = tmp_path / "out"
        assert main(["dicke-scan", "--config", str(cfg), "--out", str(out)]) == 0
        diag = np.genfromtxt(out / "diagnostics.csv", delimiter=",", names=True)
        assert diag["state"].size == 2
        assert (out / "sequence_table.csv").exists()
        for idx in (0, 1):
            assert (out / f"state{idx}_sp.csv").exists()
        manifest = json.loads((out / "dicke-scan_manifest.json").read_text())
        assert manifest["parameters"]["state0_jz0_over_j"] == pytest.approx(-0.45)

    def test_scan_requires_target_energy(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(DICKE_SCAN_CONFIG.replace("target_energy: -1.8\n", ""))
        assert main(["dicke-scan", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1

    def test_scan_rejects_lmg_model(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG + "target_energy: -2.0\njz_values: [-0.5]\n")
        assert main(["dicke-scan", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1


class TestCliClassical:
    def test_poincare_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(CLASSICAL_CONFIG)
        out = tmp_path / "out"
        assert main(["classical", "--config", str(cfg), "--out", str(out)]) == 0
        pts = np.genfromtxt(out / "poincare.csv", delimiter=",", names=True)
        assert pts["phi"].size > 0
        manifest = json.loads((out / "classical_manifest.json").read_text())
        assert manifest["parameters"]["poincare_drift"] < 1e-8

    def test_classical_without_analyses_errors(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(CLASSICAL_CONFIG.split("analyses:")[0])
        assert main(["classical", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1


class TestCliReport:
    def test_report_prints_manifest(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(LMG_CONFIG)
        out = tmp_path / "out"
        assert main(["survival", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["report", "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "survival_manifest.json" in text
        assert "state0_ipr" in text

    def test_report_on_empty_dir_fails(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == 1
