"""End-to-end tests of the command line entry point."""

import json

import numpy as np
import pandas as pd
import pytest

from src.cli.main import main
from src.models.records import SERIES_COLUMNS
from tests.fixtures.test_data import write_document

pytestmark = pytest.mark.integration

MONITOR_CONSTANTS = {"theta": 0.75, "C_user": 1.0, "m_tilde": 0.5, "A": 0.5, "ell": 66.0}


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Keep runs away from a developer .env and the default output root."""
    monkeypatch.chdir(tmp_path)
    for name in ("CHEMOTAXIS_LOG_LEVEL", "CHEMOTAXIS_LOG_FORMAT", "CHEMOTAXIS_LOG_FILE"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("CHEMOTAXIS_OUTPUT_ROOT", str(tmp_path / "runs"))


class TestRunCommand:
    """Test the run subcommand."""

    def test_equilibrium_run(self, tmp_path, config_file):
        """Test the constant state produces a complete run directory."""
        out = tmp_path / "out"
        assert main(["run", "--config", str(config_file), "--out", str(out)]) == 0

        header = (out / "series.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == ",".join(SERIES_COLUMNS)
        assert header == "t,dt,mass_u,mass_v,mass_w,sup_u,F,D,cross_uv,entropy,weighted_w,weighted_v,psi"

        verdict = (out / "verdict.txt").read_text(encoding="utf-8")
        assert verdict.startswith("kind: GlobalWithinHorizon\n")

        series = pd.read_csv(out / "series.csv")
        assert series["t"].iloc[0] == 0.0
        assert series["t"].iloc[-1] == pytest.approx(0.05)
        assert np.all(np.diff(series["t"]) > 0)
        assert np.max(np.abs(series["F"] - series["F"].iloc[0])) <= 1e-10

        config = json.loads((out / "config.json").read_text(encoding="utf-8"))
        assert config["kappa"] == 4.0
        assert not (out / "energy.svg").exists()

    def test_output_is_deterministic(self, tmp_path):
        """Test two identical runs write identical bytes."""
        path = write_document(tmp_path, perturbation=0.1, plots=True)
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(path), "--out", str(first)]) == 0
        assert main(["run", "--config", str(path), "--out", str(second)]) == 0

        for name in ("series.csv", "config.json", "verdict.txt", "energy.svg", "supnorm.svg"):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_plots_flag_overrides_document(self, tmp_path):
        """Test --plots on writes both figures."""
        path = write_document(tmp_path, plots=False)
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out), "--plots", "on"]) == 0
        assert (out / "energy.svg").exists()
        assert (out / "supnorm.svg").exists()

    def test_stride_flag(self, tmp_path, config_file):
        """Test a larger stride emits fewer rows."""
        dense, sparse = tmp_path / "dense", tmp_path / "sparse"
        main(["run", "--config", str(config_file), "--out", str(dense), "--stride", "1"])
        main(["run", "--config", str(config_file), "--out", str(sparse), "--stride", "5"])
        assert len(pd.read_csv(sparse / "series.csv")) < len(pd.read_csv(dense / "series.csv"))

    def test_output_dir_from_document(self, tmp_path):
        """Test output_dir is used when --out is absent."""
        path = write_document(tmp_path, output_dir=str(tmp_path / "from_doc"))
        assert main(["run", "--config", str(path)]) == 0
        assert (tmp_path / "from_doc" / "series.csv").exists()

    def test_output_root_from_env(self, tmp_path, config_file):
        """Test CHEMOTAXIS_OUTPUT_ROOT is the last fallback."""
        assert main(["run", "--config", str(config_file)]) == 0
        assert (tmp_path / "runs" / "series.csv").exists()

    def test_underflow_is_inconclusive(self, tmp_path):
        """Test a run whose first step is below dt_min exits with 2."""
        path = write_document(tmp_path, dt_min=1e-3)
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out)]) == 2
        assert (out / "verdict.txt").read_text(encoding="utf-8").startswith("kind: Inconclusive\n")
        assert len(pd.read_csv(out / "series.csv")) == 1

    def test_monitor_writes_inequality(self, tmp_path):
        """Test the comparison monitor adds inequality.csv."""
        path = write_document(tmp_path, monitor=True, **MONITOR_CONSTANTS)
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out)]) == 0
        frame = pd.read_csv(out / "inequality.csv")
        assert list(frame.columns) == ["t", "lhs", "rhs", "ratio"]
        assert len(frame) == len(pd.read_csv(out / "series.csv"))

    def test_monitor_reports_energy_threshold(self, tmp_path):
        """Test verdict.txt carries K = ell + |B|/e and the time bound."""
        path = write_document(tmp_path, monitor=True, **MONITOR_CONSTANTS)
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out)]) == 0
        lines = (out / "verdict.txt").read_text(encoding="utf-8").splitlines()
        values = dict(line.split(": ", 1) for line in lines)
        ball_volume = 8.0 * np.pi ** 2 / 15.0
        assert float(values["energy_threshold"]) == pytest.approx(66.0 + ball_volume / np.e, rel=1e-12)
        assert float(values["ell"]) == 66.0
        assert float(values["time_bound"]) > 1.0

    def test_plain_run_has_no_monitor_evidence(self, tmp_path):
        """Test K is only reported when the monitor is on."""
        path = write_document(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out)]) == 0
        assert "energy_threshold" not in (out / "verdict.txt").read_text(encoding="utf-8")


class TestConfigErrors:
    """Test exit codes for configuration problems."""

    def test_check_config_prints_resolved(self, capsys, config_file):
        """Test check-config prints the resolved document."""
        assert main(["check-config", "--config", str(config_file)]) == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed["kappa"] == 4.0
        assert printed["theta"] == pytest.approx(8.0 / 9.0)
        assert printed["cells"] == 32

    def test_invalid_document(self, tmp_path, capsys):
        """Test a constraint violation exits with 1 and names the field."""
        path = write_document(tmp_path, kappa=3)
        assert main(["check-config", "--config", str(path)]) == 1
        assert "kappa: kappa must exceed dim-2" in capsys.readouterr().err

    def test_malformed_document(self, tmp_path):
        """Test malformed JSON exits with 1."""
        path = tmp_path / "broken.json"
        path.write_text('{"dim": 5,', encoding="utf-8")
        assert main(["run", "--config", str(path)]) == 1

    def test_missing_document(self, tmp_path):
        """Test a missing file exits with 1."""
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 1

    def test_unknown_command(self, config_file):
        """Test argparse refuses an unknown subcommand."""
        with pytest.raises(SystemExit):
            main(["explode", "--config", str(config_file)])


class TestSynthIcCommand:
    """Test the synth-ic subcommand."""

    def test_empty_ladder(self, tmp_path, config_file):
        """Test an empty ladder writes only the header."""
        out = tmp_path / "out"
        assert main(["synth-ic", "--config", str(config_file), "--out", str(out)]) == 0
        text = (out / "family.csv").read_text(encoding="utf-8")
        assert text == "eta,F,cross_uv,L1_dist_u,W22_dist_v\n"

    def test_ladder_rows(self, tmp_path):
        """Test one row per eta with the cross term growing along the ladder."""
        path = write_document(tmp_path, cells=1024, u0=0.0, v0=0.0, w0=0.0, etas=[0.25, 0.125])
        out = tmp_path / "out"
        assert main(["synth-ic", "--config", str(path), "--out", str(out)]) == 0
        frame = pd.read_csv(out / "family.csv")
        assert list(frame["eta"]) == [0.25, 0.125]
        assert frame["cross_uv"].iloc[1] > frame["cross_uv"].iloc[0]

    def test_eta_at_limit(self, tmp_path):
        """Test eta at eta_star is refused with exit 1."""
        path = write_document(tmp_path, cells=1024, etas=[0.5])
        assert main(["synth-ic", "--config", str(path), "--out", str(tmp_path / "out")]) == 1


class TestSweepCommand:
    """Test the sweep subcommand."""

    def test_two_by_two(self, tmp_path):
        """Test a 2x2 sweep writes four point directories and four summary rows."""
        path = write_document(tmp_path, sweep={"tau": [0, 1], "eps": [0, 1]})
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(path), "--out", str(out)]) == 0

        for index in range(4):
            assert (out / f"point_{index}" / "series.csv").exists()
        summary = pd.read_csv(out / "sweep_summary.csv")
        assert list(summary.columns) == ["point", "tau", "eps", "verdict", "final_F", "sup_u"]
        assert list(summary["tau"]) == [0, 0, 1, 1]
        assert list(summary["eps"]) == [0, 1, 0, 1]
        assert set(summary["verdict"]) == {"GlobalWithinHorizon"}

    def test_duplicate_values(self, tmp_path):
        """Test duplicate sweep values exit with 1."""
        path = write_document(tmp_path, sweep={"cells": [32, 32]})
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "out")]) == 1


class TestPhiTableCommand:
    """Test the phi-table subcommand."""

    def test_table_ends_at_divergence(self, tmp_path):
        """Test the last row sits at the time bound where phi diverges."""
        path = write_document(tmp_path, **MONITOR_CONSTANTS)
        out = tmp_path / "out"
        assert main(["phi-table", "--config", str(path), "--out", str(out)]) == 0

        frame = pd.read_csv(out / "phi_table.csv")
        assert list(frame.columns) == ["s", "phi", "ode_rhs", "fd_derivative", "rel_residual"]
        assert frame["s"].iloc[0] == 1.0
        assert frame["phi"].iloc[0] == pytest.approx(66.0)
        assert np.isinf(frame["phi"].iloc[-1])

    def test_ell_below_threshold(self, tmp_path):
        """Test ell at or below the threshold is refused."""
        path = write_document(tmp_path, **{**MONITOR_CONSTANTS, "ell": 33.0, "monitor": True})
        assert main(["phi-table", "--config", str(path), "--out", str(tmp_path / "out")]) == 1
