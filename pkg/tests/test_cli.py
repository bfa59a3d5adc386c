import json

import numpy as np
import pytest

from cohlab import sdp
from cohlab.cli import main
from cohlab.measures import max_coherence_problem
from cohlab.qmat import DensityMatrix, MultipartiteOperator, save_operator


@pytest.fixture
def bell_file(tmp_path, bell_state):
    path = str(tmp_path / "bell.json")
    save_operator(path, bell_state.op)
    return path


@pytest.fixture
def ghz_file(tmp_path, ghz_state):
    path = str(tmp_path / "ghz.json")
    save_operator(path, ghz_state.op)
    return path


class TestMeasureCommand:
    def test_cmax(self, bell_file, tmp_path):
        out = str(tmp_path / "out.json")
        rc = main(["measure", "--name", "cmax", "--state", bell_file,
                   "--pattern", "0", "--out", out, "--certificate"])
        assert rc == 0
        doc = json.load(open(out))
        assert doc["value_bits"] == pytest.approx(1.0, abs=1e-6)
        assert doc["method"] == "sdp"
        assert "tau" in doc["certificate"]

    def test_cr_and_cmin(self, bell_file, tmp_path):
        for name in ("cr", "cmin"):
            out = str(tmp_path / f"{name}.json")
            rc = main(["measure", "--name", name, "--state", bell_file,
                       "--pattern", "0", "--out", out])
            assert rc == 0
            assert json.load(open(out))["value_bits"] == \
                pytest.approx(1.0, abs=1e-7)

    def test_emax_partition(self, bell_file, tmp_path):
        out = str(tmp_path / "emax.json")
        rc = main(["measure", "--name", "emax", "--state", bell_file,
                   "--partition", "0|1", "--out", out])
        assert rc == 0
        assert json.load(open(out))["value_bits"] == \
            pytest.approx(1.0, abs=1e-6)

    def test_cmi_and_monogamy(self, ghz_file, tmp_path):
        out = str(tmp_path / "cmi.json")
        rc = main(["measure", "--name", "cmi", "--state", ghz_file,
                   "--groups", "0|1|2", "--out", out])
        assert rc == 0
        assert json.load(open(out))["value_bits"] == \
            pytest.approx(1.0, abs=1e-9)
        out2 = str(tmp_path / "mono.json")
        rc = main(["measure", "--name", "monogamy", "--state", ghz_file,
                   "--parts", "0|1", "--memory", "2", "--out", out2])
        assert rc == 0
        assert json.load(open(out2))["value_bits"] == \
            pytest.approx(-1.0, abs=1e-9)

    def test_missing_file_is_input_error(self):
        assert main(["measure", "--name", "cr", "--state",
                     "/nonexistent.json"]) == 2

    def test_smooth_flag(self, bell_file, tmp_path):
        out = str(tmp_path / "sm.json")
        rc = main(["measure", "--name", "cmax", "--state", bell_file,
                   "--pattern", "0", "--eps", "0.05", "--out", out])
        assert rc == 0
        assert json.load(open(out))["value_bits"] < 1.0


class TestGameCommand:
    def test_verify_bell(self, bell_file, tmp_path):
        out = str(tmp_path / "game.json")
        rc = main(["game", "verify", "--state", bell_file, "--out", out])
        assert rc == 0
        doc = json.load(open(out))
        assert doc["ratio"] == pytest.approx(2.0, abs=1e-6)


class TestSdpCommand:
    def test_solve_file(self, tmp_path, plus_state, capsys):
        prob = max_coherence_problem(plus_state, [0], 0.0)
        path = str(tmp_path / "prob.json")
        sdp.save_problem(path, prob)
        rc = main(["sdp", "solve", path])
        assert rc == 0
        captured = capsys.readouterr().out
        assert "status: optimal" in captured
        assert "certificate_check: ok" in captured


class TestSuiteCommand:
    def test_run_and_exit_code(self, tmp_path):
        rep = str(tmp_path / "rep.json")
        csv_path = str(tmp_path / "rep.csv")
        rc = main(["suite", "run", "--suite", "S2,S9", "--trials", "2",
                   "--seed", "9", "--report", rep, "--csv", csv_path,
                   "--workers", "1"])
        assert rc == 0
        doc = json.load(open(rep))
        assert doc["aggregate"]["verdicts"].get("falsified", 0) == 0
        assert open(csv_path).read().startswith("suite,item")

    def test_bad_dims_exit_2(self):
        assert main(["suite", "run", "--suite", "S1", "--dims", "2xa",
                     "--workers", "1"]) == 2

    def test_bad_suite_exit_2(self):
        assert main(["suite", "run", "--suite", "S99", "--workers", "1"]) == 2

    def test_falsified_exit_1(self, monkeypatch):
        from cohlab import harness

        def fake_run(cfg):
            rec = harness.TrialRecord(
                suite="S1", item="x", kind="inequality", dims="2x2",
                trial=0, stream=0, eps=None, value=-1.0,
                verdict=harness.VERDICT_FALSIFIED)
            return harness.SuiteReport(
                config={}, environment={}, records=[rec],
                aggregate={"records": 1, "trials": 1,
                           "verdicts": {"falsified": 1},
                           "solver_failure_rate": 0.0})

        monkeypatch.setattr(harness, "run_suite", fake_run)
        assert main(["suite", "run", "--suite", "S1", "--workers", "1"]) == 1

    def test_solver_failure_rate_exit_3(self, monkeypatch):
        from cohlab import harness

        def fake_run(cfg):
            rec = harness.TrialRecord(
                suite="S1", item="solver", kind="value", dims="2x2",
                trial=0, stream=0, eps=None, value=float("nan"),
                verdict=harness.VERDICT_ERROR)
            return harness.SuiteReport(
                config={}, environment={}, records=[rec],
                aggregate={"records": 1, "trials": 1,
                           "verdicts": {"error": 1},
                           "solver_failure_rate": 1.0})

        monkeypatch.setattr(harness, "run_suite", fake_run)
        assert main(["suite", "run", "--suite", "S1", "--workers", "1"]) == 3

    def test_installed_entry_point(self):
        import subprocess

        out = subprocess.run(["cohlab", "--help"], capture_output=True,
                             text=True)
        assert out.returncode == 0
        assert "measure" in out.stdout and "suite" in out.stdout
