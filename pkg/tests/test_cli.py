import csv
import json
import subprocess
import sys

import pytest

from stirap import cli
from stirap.propagator import CSV_COLUMNS

WORKED = ["--epsilon", "0.01", "--r", "-0.4", "--sigma-ns", "5", "--set", "1"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestDesign:
    def test_worked_example(self, capsys, tmp_path):
        path = tmp_path / "d.json"
        code, out, _ = run(capsys, "design", *WORKED, "--json", str(path))
        assert code == 0
        payload = json.loads(out)
        assert payload == json.loads(path.read_text())
        assert payload["n_i"] == pytest.approx(11.3128, abs=1e-4)
        assert payload["T_ns"] == pytest.approx(115.128, abs=1e-3)
        assert payload["set_kind"] == "1"
        assert payload["global_ok"] is False

    def test_degenerate_window_is_invalid(self, capsys):
        code, _, err = run(capsys, "design", "--epsilon", str(2**-0.5), "--r", "-1", "--sigma-ns", "30")
        assert code == 2
        assert "degenerate" in err
        assert "warning:" in err

    @pytest.mark.parametrize("argv", [
        ["design", "--epsilon", "0", "--r", "-1", "--sigma-ns", "30"],
        ["design", "--epsilon", "0.05", "--r", "-1", "--sigma-ns", "-3"],
        ["design", "--epsilon", "0.05", "--r", "-1"],
        ["design", "--epsilon", "abc", "--r", "-1", "--sigma-ns", "30"],
        ["bogus"],
    ])
    def test_invalid_input(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2


class TestConfig:
    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# worked example\nepsilon = 0.01\nr = -0.4\nsigma-ns = 5\nset_kind = 1\n")
        code, out, _ = run(capsys, "--config", str(cfg), "design")
        assert code == 0 and json.loads(out)["T_ns"] == pytest.approx(115.128, abs=1e-3)
        code, out, _ = run(capsys, "--config", str(cfg), "design", "--sigma-ns", "10")
        assert json.loads(out)["T_ns"] == pytest.approx(230.256, abs=1e-3)

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epsilon = 0.01\nbogus = 3\n")
        code, _, err = run(capsys, "--config", str(cfg), "design")
        assert code == 2 and "bogus" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "--config", str(tmp_path / "nope.cfg"), "design")[0] == 2


class TestSimulate:
    def test_csv_and_verify(self, capsys, tmp_path):
        path = tmp_path / "sim.csv"
        code, out, _ = run(capsys, "simulate", *WORKED, "--omega-mhz", "70", "--decimation", "10",
                           "--output", str(path), "--verify")
        assert code == 0
        assert "p2=0.984401" in out and " ok" in out
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert float(rows[-1][CSV_COLUMNS.index("p2")]) == pytest.approx(0.984401, abs=1e-6)

    def test_zero_amplitude_stays_put(self, capsys):
        code, out, _ = run(capsys, "simulate", *WORKED, "--omega-mhz", "0")
        assert code == 0 and "p0=1.000000" in out

    def test_coarse_step_is_runtime_failure(self, capsys):
        code, _, err = run(capsys, "simulate", *WORKED, "--step-ns", "1")
        assert code == 1 and "numerical failure" in err

    def test_bad_decimation(self, capsys):
        assert run(capsys, "simulate", *WORKED, "--decimation", "0")[0] == 2


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--epsilon", "0.05", "--r", "-2", "--sigma-ns", "30")
    assert code == 0
    assert out.count("PASS") == 3 and "FAIL" not in out


class TestSweep:
    def test_env_output_dir_and_replay(self, capsys, tmp_path, monkeypatch):
        out_dir = tmp_path / "env"
        monkeypatch.setenv("STIRAP_OUTPUT_DIR", str(out_dir))
        code, out, _ = run(capsys, "sweep", "--kind", "cost", "--points", "3", "--sigma-min-ns", "10",
                           "--sigma-max-ns", "30")
        assert code == 0 and "9 rows" in out
        (csv_path,) = out_dir.glob("cost_*.csv")
        (json_path,) = out_dir.glob("cost_*.json")
        sidecar = json.loads(json_path.read_text())
        assert sidecar["csv"] == csv_path.name
        assert set(sidecar) >= {"grid", "columns", "summary", "config", "software", "created_utc", "wall_seconds"}

        replay_dir = tmp_path / "replay"
        code, _, _ = run(capsys, "sweep", "--from-sidecar", str(json_path), "--out-dir", str(replay_dir))
        assert code == 0
        (replayed,) = replay_dir.glob("cost_*.csv")
        assert replayed.read_bytes() == csv_path.read_bytes()

    @pytest.mark.parametrize("argv, needle", [
        (["--kind", "theta_f", "--epsilon", "0.1"], "--epsilon"),
        (["--kind", "cost", "--baseline-nt", "2"], "--baseline-nt"),
        (["--kind", "truncation", "--epsilons", "0.1", "--quoted-epsilons"], "mutually exclusive"),
        (["--kind", "truncation", "--r-max", "1"], "negative"),
        (["--kind", "cost", "--points", "1"], "--points"),
        (["--kind", "population", "--sigma-min-ns", "50", "--sigma-max-ns", "10"], "sigma"),
        (["--kind", "truncation", "--epsilons", "0.1,1.5"], "epsilon"),
        ([], "--kind"),
    ])
    def test_rejected_before_work(self, capsys, tmp_path, argv, needle):
        code, _, err = run(capsys, "sweep", "--out-dir", str(tmp_path), *argv)
        assert code == 2 and needle in err
        assert not list(tmp_path.iterdir())

    def test_sidecar_excludes_grid_flags(self, capsys, tmp_path):
        side = tmp_path / "x.json"
        side.write_text("{}")
        code, _, err = run(capsys, "sweep", "--from-sidecar", str(side), "--points", "3")
        assert code == 2 and "--from-sidecar" in err

    def test_quoted_epsilons(self, capsys, tmp_path):
        code, out, _ = run(capsys, "sweep", "--kind", "truncation", "--quoted-epsilons", "--points", "2",
                           "--out-dir", str(tmp_path))
        assert code == 0 and "10 rows" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "stirap", "design", *WORKED], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["T_ns"] == pytest.approx(115.128, abs=1e-3)
