import csv
import io
import json

import numpy as np
import pytest

from spinprod import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def outcome_map(report):
    return {o["outcome"]: o for o in report["outcomes"]}


class TestSimulate:
    def test_strong_nmem_on_bell(self, capsys):
        code, out, _ = run(capsys, "simulate", "--scheme", "nmem", "--theta", "0", "--input", "bell-phi+")
        assert code == 0
        rep = json.loads(out)
        outs = outcome_map(rep)
        assert outs[1]["probability"] == pytest.approx(1, abs=1e-12)
        assert outs[-1]["probability"] == 0 and outs[-1]["state"] is None
        assert outs[1]["purity"] == pytest.approx(1, abs=1e-12)
        assert rep["strength"] == 1

    def test_zero_strength_mem(self, capsys):
        code, out, _ = run(
            capsys, "simulate", "--scheme", "mem", "--theta1", "0", "--theta2", "45", "--deg", "--input", "plus-plus"
        )
        assert code == 0
        rep = json.loads(out)
        assert rep["delta_gamma"] == pytest.approx(0.5, abs=1e-12)
        for o in rep["outcomes"]:
            assert o["probability"] == pytest.approx(0.5, abs=1e-12)
            assert o["purity"] == pytest.approx(0.5, abs=1e-12)

    def test_erasure_success(self, capsys):
        code, out, _ = run(capsys, "simulate", "--scheme", "erasure", "--theta", str(np.pi / 8))
        assert code == 0
        rep = json.loads(out)
        assert rep["success_probability"] == pytest.approx(0.25, abs=1e-12)
        assert sum(o["probability"] for o in rep["outcomes"]) == pytest.approx(1, abs=1e-12)
        assert sum(o["probability"] for o in rep["local_outcomes"]) == pytest.approx(0.25, abs=1e-12)

    def test_state_matrix_shape(self, capsys):
        _, out, _ = run(capsys, "simulate", "--scheme", "nmem", "--theta", "0.3", "--phi", "1.1")
        state = json.loads(out)["outcomes"][0]["state"]
        assert np.array(state).shape == (4, 4, 2)

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "simulate", "--scheme", "nmem", "--theta", "0.2", "--format", "csv")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["outcome"] for r in rows] == ["1", "-1"]
        assert "\r" not in out

    def test_custom_amplitudes(self, capsys):
        code, out, _ = run(
            capsys, "simulate", "--scheme", "nmem", "--theta", "0", "--amplitudes", "0", "0", "2", "0", "0", "0", "0", "0"
        )
        assert code == 0
        assert outcome_map(json.loads(out))[-1]["probability"] == pytest.approx(1)

    @pytest.mark.parametrize(
        "argv",
        [
            ["simulate", "--scheme", "nmem", "--theta", "0.1", "--input", "nope"],
            ["simulate", "--scheme", "nmem"],
            ["simulate", "--scheme", "nmem", "--theta", "2.0"],
            ["simulate", "--scheme", "mem", "--theta1", "0.1"],
            ["simulate", "--scheme", "nmem", "--theta", "0.1", "--amplitudes", *["0"] * 8],
        ],
    )
    def test_config_errors(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 2
        assert "error" in err

    def test_argparse_error_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["simulate", "--scheme", "bogus"])
        assert exc.value.code == 2

    def test_unwritable_output(self, capsys, tmp_path):
        target = tmp_path / "missing" / "out.json"
        code, _, err = run(capsys, "simulate", "--scheme", "nmem", "--theta", "0.1", "--output", str(target))
        assert code == 2
        assert "cannot write" in err

    def test_output_dir_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
        code, out, _ = run(capsys, "simulate", "--scheme", "nmem", "--theta", "0.1", "-o", "rel.json")
        assert code == 0 and out == ""
        assert json.loads((tmp_path / "rel.json").read_text())["scheme"] == "nmem"


class TestVerify:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--cases", "20")
        assert code == 0
        assert out.strip().splitlines()[-1].startswith("22/22")

    def test_impossible_tolerance_fails(self, capsys):
        code, out, _ = run(capsys, "verify", "--cases", "5", "--tolerance", "1e-15")
        assert code == 1
        failed = [line for line in out.splitlines() if " FAIL " in line]
        assert failed
        assert all("e-" in line for line in failed)

    def test_deterministic(self, capsys):
        first = run(capsys, "verify", "--cases", "10", "--seed", "42", "--format", "json")[1]
        second = run(capsys, "verify", "--cases", "10", "--seed", "42", "--format", "json")[1]
        assert first == second
        assert json.loads(first)["seed"] == 42

    def test_bad_cases(self, capsys):
        assert run(capsys, "verify", "--cases", "0")[0] == 2


class TestSweepNoise:
    def test_small_grid(self, capsys):
        code, out, _ = run(capsys, "sweep-noise", "--grid", "2", "2")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "concurrence,strength,phi,delta_gamma,feasible"
        assert lines[1:] == [
            "0,0,0,0,true",
            "0,1,,,false",
            f"1,0,{cli.fmt(np.pi)},0.5,true",
            "1,1,0,0,true",
        ]

    def test_default_grid_diagonal(self, capsys):
        code, out, _ = run(capsys, "sweep-noise")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 101 * 101
        diag = [r for r in rows if r["concurrence"] == r["strength"]]
        assert len(diag) == 101
        assert all(float(r["delta_gamma"]) < 1e-12 for r in diag)

    def test_deterministic(self, capsys):
        a = run(capsys, "sweep-noise", "--grid", "11", "7")[1]
        b = run(capsys, "sweep-noise", "--grid", "11", "7")[1]
        assert a == b

    def test_json_roundtrip(self, capsys, tmp_path):
        path = tmp_path / "s.json"
        assert run(capsys, "sweep-noise", "--grid", "5", "5", "--format", "json", "-o", str(path))[0] == 0
        data = json.loads(path.read_text())
        assert json.loads(json.dumps(data, indent=2) + "\n") == data
        assert json.dumps(data, indent=2) + "\n" == path.read_text()
        assert len(data) == 25

    def test_grid_too_small(self, capsys):
        assert run(capsys, "sweep-noise", "--grid", "1", "5")[0] == 2


class TestStrengthLaw:
    def test_default(self, capsys):
        code, out, _ = run(capsys, "strength-law", "--points", "9")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 9
        assert all(float(r["residual"]) < 1e-10 for r in rows)

    def test_tolerance_failure(self, capsys):
        assert run(capsys, "strength-law", "--points", "5", "--tolerance", "-1")[0] == 1

    def test_bad_points(self, capsys):
        assert run(capsys, "strength-law", "--points", "1")[0] == 2
