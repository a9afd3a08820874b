"""End-to-end tests of the command-line front door.

All tests call ``evpos.cli.main`` in-process so exit codes, stdout and
stderr can be asserted without spawning subprocesses.
"""

import json

import numpy as np
import pytest

import evpos.cli as cli
from evpos.cli import main
from evpos.presets import CheckResult, PresetReport
from evpos.semigroup import demo_generator


def write_doc(tmp_path, name, payload) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def write_demo(tmp_path) -> str:
    return write_doc(tmp_path, "demo.json", {"matrix": demo_generator().tolist()})


def run(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestAnalyze:
    def test_showcase_matrix_full_report(self, tmp_path, capsys):
        rc, out, err = run(capsys, ["analyze", "--matrix", write_demo(tmp_path)])
        assert rc == 0
        assert err == ""
        rep = json.loads(out)
        assert rep["tool"]["name"] == "evpos"
        assert rep["positivity"]["class"] == "UniformlyEventuallyStronglyPositive"
        assert rep["positivity"]["certified"] is True
        assert rep["irreducibility"]["classification"] == "PersistentlyIrreducible"
        assert rep["projection"]["available"] is True
        P = np.array(rep["projection"]["projection"])
        assert np.max(np.abs(P - np.ones((3, 3)) / 3.0)) <= 1e-10
        assert rep["certificate"]["spectral_bound"] == pytest.approx(9.0)
        # settings echo the defaults when no flags are given
        assert rep["input"]["settings"] == {
            "tol": 1e-9,
            "grid_points": 256,
            "t_max": 20.0,
        }

    def test_zero_matrix_positive_reducible(self, tmp_path, capsys):
        path = write_doc(tmp_path, "zero2.json", {"matrix": [[0.0, 0.0], [0.0, 0.0]]})
        rc, out, _ = run(capsys, ["analyze", "--matrix", path])
        assert rc == 0
        rep = json.loads(out)
        assert rep["positivity"]["class"] == "Positive"
        assert rep["irreducibility"]["classification"] == "Reducible"
        assert rep["projection"]["available"] is False

    def test_report_is_deterministic_apart_from_timings(self, tmp_path, capsys):
        path = write_demo(tmp_path)
        _, out1, _ = run(capsys, ["analyze", "--matrix", path])
        _, out2, _ = run(capsys, ["analyze", "--matrix", path])
        rep1, rep2 = json.loads(out1), json.loads(out2)
        rep1.pop("timings")
        rep2.pop("timings")
        assert json.dumps(rep1, sort_keys=True) == json.dumps(rep2, sort_keys=True)

    def test_report_out_writes_lf_terminated_file(self, tmp_path, capsys):
        path = write_demo(tmp_path)
        out_path = tmp_path / "report.json"
        rc, out, _ = run(
            capsys, ["analyze", "--matrix", path, "--report-out", str(out_path)]
        )
        assert rc == 0
        assert out == ""
        raw = out_path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")
        json.loads(raw)

    def test_document_tolerance_used_and_flag_wins(self, tmp_path, capsys):
        path = write_doc(
            tmp_path,
            "with_tol.json",
            {"matrix": demo_generator().tolist(), "tolerances": {"tol": 1e-6}},
        )
        _, out, _ = run(capsys, ["analyze", "--matrix", path])
        assert json.loads(out)["input"]["settings"]["tol"] == 1e-6
        _, out, _ = run(capsys, ["analyze", "--matrix", path, "--tol", "1e-8"])
        assert json.loads(out)["input"]["settings"]["tol"] == 1e-8


class TestAnalyzeInputErrors:
    def test_malformed_json_reports_line_and_column(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"matrix": [[1, 2],\n [3, }')
        rc, _, err = run(capsys, ["analyze", "--matrix", str(path)])
        assert rc == 1
        assert "line" in err and "column" in err

    def test_missing_file(self, capsys, tmp_path):
        rc, _, err = run(capsys, ["analyze", "--matrix", str(tmp_path / "nope.json")])
        assert rc == 1
        assert "cannot read" in err

    def test_unknown_field_rejected(self, tmp_path, capsys):
        path = write_doc(tmp_path, "extra.json", {"matrix": [[1.0]], "tool": "x"})
        rc, _, err = run(capsys, ["analyze", "--matrix", path])
        assert rc == 1
        assert "unknown fields" in err

    def test_non_square_rejected(self, tmp_path, capsys):
        path = write_doc(tmp_path, "rect.json", {"matrix": [[1.0, 2.0]]})
        rc, _, err = run(capsys, ["analyze", "--matrix", path])
        assert rc == 1
        assert "square" in err

    def test_dimension_cap(self, tmp_path, capsys):
        big = np.zeros((cli.MAX_MATRIX_DIM + 1, cli.MAX_MATRIX_DIM + 1))
        path = write_doc(tmp_path, "big.json", {"matrix": big.tolist()})
        rc, _, err = run(capsys, ["analyze", "--matrix", path])
        assert rc == 1
        assert "exceeds the cap" in err

    def test_non_finite_entries_rejected(self, tmp_path, capsys):
        path = tmp_path / "nan.json"
        path.write_text('{"matrix": [[NaN, 0.0], [0.0, 0.0]]}')
        rc, _, err = run(capsys, ["analyze", "--matrix", str(path)])
        assert rc == 1
        assert "finite" in err

    def test_non_numeric_entries_rejected(self, tmp_path, capsys):
        path = write_doc(tmp_path, "str.json", {"matrix": [["a"]]})
        rc, _, err = run(capsys, ["analyze", "--matrix", path])
        assert rc == 1
        assert "numbers" in err

    def test_nonpositive_tolerance_rejected(self, tmp_path, capsys):
        rc, _, err = run(
            capsys, ["analyze", "--matrix", write_demo(tmp_path), "--tol", "-1"]
        )
        assert rc == 1
        assert "positive" in err


class TestExamples:
    def test_matrix_suite_passes(self, capsys):
        rc, out, err = run(capsys, ["examples", "run", "ex5_2"])
        assert rc == 0
        assert err == ""
        rep = json.loads(out)
        assert rep["ok"] is True
        assert rep["preset"] == "ex5_2"
        assert all(c["passed"] for c in rep["checks"] if c["must_pass"])

    def test_shift_suite_passes(self, capsys):
        rc, out, _ = run(capsys, ["examples", "run", "ex3_10"])
        assert rc == 0
        assert json.loads(out)["ok"] is True

    def test_failed_must_pass_check_exits_two_with_witnesses(
        self, capsys, monkeypatch
    ):
        def broken(**kwargs):
            return PresetReport(
                preset="ex5_2",
                ok=False,
                checks=(
                    CheckResult(
                        name="rigged",
                        passed=False,
                        must_pass=True,
                        details={"observed": -1.0},
                    ),
                ),
            )

        monkeypatch.setitem(cli.PRESETS, "ex5_2", broken)
        rc, out, err = run(capsys, ["examples", "run", "ex5_2"])
        assert rc == 2
        assert json.loads(out)["ok"] is False
        payload = json.loads(err)
        assert payload["error"] == "ConsistencyViolation"
        assert payload["witnesses"]
        assert "rigged" in json.dumps(payload["witnesses"])

    def test_unknown_suite_is_a_usage_error(self, capsys):
        rc, _, err = run(capsys, ["examples", "run", "nope"])
        assert rc == 1
        assert "invalid choice" in err


class TestTimeseries:
    def test_pairing_series_exact_column(self, capsys):
        rc, out, err = run(capsys, ["timeseries", "pairing", "--depth", "3"])
        assert rc == 0
        assert err == ""
        lines = out.splitlines()
        assert lines[0] == "t,pairing_1_1,pairing_1_1_exact"
        assert len(lines) == 1 + (1 << 3) + 1
        cells = dict()
        for line in lines[1:]:
            t, val, exact = line.split(",")
            cells[t] = (val, exact)
        assert cells["0.25"] == ("0.25", "1/4")
        assert cells["1"][1] == "0"

    def test_pairing_rejects_other_inputs(self, capsys):
        rc, _, err = run(capsys, ["timeseries", "pairing", "ex5_2"])
        assert rc == 1
        assert "ex3_10" in err

    def test_support_front_tracks_predicted_front(self, capsys):
        rc, out, _ = run(capsys, ["timeseries", "support-front", "--t-max", "1.0"])
        assert rc == 0
        lines = out.splitlines()
        assert lines[0] == "t,support_front_x,support_lo_cell,predicted_x"
        assert len(lines) == 1 + 8  # q = 1..8 at the default h = 1/8
        for line in lines[1:]:
            _, front, _, predicted = line.split(",")
            assert float(front) == float(predicted)

    def test_support_front_rejects_other_inputs(self, capsys):
        rc, _, err = run(capsys, ["timeseries", "support-front", "ex3_10"])
        assert rc == 1
        assert "ex5_6" in err

    def test_rescaled_distance_decays(self, capsys):
        rc, out, _ = run(
            capsys,
            ["timeseries", "rescaled-distance", "ex5_2", "--grid-points", "16"],
        )
        assert rc == 0
        rows = [line.split(",") for line in out.splitlines()[1:]]
        dist = [float(r[1]) for r in rows]
        assert dist[-1] < dist[0]
        assert dist[-1] <= 1e-6

    def test_orbit_from_matrix_file(self, tmp_path, capsys):
        path = write_demo(tmp_path)
        rc, out, _ = run(
            capsys, ["timeseries", "orbit", path, "--grid-points", "4", "--t-max", "1"]
        )
        assert rc == 0
        lines = out.splitlines()
        assert lines[0] == "t,x_0,x_1,x_2"
        assert len(lines) == 5

    def test_orbit_rejects_non_matrix_presets(self, capsys):
        rc, _, err = run(capsys, ["timeseries", "orbit", "ex3_10"])
        assert rc == 1
        assert "matrix input" in err

    def test_csv_is_byte_deterministic_with_lf_endings(self, tmp_path, capsys):
        args = ["timeseries", "pairing", "--depth", "4"]
        out1_path, out2_path = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--report-out", str(out1_path)]) == 0
        assert main(args + ["--report-out", str(out2_path)]) == 0
        capsys.readouterr()
        raw = out1_path.read_bytes()
        assert raw == out2_path.read_bytes()
        assert b"\r" not in raw

    def test_numeric_cells_are_shortest_g17(self, capsys):
        _, out, _ = run(
            capsys,
            ["timeseries", "rescaled-distance", "ex5_2", "--grid-points", "8"],
        )
        for line in out.splitlines()[1:]:
            for cell in line.split(","):
                assert format(float(cell), ".17g") == cell
                assert float(format(float(cell), ".17g")) == float(cell)


class TestUsageAndEnvironment:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 1
        capsys.readouterr()

    def test_missing_required_flag_is_usage_error(self, capsys):
        assert main(["analyze"]) == 1
        capsys.readouterr()

    def test_version_exits_zero(self, capsys):
        rc = main(["--version"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("evpos ")

    def test_thread_cap_must_be_integer(self, capsys, monkeypatch):
        monkeypatch.setenv("EVPOS_THREADS", "abc")
        rc, _, err = run(capsys, ["--version"])
        assert rc == 1
        assert "EVPOS_THREADS" in err

    def test_thread_cap_accepts_integer(self, capsys, monkeypatch):
        monkeypatch.setenv("EVPOS_THREADS", "2")
        assert main(["--version"]) == 0
        capsys.readouterr()
