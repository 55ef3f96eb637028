import json
import re
import subprocess
import sys

import pytest

from gridsense.cli import main
from gridsense.fields import field_from_json_dict


def read_bytes(path):
    return path.read_bytes()


def csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# {")
    header = lines[1].split(",")
    return header, [line.split(",") for line in lines[2:]]


class TestGenField:
    def test_stdout_json_with_meta(self, capsys):
        assert main(["gen-field", "--b", "1"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["meta"]["seed"] == 0
        assert record["meta"]["command"] == "gen-field"
        field = field_from_json_dict(record)
        assert field.b == 1 and field.coeffs.shape == (3,)

    def test_file_output_deterministic(self, tmp_path):
        out = tmp_path / "field.json"
        assert main(["gen-field", "--b", "2", "--seed", "7", "--out", str(out)]) == 0
        first = read_bytes(out)
        assert main(["gen-field", "--b", "2", "--seed", "7", "--out", str(out)]) == 0
        assert read_bytes(out) == first
        assert json.loads(first)["b"] == 2

    def test_infeasible_amplitude_is_runtime_error(self, tmp_path, capsys):
        rc = main(["gen-field", "--b", "1", "--amplitude-bound", "0",
                   "--out", str(tmp_path / "f.json")])
        assert rc == 2
        assert capsys.readouterr().err.startswith("gridsense: error:")


class TestErrorSweep:
    def test_happy_path_with_companion(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(["error-sweep", "--b", "1", "--laws", "optimal,random",
                   "--n-grid", "5,10", "--trials", "50", "--out", str(out)])
        assert rc == 0
        header, rows = csv_rows(out)
        assert header == ["law", "b", "n", "trials", "e_hat",
                          "ci_half_width", "seed"]
        assert [(r[0], r[2]) for r in rows] == [
            ("optimal", "5"), ("optimal", "10"), ("random", "5"), ("random", "10")
        ]
        log_header, log_rows = csv_rows(tmp_path / "sweep_loglog.csv")
        assert log_header == ["law", "b", "n", "log10_n", "log10_e_hat"]
        assert len(log_rows) <= len(rows)

    def test_single_trial_error_is_zero_or_one(self, tmp_path):
        out = tmp_path / "one.csv"
        main(["error-sweep", "--b", "1", "--laws", "optimal", "--n-grid", "20",
              "--trials", "1", "--out", str(out)])
        _, rows = csv_rows(out)
        assert rows[0][4] in ("0.0", "1.0")

    def test_byte_determinism(self, tmp_path):
        out = tmp_path / "sweep.csv"
        argv = ["error-sweep", "--b", "1", "--n-grid", "10,30", "--trials",
                "100", "--seed", "3", "--out", str(out)]
        assert main(argv) == 0
        first = read_bytes(out), read_bytes(tmp_path / "sweep_loglog.csv")
        assert main(argv) == 0
        assert (read_bytes(out), read_bytes(tmp_path / "sweep_loglog.csv")) == first

    def test_svg_output(self, tmp_path):
        out, svg = tmp_path / "s.csv", tmp_path / "s.svg"
        main(["error-sweep", "--b", "1", "--n-grid", "5,10,20", "--trials",
              "200", "--out", str(out), "--svg", str(svg)])
        assert svg.read_text().startswith("<svg")

    def test_unknown_law(self, tmp_path, capsys):
        rc = main(["error-sweep", "--b", "1", "--laws", "bogus",
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 1
        assert "unknown law" in capsys.readouterr().err


class TestSampleSize:
    @pytest.mark.parametrize("b,expected", [(1, "77"), (3, "914"), (0, "1")])
    def test_known_values(self, b, expected, capsys):
        assert main(["sample-size", "--b", str(b), "--epsilon", "0.01"]) == 0
        assert capsys.readouterr().out.strip() == expected

    def test_epsilon_out_of_range(self, capsys):
        assert main(["sample-size", "--b", "1", "--epsilon", "2.0"]) == 1
        assert "gridsense: error:" in capsys.readouterr().err


class TestThresholdSearch:
    def test_finds_n_below_sufficiency_bound(self, tmp_path, capsys):
        out = tmp_path / "search.csv"
        rc = main(["threshold-search", "--b", "1", "--trials", "5000",
                   "--out", str(out)])
        assert rc == 0
        match = re.search(r"b=1 n_star=(\d+)", capsys.readouterr().out)
        assert match and 1 < int(match.group(1)) < 77
        header, rows = csv_rows(out)
        assert header == ["b", "step", "n_lo", "n_hi", "n_probed", "e_hat",
                          "ci_half_width", "accepted"]
        assert rows and rows[-1][7] in ("0", "1")

    def test_single_location_shortcut(self, tmp_path, capsys):
        main(["threshold-search", "--b", "0", "--trials", "100",
              "--out", str(tmp_path / "s.csv")])
        assert "b=0 n_star=1" in capsys.readouterr().out

    def test_unreachable_band_warns(self, tmp_path, capsys):
        main(["threshold-search", "--b", "1", "--trials", "101", "--target",
              "0.5", "--tolerance", "1e-9", "--out", str(tmp_path / "w.csv")])
        assert "warning:" in capsys.readouterr().out

    def test_band_outside_unit_interval(self, tmp_path):
        rc = main(["threshold-search", "--b", "1", "--target", "0.0005",
                   "--tolerance", "0.001", "--out", str(tmp_path / "x.csv")])
        assert rc == 1


class TestNoisy:
    def test_happy_path(self, tmp_path, capsys):
        out = tmp_path / "noisy.csv"
        rc = main(["noisy", "--b", "1", "--n", "300", "--fields", "5",
                   "--out", str(out)])
        assert rc == 0
        header, rows = csv_rows(out)
        assert header[:5] == ["field_id", "b", "n", "sigma", "distortion"]
        assert len(rows) == 5
        assert re.search(r"low-distortion fraction \(D < 0\.1\): ",
                         capsys.readouterr().out)
        assert (tmp_path / "noisy_distortion_hist.csv").exists()
        assert (tmp_path / "noisy_dg_hist.csv").exists()

    def test_byte_determinism(self, tmp_path):
        out = tmp_path / "n.csv"
        argv = ["noisy", "--b", "1", "--n", "200", "--fields", "4",
                "--seed", "5", "--out", str(out)]
        names = ["n.csv", "n_distortion_hist.csv", "n_dg_hist.csv"]
        assert main(argv) == 0
        first = [read_bytes(tmp_path / name) for name in names]
        assert main(argv) == 0
        assert [read_bytes(tmp_path / name) for name in names] == first

    def test_svg_histogram(self, tmp_path):
        svg = tmp_path / "d.svg"
        main(["noisy", "--b", "1", "--n", "200", "--fields", "3",
              "--out", str(tmp_path / "d.csv"), "--svg", str(svg)])
        assert svg.read_text().startswith("<svg")


class TestAmbiguityDemo:
    def test_happy_path(self, tmp_path, capsys):
        out = tmp_path / "amb.csv"
        rc = main(["ambiguity-demo", "--theta-points", "10", "--resolution",
                   "20000", "--out", str(out)])
        assert rc == 0
        header, rows = csv_rows(out)
        assert header == ["theta", "measure_g", "measure_shift", "measure_flip",
                          "measure_scale_2", "measure_scale_3"]
        assert len(rows) == 10
        assert "max measure discrepancy" in capsys.readouterr().out

    def test_loads_field_file(self, tmp_path):
        field_path = tmp_path / "f.json"
        main(["gen-field", "--b", "1", "--out", str(field_path)])
        rc = main(["ambiguity-demo", "--field", str(field_path), "--b", "3",
                   "--theta-points", "5", "--resolution", "20000",
                   "--out", str(tmp_path / "amb.csv")])
        assert rc == 0

    def test_field_too_wide_for_container(self, tmp_path, capsys):
        field_path = tmp_path / "f.json"
        main(["gen-field", "--b", "2", "--out", str(field_path)])
        rc = main(["ambiguity-demo", "--field", str(field_path), "--b", "1",
                   "--scales", "1", "--out", str(tmp_path / "amb.csv")])
        assert rc == 1
        assert "larger bandwidth" in capsys.readouterr().err

    def test_scale_exceeding_container(self, tmp_path):
        rc = main(["ambiguity-demo", "--b", "1", "--field-b", "1", "--scales",
                   "2", "--out", str(tmp_path / "amb.csv")])
        assert rc == 1


class TestExponentCheck:
    def test_closed_form_matches_numeric(self, tmp_path):
        out = tmp_path / "exp.csv"
        assert main(["exponent-check", "--b", "1", "--out", str(out)]) == 0
        header, rows = csv_rows(out)
        assert header == ["b", "law", "event", "closed_form", "numeric",
                          "abs_diff", "monte_carlo_slope"]
        assert [r[2] for r in rows] == ["N0=0", "N0>=N1", "N1>=N2"]
        for row in rows:
            assert float(row[3]) == pytest.approx(0.1069152039165119, abs=1e-12)
            assert float(row[5]) <= 1e-4
            assert row[6] == ""

    def test_slope_column_on_min_exponent_row(self, tmp_path):
        out = tmp_path / "exp.csv"
        main(["exponent-check", "--b", "1", "--slope-trials", "2000",
              "--out", str(out)])
        _, rows = csv_rows(out)
        filled = [r[6] for r in rows if r[6]]
        assert len(filled) == 1
        assert 0.03 < float(filled[0]) < 0.3

    def test_degenerate_grid_reports_infinite_exponent(self, tmp_path):
        out = tmp_path / "exp0.csv"
        assert main(["exponent-check", "--b", "0", "--out", str(out)]) == 0
        _, rows = csv_rows(out)
        assert len(rows) == 1
        assert rows[0][3] == "inf" and rows[0][5] == "0.0"

    def test_large_b_rejected(self, tmp_path):
        assert main(["exponent-check", "--b", "6",
                     "--out", str(tmp_path / "x.csv")]) == 1


class TestConfigFile:
    def test_config_supplies_required_options(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"b": 1, "epsilon": 0.01}))
        assert main(["sample-size", "--config", str(cfg)]) == 0
        assert capsys.readouterr().out.strip() == "77"

    def test_explicit_flag_beats_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"b": 3, "epsilon": 0.01}))
        assert main(["sample-size", "--config", str(cfg), "--b", "1"]) == 0
        assert capsys.readouterr().out.strip() == "77"

    def test_string_values_coerced(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"b": "1", "epsilon": "0.01"}))
        assert main(["sample-size", "--config", str(cfg)]) == 0
        assert capsys.readouterr().out.strip() == "77"

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["sample-size", "--config", str(cfg), "--b", "1",
                     "--epsilon", "0.01"]) == 1
        assert "bogus" in capsys.readouterr().err

    def test_config_must_be_object(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        assert main(["sample-size", "--config", str(cfg), "--b", "1",
                     "--epsilon", "0.01"]) == 1


class TestUsageErrors:
    @pytest.mark.parametrize("argv", [
        [],
        ["bogus-command"],
        ["gen-field"],
        ["gen-field", "--b", "x"],
        ["sample-size", "--b", "1"],
        ["error-sweep", "--b", "1"],
    ])
    def test_parse_failures_exit_one(self, argv, capsys):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 1
        capsys.readouterr()

    def test_module_help_runs(self):
        out = subprocess.run(
            [sys.executable, "-m", "gridsense.cli", "--help"],
            capture_output=True, text=True,
        )
        assert out.returncode == 0
        assert "usage" in out.stdout
