import json
import math

import numpy as np
import pytest

from ks1d import ConfigError
from ks1d.cli import (
    CSV_COLUMNS,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    build_summary,
    execute_run,
    main,
    parse_config,
)

STEADY_CONFIG = """
{
  "p": 1.0,
  "n_cells": 32,
  "t_end": 0.1,
  "sample_interval": 0.02,
  "ic": {"family": "constant", "mass": 1.0}
}
"""


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


class TestParseConfig:
    def test_minimal_with_defaults(self):
        cfg = parse_config(
            '{"p":1,"n_cells":128,"t_end":1,"ic":{"family":"cosine","mass":4,"amplitude":0.5}}'
        )
        assert cfg.p == 1.0
        assert cfg.n_cells == 128
        assert cfg.sample_interval == pytest.approx(0.01)
        assert cfg.ic.v0_mode == "equal_to_u0"
        assert cfg.control.cfl_safety == 0.4
        assert cfg.control.rel_tol == 1e-7
        assert cfg.control.u_max_threshold == 1e6
        assert not cfg.forced_growth

    def test_negative_p_names_key(self):
        with pytest.raises(ConfigError, match="p"):
            parse_config('{"p":-1,"n_cells":32,"t_end":1,"ic":{"family":"constant","mass":1}}')

    def test_empty_object(self):
        with pytest.raises(ConfigError, match="missing required key"):
            parse_config("{}")

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="unknown key bogus"):
            parse_config('{"bogus":1,"p":1,"n_cells":32,"t_end":1,"ic":{"family":"constant","mass":1}}')

    def test_unknown_nested_key_named(self):
        with pytest.raises(ConfigError, match="unknown key ic.amplitud"):
            parse_config(
                '{"p":1,"n_cells":32,"t_end":1,"ic":{"family":"cosine","mass":1,"amplitud":0.5}}'
            )

    def test_type_errors_name_key(self):
        with pytest.raises(ConfigError, match="n_cells"):
            parse_config('{"p":1,"n_cells":32.5,"t_end":1,"ic":{"family":"constant","mass":1}}')
        with pytest.raises(ConfigError, match="t_end"):
            parse_config('{"p":1,"n_cells":32,"t_end":"soon","ic":{"family":"constant","mass":1}}')
        with pytest.raises(ConfigError, match="forced_growth"):
            parse_config(
                '{"p":1,"n_cells":32,"t_end":1,"forced_growth":1,'
                '"ic":{"family":"constant","mass":1}}'
            )

    def test_control_override(self):
        cfg = parse_config(
            '{"p":1,"n_cells":32,"t_end":1,"control":{"cfl_safety":0.2,"u_max_threshold":100},'
            '"ic":{"family":"constant","mass":1}}'
        )
        assert cfg.control.cfl_safety == 0.2
        assert cfg.control.u_max_threshold == 100.0
        assert cfg.control.rel_tol == 1e-7

    def test_control_invariant(self):
        with pytest.raises(ConfigError, match="control"):
            parse_config(
                '{"p":1,"n_cells":32,"t_end":1,"control":{"cfl_safety":2.0},'
                '"ic":{"family":"constant","mass":1}}'
            )

    def test_not_json(self):
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_config("p = 1")


class TestRunCommand:
    def test_steady_run_csv_matches_closed_forms(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.json", STEADY_CONFIG)
        code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        header, rows = read_csv(tmp_path / "out" / "trajectory.csv")
        assert header == list(CSV_COLUMNS)
        assert len(rows) == 6  # t = 0, 0.02, ..., 0.1
        for row in rows:
            assert float(row["mass"]) == pytest.approx(1.0, rel=1e-14)
            assert float(row["L"]) == pytest.approx(-0.5, abs=1e-12)
            assert float(row["D"]) == pytest.approx(0.125, abs=1e-12)
            assert float(row["R"]) == pytest.approx(0.125, abs=1e-12)
            assert row["vacuum_flag"] == "0"
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["status"] == "completed"
        assert summary["t_final"] == pytest.approx(0.1)
        assert summary["blowup_time_estimate"] is None
        assert not summary["vacuum_warning"]
        assert summary["mass_drift_rel"] <= 1e-12
        assert set(summary["fitted_linear_envelopes"]) == {"R_cumulative", "entropy_plus_G"}
        assert set(summary["residual_maxima"]) == {
            "F_identity", "L_identity", "energy_bookkeeping"}

    def test_byte_identical_reruns(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.json", STEADY_CONFIG)
        main(["run", "--config", cfg_path, "--out", str(tmp_path / "a")])
        main(["run", "--config", cfg_path, "--out", str(tmp_path / "b")])
        a = (tmp_path / "a" / "trajectory.csv").read_bytes()
        b = (tmp_path / "b" / "trajectory.csv").read_bytes()
        assert a == b
        assert b.endswith(b"\n") and b"\r" not in b
        sa = (tmp_path / "a" / "summary.json").read_bytes()
        sb = (tmp_path / "b" / "summary.json").read_bytes()
        assert sa == sb

    def test_full_precision_formatting(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.json", STEADY_CONFIG)
        main(["run", "--config", cfg_path, "--out", str(tmp_path / "out")])
        _header, rows = read_csv(tmp_path / "out" / "trajectory.csv")
        # round-trip: parsing the printed value reproduces the double exactly
        for row in rows:
            val = float(row["L"])
            assert f"{val:.17g}" == row["L"]

    def test_forced_growth_surrogate_exit_ok(self, tmp_path):
        cfg = """
        {
          "p": 1.0, "n_cells": 32, "t_end": 1.0, "sample_interval": 0.05,
          "forced_growth": true,
          "ic": {"family": "constant", "mass": 5.0}
        }
        """
        cfg_path = write(tmp_path / "cfg.json", cfg)
        code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "out")])
        assert code == EXIT_OK  # detection is success
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["status"] == "blowup_detected"
        assert summary["blowup_time_estimate"] == pytest.approx(0.2, rel=1e-4)

    def test_noncritical_run_has_nan_columns(self, tmp_path):
        cfg = '{"p":0.5,"n_cells":32,"t_end":0.05,"ic":{"family":"constant","mass":1}}'
        cfg_path = write(tmp_path / "cfg.json", cfg)
        code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        _header, rows = read_csv(tmp_path / "out" / "trajectory.csv")
        assert rows[0]["F_critical"] == "nan"
        assert rows[0]["prop41_gap"] == "nan"
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["quarter_coefficient_entropy_gap_min"] is None

    def test_config_error_exit(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.json", '{"p":-1}')
        assert main(["run", "--config", cfg_path]) == EXIT_CONFIG

    def test_missing_config_file_is_io_error(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == EXIT_IO

    def test_step_failure_maps_to_exit_1(self, tmp_path, monkeypatch):
        import ks1d.cli as cli_mod
        from ks1d import RunOutcome, STEP_FAILURE
        from ks1d.grid import State
        from ks1d.functionals import evaluate_snapshot
        from ks1d import DiffusionModel, make_grid

        grid = make_grid(32)
        model = DiffusionModel(p=1.0)
        st0 = State(0.0, np.ones(32), np.ones(32))
        snap = evaluate_snapshot(st0, model, grid, 0.0, 0.0)
        failed = RunOutcome(status=STEP_FAILURE, final_state=st0, snapshots=[snap])
        monkeypatch.setattr(cli_mod, "execute_run", lambda cfg: failed)
        cfg_path = write(tmp_path / "cfg.json", STEADY_CONFIG)
        code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "out")])
        assert code == 1

    def test_unwritable_out_is_io_error(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.json", STEADY_CONFIG)
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a dir")
        code = main(["run", "--config", cfg_path, "--out", str(blocker / "sub")])
        assert code == EXIT_IO


class TestSweepCommand:
    def test_single_cell(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.json", STEADY_CONFIG)
        code = main(["sweep", "--config", cfg_path, "--p", "1", "--mass", "1",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        header, rows = read_csv(tmp_path / "sweep.csv")
        assert header == ["p", "mass", "status", "max_sup_u", "t_final"]
        assert len(rows) == 1
        assert rows[0]["status"] == "completed"

    def test_matrix(self, tmp_path):
        cfg = '{"p":1,"n_cells":32,"t_end":0.02,"ic":{"family":"cosine","mass":1,"amplitude":0.2}}'
        cfg_path = write(tmp_path / "cfg.json", cfg)
        code = main(["sweep", "--config", cfg_path, "--p", "0.5,1",
                     "--mass", "1,2,3", "--out", str(tmp_path)])
        assert code == EXIT_OK
        _header, rows = read_csv(tmp_path / "sweep.csv")
        assert len(rows) == 6
        assert [r["p"] for r in rows] == ["0.5"] * 3 + ["1"] * 3
        assert all(r["status"] == "completed" for r in rows)

    def test_supercritical_cell_recorded_not_asserted(self, tmp_path):
        # exploratory: any status is acceptable, the cell must be recorded
        cfg = '{"p":2,"n_cells":32,"t_end":0.05,"ic":{"family":"bump","mass":50,"width":0.1}}'
        cfg_path = write(tmp_path / "cfg.json", cfg)
        code = main(["sweep", "--config", cfg_path, "--p", "2", "--mass", "50",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        _header, rows = read_csv(tmp_path / "sweep.csv")
        assert len(rows) == 1
        assert rows[0]["status"] in ("completed", "blowup_detected", "step_failure")

    def test_empty_list_rejected(self, tmp_path):
        cfg_path = write(tmp_path / "cfg.json", STEADY_CONFIG)
        assert main(["sweep", "--config", cfg_path, "--p", "", "--mass", "1"]) == EXIT_CONFIG


class TestVerifyCommand:
    def test_too_few_levels(self, tmp_path):
        assert main(["verify", "--levels", "16", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert main(["verify", "--levels", "16,32", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_non_monotone_levels(self, tmp_path):
        assert main(["verify", "--levels", "64,32,128", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_report_structure_small_ladder(self, tmp_path):
        code = main(["verify", "--levels", "32,64,128", "--out", str(tmp_path)])
        assert code in (0, 1)
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert set(report) == {"key_identity", "trajectory", "passed"}
        assert len(report["key_identity"]) == 12  # 4 profiles x 3 exponents
        assert len(report["trajectory"]) == 3
        for entry in report["key_identity"] + report["trajectory"]:
            assert set(entry) == {"name", "resolutions", "residuals", "orders",
                                  "target_order", "passed", "exact"}
            assert entry["resolutions"] == [32, 64, 128]

    def test_full_ladder_passes(self, tmp_path):
        code = main(["verify", "--out", str(tmp_path)])  # default 64,128,256
        assert code == EXIT_OK
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["passed"]
        assert all(e["passed"] for e in report["key_identity"] + report["trajectory"])


class TestSummaryContent:
    def test_envelopes_and_residuals_finite(self):
        cfg = parse_config(
            '{"p":1,"n_cells":64,"t_end":0.05,"sample_interval":0.01,'
            '"ic":{"family":"cosine","mass":2,"amplitude":0.4}}'
        )
        outcome = execute_run(cfg)
        summary = build_summary(cfg, outcome)
        env = summary["fitted_linear_envelopes"]
        assert env["R_cumulative"] >= 0.0 and math.isfinite(env["R_cumulative"])
        assert env["entropy_plus_G"] > 0.0 and math.isfinite(env["entropy_plus_G"])
        assert math.isfinite(summary["residual_maxima"]["F_identity"])
        assert math.isfinite(summary["quarter_coefficient_entropy_gap_min"])
