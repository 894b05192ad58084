"""
Test Suite for Sweep Orchestration
==================================

End-to-end sweeps on a 64×64 checker grid: report layout and order, normalisation,
reproducibility, failed cells, the simulate/evaluate split and parallel execution.
"""

import json
import os

import pytest

from bvs_bench.config_manager import config_from_dict
from bvs_bench.file_utils import read_report_csv
from bvs_bench.harness import (MODE_EVALUATE, MODE_SWEEP, REPORT_COLUMNS, SweepRunner, cell_data_dir, cell_seed,
                               iter_cells, normalize_rows, run_cell, run_sweep)


def read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as file:
        return file.read()


@pytest.mark.unit
class TestCells:

    def test_report_order(self, small_run_config):
        cells = iter_cells(small_run_config)
        assert [(c.sensor_id, c.rpm) for c in cells] == [
            ("evs_ideal", 50.0), ("evs_ideal", 100.0), ("aop_ideal", 50.0), ("aop_ideal", 100.0)]

    def test_seeds_are_stable_and_distinct(self, small_run_config):
        cells = iter_cells(small_run_config)
        seeds = [cell_seed(3, c) for c in cells]
        assert seeds == [cell_seed(3, c) for c in cells]
        assert len(set(seeds)) == len(seeds)

    def test_data_directory_layout(self, small_run_config):
        cell = iter_cells(small_run_config)[1]
        assert cell_data_dir("out", cell) == os.path.join("out", "data", "evs_ideal", "2000", "100")

    def test_normalize_rows_per_group(self):
        rows = [{"sensor_id": "a", "rpm": 50.0, "lux": 1.0, "tss": 2.0},
                {"sensor_id": "a", "rpm": 100.0, "lux": 1.0, "tss": 1.0},
                {"sensor_id": "b", "rpm": 50.0, "lux": 1.0, "tss": 0.0}]
        normalize_rows(rows)
        assert rows[0]["norm_tss"] == 1.0
        assert rows[1]["norm_tss"] == 0.5
        assert rows[2]["norm_tss"] is None
        assert rows[2]["norm_gm"] is None


@pytest.mark.integration
class TestSweep:

    def test_report_rows_and_columns(self, small_run_config):
        report = run_sweep(small_run_config)
        with open(report, encoding="utf-8") as file:
            assert file.readline().rstrip("\n").split(",") == REPORT_COLUMNS
        rows = read_report_csv(report)
        assert [(r["sensor_id"], r["rpm"]) for r in rows] == [
            ("evs_ideal", 50), ("evs_ideal", 100), ("aop_ideal", 50), ("aop_ideal", 100)]
        assert all(r["status"] == "ok" for r in rows), [r["error"] for r in rows]
        assert rows[0]["sensor_kind"] == "evs" and rows[2]["sensor_kind"] == "aop"
        assert rows[0]["n_events"] > 0
        assert rows[2]["recon_rmse"] is not None

    def test_lowest_speed_normalises_to_one(self, small_run_config):
        rows = read_report_csv(run_sweep(small_run_config))
        for row in (rows[0], rows[2]):
            assert row["norm_tss"] == pytest.approx(1.0)
            assert row["norm_var"] == pytest.approx(1.0)

    def test_output_directory_contents(self, small_run_config):
        out = small_run_config.output.directory
        run_sweep(small_run_config)
        assert os.path.exists(os.path.join(out, "config.resolved.yaml"))
        assert os.path.exists(os.path.join(out, "performance.json"))
        performance = json.loads(read_text(os.path.join(out, "performance.json")))
        assert {"evs.simulate", "evs.evaluate", "aop.simulate", "aop.evaluate"} <= set(performance["profiles"])
        assert len(performance["memory_samples"]) == 2 * 4
        assert performance["errors"]["failed_cells"] == []
        assert os.path.exists(os.path.join(out, "data", "evs_ideal", "2000", "50", "events.bin"))
        assert os.path.exists(os.path.join(out, "data", "aop_ideal", "2000", "100", "aop.bin"))

    def test_image_exports(self, small_run_dict):
        small_run_dict["output"]["save_images"] = True
        small_run_dict["sweep"]["rpm"] = [50]
        config = config_from_dict(small_run_dict)
        run_sweep(config)
        data = os.path.join(config.output.directory, "data")
        for name in ("iwe.pgm", "iwe.pgm.scale.txt", "reference.pgm", "corners.pgm"):
            assert os.path.exists(os.path.join(data, "evs_ideal", "2000", "50", name)), name
        for name in ("cop.pgm", "reference.pgm", "recon.pgm", "corners.pgm"):
            assert os.path.exists(os.path.join(data, "aop_ideal", "2000", "50", name)), name

    def test_rerun_is_byte_identical(self, small_run_dict, tmp_path):
        first = run_sweep(config_from_dict(small_run_dict))
        small_run_dict["output"]["directory"] = str(tmp_path / "again")
        second = run_sweep(config_from_dict(small_run_dict))
        assert first != second
        assert read_text(first) == read_text(second)

    def test_evaluate_matches_sweep(self, small_run_config):
        runner = SweepRunner(small_run_config)
        swept = read_text(runner.run())
        evaluated = read_text(runner.evaluate())
        assert evaluated == swept

    def test_simulate_then_evaluate(self, small_run_config):
        runner = SweepRunner(small_run_config)
        data_dir = runner.simulate()
        assert os.path.exists(os.path.join(data_dir, "evs_ideal", "2000", "100", "events.bin"))
        assert not os.path.exists(runner.report_path)
        rows = read_report_csv(runner.evaluate())
        assert all(r["status"] == "ok" for r in rows)

    @pytest.mark.slow
    def test_parallel_matches_serial(self, small_run_dict, tmp_path):
        serial = run_sweep(config_from_dict(small_run_dict))
        small_run_dict["jobs"] = 2
        small_run_dict["output"]["directory"] = str(tmp_path / "parallel")
        parallel = run_sweep(config_from_dict(small_run_dict))
        assert read_text(serial) == read_text(parallel)


@pytest.mark.integration
class TestFailures:

    def test_failed_cell_is_recorded(self, small_run_dict, error_handler, monitor, tmp_path):
        small_run_dict["sensors"] = [{"id": "slow", "preset": "ideal_evs", "evs": {"min_dt_s": 1.0}}]
        config = config_from_dict(small_run_dict)
        row = run_cell(config, iter_cells(config)[0], MODE_SWEEP, str(tmp_path), error_handler, monitor)
        assert row["status"] == "failed"
        assert row["error"].startswith("ConfigurationError")
        assert [(r.cell, r.stage) for r in error_handler.records] == [(iter_cells(config)[0].label, MODE_SWEEP)]
        assert [s["label"] for s in monitor.memory_samples] == ["slow/50/2000:start", "slow/50/2000:end"]
        assert monitor.profiles["evs.simulate"].errors == 1

    def test_failed_cell_does_not_stop_sweep(self, small_run_dict):
        small_run_dict["sensors"].insert(0, {"id": "slow", "preset": "ideal_evs", "evs": {"min_dt_s": 1.0}})
        small_run_dict["sensors"] = small_run_dict["sensors"][:2]
        rows = read_report_csv(run_sweep(config_from_dict(small_run_dict)))
        assert [r["status"] for r in rows] == ["failed", "failed", "ok", "ok"]
        assert rows[0]["norm_tss"] is None

    def test_missing_recording_fails_cell(self, small_run_config, error_handler, monitor, tmp_path):
        cell = iter_cells(small_run_config)[0]
        row = run_cell(small_run_config, cell, MODE_EVALUATE, str(tmp_path), error_handler, monitor)
        assert row["status"] == "failed"
        assert row["error"].startswith("FileNotFoundError")

    def test_unwritable_output_halts(self, small_run_config, monkeypatch):
        monkeypatch.setattr("bvs_bench.file_utils.os.access", lambda path, mode: False)
        with pytest.raises(PermissionError):
            run_sweep(small_run_config)
