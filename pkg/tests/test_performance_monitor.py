"""
Test Suite for Performance Monitoring
=====================================

Stage profiles, the timing context manager and method decorator, worker-state merging
and the exported report.
"""

import json

import pytest

from bvs_bench.performance_monitor import OperationProfile, PerformanceMonitor, timed


class Stage:
    def __init__(self, monitor):
        self.monitor = monitor

    @timed("evs", "simulate")
    def simulate(self, n):
        return n * 2

    @timed("aop")
    def evaluate(self):
        raise ValueError("bad frame")


@pytest.mark.unit
class TestOperationProfile:

    def test_statistics_follow_samples(self):
        profile = OperationProfile("harness", "run_cell", samples=[1.0, 3.0, 2.0], errors=1)
        data = profile.to_dict()
        assert data["calls"] == 3
        assert data["total_s"] == pytest.approx(6.0)
        assert (data["min_s"], data["max_s"], data["median_s"]) == (1.0, 3.0, 2.0)
        assert data["mean_s"] == pytest.approx(2.0)
        assert data["errors"] == 1

    def test_empty_profile_exports_zeros(self):
        data = OperationProfile("recon", "solve").to_dict()
        assert data["calls"] == 0
        assert data["min_s"] == 0.0 and data["total_s"] == 0.0


@pytest.mark.unit
class TestPerformanceMonitor:

    def test_measure_records_call(self, monitor):
        with monitor.measure("recon", "reconstruct_from_sd"):
            pass
        profile = monitor.profiles["recon.reconstruct_from_sd"]
        assert profile.calls == 1
        assert profile.errors == 0

    def test_measure_counts_errors_and_reraises(self, monitor):
        with pytest.raises(RuntimeError):
            with monitor.measure("calib", "estimate_omega_cmax"):
                raise RuntimeError("boom")
        assert monitor.profiles["calib.estimate_omega_cmax"].errors == 1

    def test_timed_method_uses_instance_monitor(self, monitor):
        stage = Stage(monitor)
        assert stage.simulate(3) == 6
        with pytest.raises(ValueError):
            stage.evaluate()
        assert monitor.profiles["evs.simulate"].calls == 1
        assert monitor.profiles["aop.evaluate"].errors == 1
        assert Stage.simulate.__name__ == "simulate"

    def test_memory_sample_is_positive(self, monitor):
        assert monitor.sample_memory("evs/50/100:start") > 0
        assert monitor.memory_samples[0]["label"] == "evs/50/100:start"

    def test_merge_worker_state(self, monitor):
        worker = PerformanceMonitor()
        worker.record("evs", "simulate", 0.25)
        worker.record("evs", "simulate", 0.75, failed=True)
        worker.sample_memory("evs/50/100:end")
        monitor.record("evs", "simulate", 1.0)
        monitor.merge(worker.export_state())
        profile = monitor.profiles["evs.simulate"]
        assert profile.calls == 3
        assert profile.total == pytest.approx(2.0)
        assert profile.errors == 1
        assert [s["label"] for s in monitor.memory_samples] == ["evs/50/100:end"]

    def test_write_report(self, monitor, tmp_path):
        monitor.record("evs", "simulate", 0.1)
        monitor.record("evs", "evaluate", 0.3)
        monitor.sample_memory("evs/50/100:end")
        path = tmp_path / "performance.json"
        monitor.write_report(str(path), errors={"total": 0})
        report = json.loads(path.read_text())
        assert report["summary"]["operations"] == 2
        assert report["summary"]["slowest"][0] == "evs.evaluate"
        assert report["summary"]["peak_rss_mb"] > 0
        assert list(report["profiles"]) == ["evs.evaluate", "evs.simulate"]
        assert report["errors"] == {"total": 0}
