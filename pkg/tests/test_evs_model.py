"""
Test Suite for the Event Sensor Model
=====================================

Single-pixel checks against hand-computed crossings, full-scene simulation properties,
readout saturation and ROI cropping.
"""

import math

import numpy as np
import pytest

from bvs_bench.error_handler import ConfigurationError
from bvs_bench.evs_model import (EventStream, EvsConfig, PixelArrayEmulator, Roi, apply_rate_saturation,
                                 apply_roi, simulate_events, simulate_sensor)


def single_pixel(config: EvsConfig, cutoff_hz: float = math.inf) -> PixelArrayEmulator:
    emulator = PixelArrayEmulator(np.full((1, 1), config.contrast_threshold), config, cutoff_hz)
    emulator.reset(np.zeros((1, 1)), 0.0)
    return emulator


@pytest.mark.unit
class TestPixelArrayEmulator:

    def test_log_step_emits_floor_of_crossings(self):
        emulator = single_pixel(EvsConfig.ideal(contrast_threshold=0.2))
        t, x, y, p = emulator.step(np.full((1, 1), math.log(2.0)), 1e-3)
        assert len(t) == 3
        assert np.all(p == 1)
        assert list(t) == sorted(t)
        assert 0 < t[0] and t[-1] <= 1000

    def test_crossing_times_interpolated_linearly(self):
        emulator = single_pixel(EvsConfig.ideal(contrast_threshold=0.2))
        t, _, _, _ = emulator.step(np.full((1, 1), 1.0), 1e-3)
        assert list(t) == [200, 400, 600, 800, 1000]

    def test_negative_step_gives_off_events(self):
        emulator = single_pixel(EvsConfig.ideal(contrast_threshold=0.2))
        _, _, _, p = emulator.step(np.full((1, 1), -0.5), 1e-3)
        assert list(p) == [-1, -1]

    def test_refractory_suppresses_but_reference_advances(self):
        config = EvsConfig.ideal(contrast_threshold=0.2, refractory_us=500.0)
        emulator = single_pixel(config)
        t, _, _, _ = emulator.step(np.full((1, 1), 1.0), 1e-3)
        assert list(t) == [200, 800]
        assert emulator.last_log_level[0, 0] == pytest.approx(1.0)

    def test_low_pass_delays_response(self):
        config = EvsConfig(contrast_threshold=0.2, threshold_sigma=0.0, cutoff_hz_low=10.0, cutoff_hz_high=10.0)
        emulator = single_pixel(config, cutoff_hz=10.0)
        t, _, _, _ = emulator.step(np.full((1, 1), math.log(2.0)), 1e-3)
        assert len(t) == 0

    def test_time_must_increase(self):
        emulator = single_pixel(EvsConfig.ideal())
        emulator.step(np.zeros((1, 1)), 1e-3)
        with pytest.raises(ValueError):
            emulator.step(np.zeros((1, 1)), 1e-3)

    def test_threshold_draws_are_clamped(self):
        config = EvsConfig(contrast_threshold=0.02, threshold_sigma=0.5)
        draws = PixelArrayEmulator.draw_thresholds((50, 50), config, np.random.default_rng(0))
        assert draws.min() >= 0.01


@pytest.mark.unit
class TestEvsConfig:

    def test_cutoff_interpolates_geometrically(self):
        config = EvsConfig(cutoff_hz_low=300.0, cutoff_hz_high=3000.0, lux_low=100.0, lux_high=2000.0)
        assert config.cutoff_hz(50.0) == pytest.approx(300.0)
        assert config.cutoff_hz(5000.0) == pytest.approx(3000.0)
        assert config.cutoff_hz(math.sqrt(100.0 * 2000.0)) == pytest.approx(math.sqrt(300.0 * 3000.0))

    def test_ideal_has_no_limits(self):
        config = EvsConfig.ideal()
        assert math.isinf(config.cutoff_hz(10.0))
        assert math.isinf(config.rate_cap)
        assert config.threshold_sigma == 0.0

    @pytest.mark.parametrize("field,value", [
        ("contrast_threshold", 0.0),
        ("refractory_us", -1.0),
        ("rate_cap", 0.0),
        ("drop_policy", "random"),
    ])
    def test_invalid_values_rejected(self, field, value):
        with pytest.raises(ConfigurationError):
            EvsConfig(**{field: value})


@pytest.mark.unit
class TestEventStream:

    def test_out_of_range_coordinates_rejected(self):
        with pytest.raises(ValueError):
            EventStream([0], [16], [0], [1], width=16, height=16)

    def test_zero_polarity_rejected(self):
        with pytest.raises(ValueError):
            EventStream([0], [0], [0], [0], width=4, height=4)

    def test_time_window_is_half_open(self, tiny_stream):
        window = tiny_stream.time_window(20, 35)
        assert list(window.t) == [20, 20]
        assert (window.t_start_us, window.t_end_us) == (20, 35)

    def test_default_end_follows_last_event(self):
        stream = EventStream([5, 9], [0, 1], [0, 1], [1, 1], width=4, height=4)
        assert stream.t_end_us == 10
        assert stream.duration_us == 10
        assert stream.event_rate() == pytest.approx(2 / 10e-6)


@pytest.mark.unit
class TestSimulateEvents:

    def test_static_scene_is_silent(self, make_scene, ideal_evs_config):
        stream = simulate_events(make_scene(rpm=0.0), ideal_evs_config, 0.0, 0.01)
        assert len(stream) == 0
        assert stream.t_end_us == 10000

    def test_rotation_produces_sorted_events(self, checker_scene, ideal_evs_config):
        stream = simulate_events(checker_scene, ideal_evs_config, 0.0, 0.01)
        assert len(stream) > 0
        assert stream.is_sorted()
        assert stream.t.min() >= 0 and stream.t.max() <= 10000
        assert set(np.unique(stream.p)) <= {-1, 1}

    def test_same_seed_same_stream(self, checker_scene):
        config = EvsConfig(contrast_threshold=0.2, threshold_sigma=0.05, cutoff_hz_low=math.inf,
                           cutoff_hz_high=math.inf, seed=11)
        a = simulate_events(checker_scene, config, 0.0, 0.005)
        b = simulate_events(checker_scene, config, 0.0, 0.005)
        assert np.array_equal(a.t, b.t) and np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)

    def test_row_bands_do_not_change_output(self, checker_scene, ideal_evs_config):
        serial = simulate_events(checker_scene, ideal_evs_config, 0.0, 0.005, workers=1)
        banded = simulate_events(checker_scene, ideal_evs_config, 0.0, 0.005, workers=3)
        assert np.array_equal(serial.t, banded.t)
        assert np.array_equal(serial.x, banded.x)
        assert np.array_equal(serial.y, banded.y)

    def test_unsatisfiable_step_rejected(self, checker_scene):
        config = EvsConfig.ideal(min_dt_s=1.0)
        with pytest.raises(ConfigurationError, match="required simulation step"):
            simulate_events(checker_scene, config, 0.0, 0.01)

    def test_empty_interval_rejected(self, checker_scene, ideal_evs_config):
        with pytest.raises(ConfigurationError):
            simulate_events(checker_scene, ideal_evs_config, 0.01, 0.01)

    def test_background_activity_rate(self, make_scene):
        config = EvsConfig.ideal(ba_rate_hz=100.0, seed=4)
        stream = simulate_events(make_scene("uniform", rpm=0.0), config, 0.0, 0.1)
        expected = 100.0 * 64 * 64 * 0.1
        assert abs(len(stream) - expected) < 0.05 * expected


@pytest.mark.unit
class TestReadout:

    @pytest.fixture
    def burst(self) -> EventStream:
        return EventStream(t=np.arange(10) * 50, x=np.arange(10), y=np.zeros(10), p=np.ones(10),
                           width=16, height=4, t_start_us=0, t_end_us=1000)

    def test_tail_policy_keeps_earliest(self, burst):
        out = apply_rate_saturation(burst, rate_cap=5000.0, window_us=1000, policy="tail")
        assert list(out.t) == [0, 50, 100, 150, 200]
        assert out.metadata["saturation_dropped"] == 5

    def test_uniform_policy_keeps_budget(self, burst):
        out = apply_rate_saturation(burst, rate_cap=5000.0, window_us=1000, policy="uniform", seed=1)
        again = apply_rate_saturation(burst, rate_cap=5000.0, window_us=1000, policy="uniform", seed=1)
        assert len(out) == 5
        assert out.is_sorted()
        assert np.array_equal(out.t, again.t)

    def test_infinite_cap_is_identity(self, burst):
        assert apply_rate_saturation(burst, math.inf) is burst

    def test_roi_crops_and_reorigins(self, tiny_stream):
        out = apply_roi(tiny_stream, Roi(1, 0, 4, 6))
        assert list(out.x) == [0, 1, 2]
        assert list(out.y) == [0, 5, 5]
        assert (out.width, out.height) == (4, 6)
        assert out.metadata["roi"] == [1, 0, 4, 6]

    def test_roi_outside_sensor_rejected(self, tiny_stream):
        with pytest.raises(ConfigurationError):
            apply_roi(tiny_stream, Roi(10, 10, 8, 8))

    def test_sensor_applies_roi_before_cap(self, checker_scene):
        config = EvsConfig.ideal(roi=Roi(16, 16, 32, 32), rate_cap=2.0e5)
        stream = simulate_sensor(checker_scene, config, 0.0, 0.005)
        assert (stream.width, stream.height) == (32, 32)
        assert "roi" in stream.metadata
        per_window = np.bincount(stream.t // 1000)
        assert per_window.max() <= 200
