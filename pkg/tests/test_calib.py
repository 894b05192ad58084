"""
Test Suite for Motion-Compensated Calibration
=============================================

Slicing, rotational warping, contrast-maximisation speed search and homography application.
"""

import math

import numpy as np
import pytest

from bvs_bench.calib import (Iwe, accumulate_events, apply_homography, cmax_objective, estimate_omega_cmax,
                             slice_by_angle, warp_events)
from bvs_bench.error_handler import ConfigurationError, InsufficientEventsError
from bvs_bench.evs_model import EventStream
from bvs_bench.geometry import Homography, IntensityField
from bvs_bench.tasks import CornerSet

CENTER = (31.5, 31.5)
OMEGA_100_RPM = 2.0 * math.pi * 100.0 / 60.0


def rotating_points_stream(omega: float, span_us: int, n_points: int = 40, repeats: int = 150,
                           seed: int = 0) -> EventStream:
    """Events fired by fixed pattern points as they rotate, rounded to pixel centres."""
    rng = np.random.default_rng(seed)
    radius = rng.uniform(6.0, 24.0, n_points)
    phase = rng.uniform(0.0, 2.0 * math.pi, n_points)
    qx = CENTER[0] + radius * np.cos(phase)
    qy = CENTER[1] + radius * np.sin(phase)
    t = np.sort(rng.integers(0, span_us, n_points * repeats))
    which = rng.integers(0, n_points, len(t))
    t_ref = span_us / 2.0
    x, y = qx[which], qy[which]
    angle = omega * (t - t_ref) * 1e-6
    xs = CENTER[0] + np.cos(angle) * (x - CENTER[0]) - np.sin(angle) * (y - CENTER[1])
    ys = CENTER[1] + np.sin(angle) * (x - CENTER[0]) + np.cos(angle) * (y - CENTER[1])
    return EventStream(t, np.rint(xs), np.rint(ys), np.ones(len(t)), 64, 64, 0, span_us)


@pytest.mark.unit
class TestSliceByAngle:

    def test_slice_count_and_span(self):
        stream = EventStream.empty(16, 16, 0, 100_000)
        slices = slice_by_angle(stream, rpm=100.0, window_deg=1.5)
        assert len(slices) == 40
        assert slices[0].t_start_us == 0 and slices[0].t_end_us == 2500
        assert slices[-1].t_end_us == 100_000

    def test_events_are_partitioned(self):
        stream = rotating_points_stream(OMEGA_100_RPM, 50_000)
        slices = slice_by_angle(stream, rpm=100.0, window_deg=3.0)
        assert sum(len(s) for s in slices) == len(stream)

    def test_non_positive_rpm_rejected(self, tiny_stream):
        with pytest.raises(ConfigurationError):
            slice_by_angle(tiny_stream, rpm=0.0, window_deg=1.5)


@pytest.mark.unit
class TestWarpEvents:

    def test_zero_speed_equals_histogram(self, tiny_stream):
        iwe = warp_events(tiny_stream, 0.0, (7.5, 7.5))
        assert np.allclose(iwe.grid, accumulate_events(tiny_stream))
        assert iwe.out_of_bounds == 0
        assert iwe.n_events == len(tiny_stream)

    def test_signed_histogram_sums_polarity(self, tiny_stream):
        signed = accumulate_events(tiny_stream, signed=True)
        assert signed[5, 2] == -1.0 and signed[5, 3] == 1.0

    def test_true_speed_sharpens(self):
        stream = rotating_points_stream(OMEGA_100_RPM, 150_000)
        sharp = cmax_objective(stream, OMEGA_100_RPM, CENTER)
        blurred = cmax_objective(stream, 0.8 * OMEGA_100_RPM, CENTER)
        assert sharp > blurred

    def test_center_outside_sensor_rejected(self, tiny_stream):
        with pytest.raises(ConfigurationError):
            warp_events(tiny_stream, 1.0, (40.0, 2.0))


@pytest.mark.unit
class TestContrastMaximisation:

    def test_recovers_rotation_speed(self):
        stream = rotating_points_stream(OMEGA_100_RPM, 150_000)
        estimate = estimate_omega_cmax(stream, CENTER, (0.5 * OMEGA_100_RPM, 1.5 * OMEGA_100_RPM))
        assert abs(estimate.omega_hat - OMEGA_100_RPM) / OMEGA_100_RPM < 0.03
        assert not estimate.low_confidence
        assert len(estimate.grid) == len(estimate.objective) == 31

    def test_raw_variance_objective_recovers_speed(self):
        """Unsmoothed objective is the plain variance of the unsigned IWE"""
        stream = rotating_points_stream(OMEGA_100_RPM, 150_000)
        raw = cmax_objective(stream, OMEGA_100_RPM, CENTER, smoothing_sigma=0.0)
        assert raw == pytest.approx(float(np.var(warp_events(stream, OMEGA_100_RPM, CENTER).grid)))
        assert raw > cmax_objective(stream, 0.8 * OMEGA_100_RPM, CENTER, smoothing_sigma=0.0)
        estimate = estimate_omega_cmax(stream, CENTER, (0.5 * OMEGA_100_RPM, 1.5 * OMEGA_100_RPM),
                                       smoothing_sigma=0.0)
        assert abs(estimate.omega_hat - OMEGA_100_RPM) / OMEGA_100_RPM < 0.03
        assert estimate.objective[15] == pytest.approx(raw)

    def test_uniform_noise_is_low_confidence(self):
        rng = np.random.default_rng(5)
        n = 20_000
        r = 25.0 * np.sqrt(rng.random(n))
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        stream = EventStream(np.sort(rng.integers(0, 100_000, n)), np.rint(CENTER[0] + r * np.cos(phi)),
                             np.rint(CENTER[1] + r * np.sin(phi)), np.ones(n), 64, 64, 0, 100_000)
        estimate = estimate_omega_cmax(stream, CENTER, (20.0, 60.0))
        assert estimate.low_confidence

    def test_empty_slice_raises(self):
        with pytest.raises(InsufficientEventsError):
            estimate_omega_cmax(EventStream.empty(64, 64, 0, 1000), CENTER, (1.0, 2.0))

    def test_inverted_range_rejected(self, tiny_stream):
        with pytest.raises(ConfigurationError):
            estimate_omega_cmax(tiny_stream, (7.5, 7.5), (2.0, 1.0))


@pytest.mark.unit
class TestApplyHomography:

    def test_points_map_forward(self):
        h = Homography.translation(2.0, -1.0)
        assert np.allclose(apply_homography(h, np.array([[1.0, 1.0]])), [[3.0, 0.0]])
        assert np.allclose(apply_homography(h, [[0.0, 0.0]]), [[2.0, -1.0]])

    def test_intensity_field_keeps_time(self):
        field = IntensityField(np.ones((8, 8)), t=0.25)
        out = apply_homography(Homography.identity(), field)
        assert out.t == 0.25
        assert np.allclose(out.data, 1.0)

    def test_iwe_metadata_survives(self):
        iwe = Iwe(np.eye(6), t_ref=10.0, omega_used=3.0, out_of_bounds=2, n_events=7)
        out = apply_homography(Homography.translation(1.0, 0.0), iwe)
        assert (out.t_ref, out.omega_used, out.out_of_bounds, out.n_events) == (10.0, 3.0, 2, 7)
        assert out.grid[0, 1] == pytest.approx(1.0)

    def test_corner_set_points_projected(self):
        corners = CornerSet(np.array([[1.0, 2.0]]), np.array([0.5]), np.array([42]))
        out = apply_homography(Homography.translation(1.0, 1.0), corners)
        assert np.allclose(out.points, [[2.0, 3.0]])
        assert list(out.t) == [42]

    def test_unsupported_type_rejected(self):
        with pytest.raises(TypeError):
            apply_homography(Homography.identity(), "not data")
