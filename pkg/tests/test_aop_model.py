"""
Test Suite for the Primitive-Pathway (TD/SD) Sensor Model
=========================================================
"""

import math

import numpy as np
import pytest

from bvs_bench.aop_model import (AopConfig, AopFrame, quantize, sample_aop, sample_cop, sd_to_gradient,
                                 spatial_difference)
from bvs_bench.error_handler import ConfigurationError


@pytest.mark.unit
class TestQuantize:

    def test_rounds_half_away_from_zero(self):
        codes = quantize(np.array([0.5, 1.5, -0.5, -1.49, 0.49]), 1.0, 127)
        assert list(codes) == [1, 2, -1, -1, 0]

    def test_saturates_at_max_code(self):
        codes = quantize(np.array([10.0, -10.0]), 0.01, 127)
        assert list(codes) == [127, -127]
        assert codes.dtype == np.int16


@pytest.mark.unit
class TestAopConfig:

    def test_default_step_spans_full_scale(self):
        config = AopConfig(quant_bits=7)
        assert config.max_code == 127
        assert config.step == pytest.approx(1.0 / 127)

    def test_explicit_step_wins(self):
        assert AopConfig(quant_step=0.01).step == 0.01

    def test_exposure_longer_than_frame_rejected(self):
        with pytest.raises(ConfigurationError):
            AopConfig(cop_fps=30.0, cop_exposure_s=0.05)

    def test_bits_out_of_range_rejected(self):
        with pytest.raises(ConfigurationError):
            AopConfig(quant_bits=16)

    def test_parallel_directions_rejected_by_operator(self):
        config = AopConfig(sd_directions=((1, 1), (2, 2)))
        with pytest.raises(ConfigurationError):
            config.gradient_operator()


@pytest.mark.unit
class TestSpatialDifference:

    def test_diagonal_difference_of_ramp(self):
        ys, xs = np.mgrid[0:6, 0:6].astype(np.float64)
        image = 0.1 * xs + 0.02 * ys
        sd = spatial_difference(image, (1, 1))
        assert np.allclose(sd[1:, 1:], 0.12)
        sd_b = spatial_difference(image, (-1, 1))
        assert np.allclose(sd_b[1:, :-1], -0.1 + 0.02)

    def test_sd_to_gradient_inverts_default_diagonals(self):
        ys, xs = np.mgrid[0:8, 0:8].astype(np.float64)
        image = 0.03 * xs - 0.01 * ys
        step = 1e-4
        frame = AopFrame(t=0, td=np.zeros((8, 8), dtype=np.int16),
                         sd_a=quantize(spatial_difference(image, (1, 1)), step, 4095),
                         sd_b=quantize(spatial_difference(image, (-1, 1)), step, 4095),
                         quant_step=step)
        gx, gy = sd_to_gradient(frame)
        assert np.allclose(gx[1:, 1:-1], 0.03, atol=2e-4)
        assert np.allclose(gy[1:, 1:-1], -0.01, atol=2e-4)


@pytest.mark.unit
class TestSampleAop:

    def test_frame_count_and_timestamps(self, checker_scene, ideal_aop_config):
        frames = sample_aop(checker_scene, ideal_aop_config, 0.0, 10 / 1515.0)
        assert len(frames) == 10
        assert frames[0].t == 0
        assert frames[1].t == int(round(1e6 / 1515.0))

    def test_first_frame_has_zero_td(self, checker_scene, ideal_aop_config):
        frames = sample_aop(checker_scene, ideal_aop_config, 0.0, 3 / 1515.0)
        assert not frames[0].td.any()
        assert frames[1].td.any()

    def test_td_matches_intensity_change(self, checker_scene, ideal_aop_config):
        frames = sample_aop(checker_scene, ideal_aop_config, 0.0, 2 / 1515.0)
        expected = checker_scene.render_normalized(1 / 1515.0) - checker_scene.render_normalized(0.0)
        assert np.max(np.abs(frames[1].td * ideal_aop_config.step - expected)) <= ideal_aop_config.step / 2 + 1e-12

    def test_static_scene_gives_zero_td(self, make_scene, ideal_aop_config):
        frames = sample_aop(make_scene(rpm=0.0), ideal_aop_config, 0.0, 3 / 1515.0)
        assert all(not f.td.any() for f in frames)
        assert frames[2].sd_a.any()

    def test_window_shorter_than_a_frame_rejected(self, checker_scene, ideal_aop_config):
        with pytest.raises(ConfigurationError):
            sample_aop(checker_scene, ideal_aop_config, 0.0, 1e-5)

    @pytest.mark.parametrize("directions", [((1, 1), (-1, 1)), ((2, -1), (1, 2))])
    def test_row_bands_do_not_change_frames(self, checker_scene, directions):
        config = AopConfig(fps=1515.0, quant_bits=10, cop_exposure_s=4e-4, sd_directions=directions)
        serial = sample_aop(checker_scene, config, 0.0, 4 / 1515.0)
        banded = sample_aop(checker_scene, config, 0.0, 4 / 1515.0, workers=5)
        for a, b in zip(serial, banded):
            assert a.t == b.t
            assert np.array_equal(a.td, b.td)
            assert np.array_equal(a.sd_a, b.sd_a)
            assert np.array_equal(a.sd_b, b.sd_b)


@pytest.mark.unit
class TestSampleCop:

    def test_static_scene_equals_render(self, make_scene):
        scene = make_scene(rpm=0.0)
        frame = sample_cop(scene, fps=30.0, exposure=1e-3)[0]
        assert np.allclose(frame.intensity, scene.render_normalized(0.0))
        assert frame.t_end - frame.t_start == 1000

    def test_motion_blur_lowers_contrast(self, make_scene):
        scene = make_scene(rpm=500.0)
        blurred = sample_cop(scene, fps=30.0, exposure=0.02)[0].intensity
        sharp = scene.render_normalized(0.01)
        assert np.var(blurred) < np.var(sharp)

    def test_frame_count_from_window(self, make_scene):
        frames = sample_cop(make_scene(rpm=10.0), fps=100.0, exposure=1e-3, t0=0.0, t1=0.05)
        assert len(frames) == 5

    def test_row_bands_do_not_change_exposure(self, checker_scene):
        serial = sample_cop(checker_scene, fps=100.0, exposure=2e-3, n_frames=2)
        banded = sample_cop(checker_scene, fps=100.0, exposure=2e-3, n_frames=2, workers=3)
        for a, b in zip(serial, banded):
            assert (a.t_start, a.t_end) == (b.t_start, b.t_end)
            assert np.allclose(a.intensity, b.intensity, rtol=0, atol=1e-12)

    def test_exposure_beyond_period_rejected(self, checker_scene):
        with pytest.raises(ConfigurationError):
            sample_cop(checker_scene, fps=100.0, exposure=0.02)
