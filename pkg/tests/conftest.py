"""
PyTest Configuration and Fixtures
=================================

Shared fixtures for the BVS Bench test suite: small turntable scenes, ideal sensor
configurations and run configurations sized for fast end-to-end sweeps.
"""

import sys
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from bvs_bench.aop_model import AopConfig
from bvs_bench.config_manager import config_from_dict
from bvs_bench.error_handler import ErrorHandler
from bvs_bench.evs_model import EvsConfig, EventStream
from bvs_bench.geometry import Homography
from bvs_bench.performance_monitor import PerformanceMonitor
from bvs_bench.scene import PatternSpec, SceneModel, TurntableTrajectory

SMALL = 64


@pytest.fixture
def make_scene():
    """Factory for small scenes: ``make_scene(kind="checker_grid", rpm=100, ...)``"""

    def factory(kind: str = "checker_grid", rpm: float = 100.0, size: int = SMALL,
                blur_px: float = 1.0, homography: Homography = None, lux: float = 2000.0,
                **pattern_kwargs) -> SceneModel:
        return SceneModel(PatternSpec(kind=kind, **pattern_kwargs), TurntableTrajectory(rpm=rpm),
                          illuminance=lux, homography=homography, sensor_resolution=(size, size),
                          blur_px=blur_px)

    return factory


@pytest.fixture
def checker_scene(make_scene) -> SceneModel:
    return make_scene("checker_grid", rpm=100.0)


@pytest.fixture
def ideal_evs_config() -> EvsConfig:
    return EvsConfig.ideal(contrast_threshold=0.2)


@pytest.fixture
def ideal_aop_config() -> AopConfig:
    return AopConfig(fps=1515.0, quant_bits=10, cop_exposure_s=4e-4)


@pytest.fixture
def tiny_stream() -> EventStream:
    """Five hand-made events on a 16×16 sensor"""
    return EventStream(t=[10, 20, 20, 35, 90], x=[1, 2, 3, 4, 15], y=[0, 5, 5, 9, 15],
                       p=[1, -1, 1, 1, -1], width=16, height=16, t_start_us=0, t_end_us=100)


@pytest.fixture
def smooth_image() -> np.ndarray:
    ys, xs = np.mgrid[0:32, 0:40].astype(np.float64)
    return 0.5 + 0.2 * np.sin(xs / 5.0) * np.cos(ys / 7.0) + 0.01 * xs


@pytest.fixture
def error_handler() -> ErrorHandler:
    return ErrorHandler()


@pytest.fixture
def monitor() -> PerformanceMonitor:
    return PerformanceMonitor()


@pytest.fixture
def small_run_dict(tmp_path) -> Dict[str, Any]:
    """Two sensors × two speeds on a 64×64 checker grid"""
    return {
        "seed": 3,
        "jobs": 1,
        "scene": {"pattern": "checker_grid", "resolution": [SMALL, SMALL], "blur_px": 1.0, "lux": [2000]},
        "sensors": [
            {"id": "evs_ideal", "preset": "ideal_evs"},
            {"id": "aop_ideal", "preset": "ideal_aop"},
        ],
        "sweep": {"rpm": [50, 100], "eval_deg": 20, "fill_deg": 10, "aop_frames": 6},
        "tasks": {"corner_windows": 2, "corner_samples": 2, "cmax_coarse_steps": 11},
        "output": {"directory": str(tmp_path / "run"), "plots": False, "event_format": "bin"},
        "logging": {"log_level": "WARNING"},
    }


@pytest.fixture
def small_run_config(small_run_dict):
    return config_from_dict(small_run_dict)
