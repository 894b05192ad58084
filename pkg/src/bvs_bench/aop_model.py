"""
Primitive-Pathway Sensor Model
==============================

Global-shutter sampling of quantised temporal difference (TD) and two diagonal spatial
differences (SD) at a fixed frame clock, plus an exposure-integrating intensity pathway
(COP) that shows motion blur.

Intensities are normalised by the scene illuminance, so a full-scale step is 1.0.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .error_handler import ConfigurationError
from .evs_model import map_row_bands

logger = logging.getLogger(__name__)

DEFAULT_SD_DIRECTIONS = ((1, 1), (-1, 1))


@dataclass
class AopConfig:
    """
    Primitive-pathway parameters.

    ``quant_step`` of ``None`` maps the signed range onto full scale (1 / (2^bits − 1)).
    Each SD channel is ``I(p) − I(p − d)`` for its offset ``d`` = (dx, dy).
    """
    fps: float = 757.0
    quant_bits: int = 7
    quant_step: Optional[float] = None
    sd_directions: Tuple[Tuple[int, int], Tuple[int, int]] = DEFAULT_SD_DIRECTIONS
    cop_fps: float = 30.0
    cop_exposure_s: float = 1e-3

    def __post_init__(self):
        if self.fps <= 0:
            raise ConfigurationError("fps must be > 0", "aop.fps")
        if not 2 <= self.quant_bits <= 12:
            raise ConfigurationError("quant_bits must be in [2, 12]", "aop.quant_bits")
        if self.quant_step is not None and self.quant_step <= 0:
            raise ConfigurationError("quant_step must be > 0", "aop.quant_step")
        if len(self.sd_directions) != 2:
            raise ConfigurationError("exactly two sd_directions are required", "aop.sd_directions")
        self.sd_directions = tuple(tuple(int(v) for v in d) for d in self.sd_directions)
        if self.cop_fps <= 0 or self.cop_exposure_s <= 0:
            raise ConfigurationError("cop_fps and cop_exposure_s must be > 0", "aop.cop_exposure_s")
        if self.cop_exposure_s > 1.0 / self.cop_fps:
            raise ConfigurationError("cop_exposure_s must not exceed 1/cop_fps", "aop.cop_exposure_s")
        if abs(self.direction_determinant) < 1e-12:
            logger.warning(f"SD directions {self.sd_directions} are linearly dependent; "
                           f"gradient conversion will be rejected")

    @property
    def max_code(self) -> int:
        return 2 ** self.quant_bits - 1

    @property
    def step(self) -> float:
        return self.quant_step if self.quant_step is not None else 1.0 / self.max_code

    @property
    def direction_determinant(self) -> float:
        (ax, ay), (bx, by) = self.sd_directions
        return float(ax * by - ay * bx)

    def gradient_operator(self) -> np.ndarray:
        """Inverse of the 2×2 matrix whose rows are the SD offsets."""
        if abs(self.direction_determinant) < 1e-12:
            raise ConfigurationError(
                f"SD directions {self.sd_directions} cannot span the gradient plane", "aop.sd_directions")
        return np.linalg.inv(np.array(self.sd_directions, dtype=np.float64))


@dataclass
class AopFrame:
    """One global-shutter sample. Planes hold signed integer codes."""
    t: int
    td: np.ndarray
    sd_a: np.ndarray
    sd_b: np.ndarray
    quant_step: float = 1.0 / 127
    sd_directions: Tuple[Tuple[int, int], Tuple[int, int]] = DEFAULT_SD_DIRECTIONS

    @property
    def shape(self) -> Tuple[int, int]:
        return self.td.shape


@dataclass
class CopFrame:
    """Exposure-integrated intensity frame."""
    t_start: int
    t_end: int
    intensity: np.ndarray

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValueError("CopFrame exposure must have t_end > t_start")


def quantize(values: np.ndarray, step: float, max_code: int) -> np.ndarray:
    """Symmetric saturating quantiser: round half away from zero, clip to ±max_code."""
    codes = np.sign(values) * np.floor(np.abs(values) / step + 0.5)
    return np.clip(codes, -max_code, max_code).astype(np.int16)


def spatial_difference(image: np.ndarray, offset: Sequence[int]) -> np.ndarray:
    """``I(x, y) − I(x − dx, y − dy)`` with edge-replicated borders."""
    dx, dy = int(offset[0]), int(offset[1])
    h, w = image.shape
    rows = np.clip(np.arange(h) - dy, 0, h - 1)
    cols = np.clip(np.arange(w) - dx, 0, w - 1)
    return image - image[np.ix_(rows, cols)]


def sample_aop(scene, config: AopConfig, t0: float, t1: float, workers: int = 1) -> List[AopFrame]:
    """
    AOP frames at t_k = t0 + k/fps for all t_k < t1. Frame 0 carries a zero TD plane.

    ``scene`` needs ``render_normalized(t, rows)`` and ``height``. Rows are split into bands
    rendered on ``workers`` threads; each band reads a halo of neighbouring rows for the SD
    offsets, so the result does not depend on ``workers``.
    """
    if config.quant_step is not None and config.quant_step <= 0:
        raise ConfigurationError("quant_step must be > 0", "aop.quant_step")
    if t1 - t0 < 1.0 / config.fps - 1e-12:
        raise ConfigurationError("AOP window must span at least one frame period")
    n_frames = max(1, int(math.ceil((t1 - t0) * config.fps - 1e-9)))
    times = [t0 + k / config.fps for k in range(n_frames)]
    step, max_code = config.step, config.max_code
    d_a, d_b = config.sd_directions
    halo = max(abs(d_a[1]), abs(d_b[1]))
    height = scene.height

    def run_band(band: slice):
        outer = slice(max(0, band.start - halo), min(height, band.stop + halo))
        inner = slice(band.start - outer.start, band.stop - outer.start)
        planes = []
        previous = None
        for t in times:
            image = scene.render_normalized(t, rows=outer)
            current = image[inner]
            td = np.zeros(current.shape, dtype=np.int16) if previous is None else quantize(current - previous, step, max_code)
            planes.append((td,
                           quantize(spatial_difference(image, d_a)[inner], step, max_code),
                           quantize(spatial_difference(image, d_b)[inner], step, max_code)))
            previous = current
        return planes

    bands = map_row_bands(run_band, height, workers)
    frames = []
    for k, t in enumerate(times):
        td, sd_a, sd_b = (np.vstack([band[k][c] for band in bands]) for c in range(3))
        frames.append(AopFrame(t=int(round(t * 1e6)), td=td, sd_a=sd_a, sd_b=sd_b,
                               quant_step=step, sd_directions=config.sd_directions))
    logger.debug(f"AOP sampled {n_frames} frames at {config.fps:g} fps over {len(bands)} row band(s)")
    return frames


def sd_to_gradient(frame: AopFrame) -> Tuple[np.ndarray, np.ndarray]:
    """
    Dequantised (gx, gy) from the two SD channels by solving D·g = sd, D rows = offsets.

    For the default diagonals this is gx = (sd_a − sd_b)/2, gy = (sd_a + sd_b)/2.
    """
    (ax, ay), (bx, by) = frame.sd_directions
    det = ax * by - ay * bx
    if abs(det) < 1e-12:
        raise ConfigurationError(
            f"SD directions {frame.sd_directions} cannot span the gradient plane", "aop.sd_directions")
    a = frame.sd_a.astype(np.float64) * frame.quant_step
    b = frame.sd_b.astype(np.float64) * frame.quant_step
    gx = (by * a - ay * b) / det
    gy = (-bx * a + ax * b) / det
    return gx, gy


def sample_cop(scene, fps: float, exposure: float, t0: float = 0.0, t1: Optional[float] = None,
               n_frames: Optional[int] = None, workers: int = 1) -> List[CopFrame]:
    """
    Intensity frames averaging the scene over each exposure window starting at t0 + k/fps.

    The exposure is integrated with the midpoint rule on at least 8 sub-samples, more when
    needed to keep rim motion between sub-samples below 0.5 px. Row bands are integrated on
    ``workers`` threads.
    """
    if exposure <= 0 or exposure > 1.0 / fps + 1e-12:
        raise ConfigurationError("COP exposure must be in (0, 1/fps]", "aop.cop_exposure_s")
    if n_frames is None:
        n_frames = 1 if t1 is None else max(1, int(math.floor((t1 - t0) * fps + 1e-9)))
    rim_motion = scene.max_rim_speed() * exposure
    n_sub = max(8, int(math.ceil(rim_motion / 0.5)) + 1)
    starts = [t0 + k / fps for k in range(n_frames)]

    def run_band(band: slice):
        exposures = []
        for start in starts:
            acc = np.zeros((band.stop - band.start, scene.width))
            for i in range(n_sub):
                acc += scene.render_normalized(start + (i + 0.5) * exposure / n_sub, rows=band)
            exposures.append(acc / n_sub)
        return exposures

    bands = map_row_bands(run_band, scene.height, workers)
    frames = [CopFrame(int(round(start * 1e6)), int(round((start + exposure) * 1e6)),
                       np.vstack([band[k] for band in bands]))
              for k, start in enumerate(starts)]
    logger.debug(f"COP sampled {n_frames} frames, {n_sub} sub-samples per exposure")
    return frames
