"""
Motion-Compensated Calibration
==============================

Angle-windowed slicing of event streams, rotational warping into an image of warped
events (IWE), contrast-maximisation speed search and homography application.

Warps rotate each event about the turntable center by −ω·(t − t_ref). When a homography is
given, event positions are first mapped back to the fronto-parallel pattern plane and then
rotated.
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage, optimize

from .error_handler import ConfigurationError, InsufficientEventsError
from .evs_model import EventStream
from .geometry import Homography, IntensityField, warp_image

logger = logging.getLogger(__name__)

LOW_CONFIDENCE_RATIO = 1.05

__all__ = ["Homography", "Iwe", "CmaxEstimate", "slice_by_angle", "warp_events", "accumulate_events",
           "cmax_objective", "estimate_omega_cmax", "apply_homography"]


@dataclass
class Iwe:
    """Image of warped events. Unsigned grids hold counts, signed grids polarity sums."""
    grid: np.ndarray
    t_ref: float
    omega_used: float
    out_of_bounds: int = 0
    signed: bool = False
    n_events: int = 0


@dataclass
class CmaxEstimate:
    omega_hat: float
    peak_to_mean: float
    low_confidence: bool
    grid: np.ndarray = field(repr=False)
    objective: np.ndarray = field(repr=False)
    refined: bool = False


def slice_by_angle(stream: EventStream, rpm: float, window_deg: float) -> List[EventStream]:
    """
    Partition the stream span into consecutive windows of ``window_deg`` of rotation.

    Slice k covers [t_start + k·Δt, t_start + (k+1)·Δt) with Δt = window_deg / (6·rpm) s.
    """
    if rpm <= 0:
        raise ConfigurationError("slice_by_angle needs rpm > 0", "sweep.rpm")
    if window_deg <= 0:
        raise ConfigurationError("window_deg must be > 0", "tasks.window_deg")
    dt_us = window_deg / (6.0 * rpm) * 1e6
    n = max(1, int(math.ceil(stream.duration_us / dt_us - 1e-6)))
    bounds = stream.t_start_us + dt_us * np.arange(n + 1)
    bounds[-1] = max(bounds[-1], stream.t_end_us)
    return [stream.time_window(bounds[k], bounds[k + 1]) for k in range(n)]


def _event_positions(events: EventStream, homography: Optional[Homography]) -> Tuple[np.ndarray, np.ndarray]:
    x = events.x.astype(np.float64)
    y = events.y.astype(np.float64)
    if homography is not None and not homography.is_identity:
        x, y = homography.inverse().project_xy(x, y)
    return x, y


def _splat(x: np.ndarray, y: np.ndarray, weights: np.ndarray, width: int, height: int) -> Tuple[np.ndarray, int]:
    """Bilinear splat; a position is in bounds iff it lies inside [0, W−1] × [0, H−1]."""
    inside = (x >= 0) & (x <= width - 1) & (y >= 0) & (y <= height - 1)
    out_of_bounds = int(np.count_nonzero(~inside))
    x, y, w = x[inside], y[inside], weights[inside]
    x0 = np.minimum(np.floor(x).astype(np.int64), width - 2)
    y0 = np.minimum(np.floor(y).astype(np.int64), height - 2)
    fx, fy = x - x0, y - y0
    base = y0 * width + x0
    idx = np.concatenate([base, base + 1, base + width, base + width + 1])
    wts = np.concatenate([w * (1 - fx) * (1 - fy), w * fx * (1 - fy), w * (1 - fx) * fy, w * fx * fy])
    grid = np.bincount(idx, weights=wts, minlength=width * height).reshape(height, width)
    return grid, out_of_bounds


def warp_events(events: EventStream, omega: float, center: Tuple[float, float],
                t_ref: Optional[float] = None, signed: bool = False,
                homography: Optional[Homography] = None) -> Iwe:
    """
    Rotate every event back to ``t_ref`` (µs, default the slice midpoint) and splat it.

    Events landing outside the grid are dropped and counted in ``out_of_bounds``.
    """
    if t_ref is None:
        t_ref = (events.t_start_us + events.t_end_us) / 2.0
    cx, cy = center
    if not (0 <= cx <= events.width - 1 and 0 <= cy <= events.height - 1):
        raise ConfigurationError(f"warp center {center} outside the sensor")
    x, y = _event_positions(events, homography)
    angle = -omega * (events.t.astype(np.float64) - t_ref) * 1e-6
    c, s = np.cos(angle), np.sin(angle)
    dx, dy = x - cx, y - cy
    xw = cx + c * dx - s * dy
    yw = cy + s * dx + c * dy
    weights = events.p.astype(np.float64) if signed else np.ones(len(events))
    grid, oob = _splat(xw, yw, weights, events.width, events.height)
    return Iwe(grid, float(t_ref), float(omega), oob, signed, len(events))


def accumulate_events(events: EventStream, signed: bool = False) -> np.ndarray:
    """Plain per-pixel event histogram."""
    weights = events.p.astype(np.float64) if signed else None
    idx = events.y.astype(np.int64) * events.width + events.x
    counts = np.bincount(idx, weights=weights, minlength=events.width * events.height)
    return counts.reshape(events.height, events.width).astype(np.float64)


def cmax_objective(events: EventStream, omega: float, center: Tuple[float, float],
                   signed: bool = False, smoothing_sigma: float = 1.0,
                   homography: Optional[Homography] = None) -> float:
    """Variance of the IWE, Gaussian-smoothed first when ``smoothing_sigma > 0``; 0 gives the raw variance."""
    grid = warp_events(events, omega, center, signed=signed, homography=homography).grid
    if smoothing_sigma > 0:
        grid = ndimage.gaussian_filter(grid, smoothing_sigma)
    return float(np.var(grid))


def estimate_omega_cmax(events: EventStream, center: Tuple[float, float],
                        omega_range: Tuple[float, float], coarse_steps: int = 31,
                        signed: bool = False, smoothing_sigma: float = 1.0,
                        homography: Optional[Homography] = None,
                        rel_tol: float = 1e-4) -> CmaxEstimate:
    """
    Contrast-maximisation search for the rotation speed of one slice.

    A coarse grid over ``omega_range`` is refined by golden-section search around the best
    grid point. Peaks on the range boundary are returned as-is.

    Raises:
        InsufficientEventsError: the slice is empty
    """
    lo, hi = omega_range
    if hi <= lo:
        raise ConfigurationError("omega_range must satisfy hi > lo", "tasks.omega_range")
    if coarse_steps < 3:
        raise ConfigurationError("coarse_steps must be at least 3", "tasks.cmax_coarse_steps")
    if len(events) == 0:
        raise InsufficientEventsError("insufficient events for contrast maximisation")

    def objective(w: float) -> float:
        return cmax_objective(events, w, center, signed, smoothing_sigma, homography)

    grid = np.linspace(lo, hi, coarse_steps)
    values = np.array([objective(w) for w in grid])
    best = int(np.argmax(values))
    mean = float(values.mean())
    peak_to_mean = float(values[best] / mean) if mean > 0 else 1.0
    omega_hat, refined = float(grid[best]), False

    if 0 < best < coarse_steps - 1:
        bracket = (grid[best - 1], grid[best], grid[best + 1])
        try:
            result = optimize.minimize_scalar(lambda w: -objective(w), bracket=bracket,
                                              method="golden", tol=rel_tol)
        except ValueError:
            # Flat neighbourhood: bracket condition fails, fall back to bounded Brent
            result = optimize.minimize_scalar(lambda w: -objective(w), bounds=(bracket[0], bracket[2]),
                                              method="bounded",
                                              options={"xatol": rel_tol * max(abs(grid[best]), grid[1] - grid[0])})
        if bracket[0] <= result.x <= bracket[2] and -result.fun >= values[best]:
            omega_hat, refined = float(result.x), True

    low_confidence = peak_to_mean < LOW_CONFIDENCE_RATIO
    if low_confidence:
        logger.warning(f"Low-confidence CMax estimate: peak/mean objective {peak_to_mean:.3f}")
    return CmaxEstimate(omega_hat, peak_to_mean, low_confidence, grid, values, refined)


# ----------------------------------------------------------------------
# Homography application
# ----------------------------------------------------------------------

@functools.singledispatch
def _apply(data, h: Homography):
    raise TypeError(f"apply_homography does not support {type(data).__name__}")


@_apply.register
def _(data: Iwe, h: Homography) -> Iwe:
    return Iwe(warp_image(data.grid, h), data.t_ref, data.omega_used, data.out_of_bounds,
               data.signed, data.n_events)


@_apply.register
def _(data: IntensityField, h: Homography) -> IntensityField:
    return IntensityField(warp_image(data.data, h), data.t)


@_apply.register
def _(data: np.ndarray, h: Homography) -> np.ndarray:
    # Plain arrays are point lists; images travel wrapped in Iwe / IntensityField
    return h.project(data)


@_apply.register
def _(data: list, h: Homography) -> np.ndarray:
    return h.project(np.asarray(data, dtype=np.float64))


def apply_homography(h: Homography, data):
    """
    Apply ``h`` to an Iwe, IntensityField, CornerSet or (N, 2) point array.

    Images are resampled by inverse mapping with bilinear interpolation; points are mapped
    forward exactly.
    """
    return _apply(data, h)


def register_corner_set(corner_set_type):
    """Hook used by the tasks module to teach apply_homography about CornerSet."""
    @_apply.register(corner_set_type)
    def _(data, h: Homography):
        return corner_set_type(h.project(data.points) if len(data) else data.points.copy(),
                               data.scores.copy(), None if data.t is None else data.t.copy())
    return corner_set_type
