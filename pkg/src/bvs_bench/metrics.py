"""
Imaging-quality metrics: edge thickness on a circle around the turntable center, structural
indicators (TSS, GM, VAR, GradVar) and normalisation against the slowest speed of a sweep.

Gradients here are central differences with one-sided borders (``numpy.gradient``).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .error_handler import ConfigurationError, NoEdgeFoundError
from .geometry import bilinear_sample

logger = logging.getLogger(__name__)

STRUCTURAL_METRICS = ("tss", "gm", "var", "gradvar")
NORMALIZED_METRICS = ("thickness_px",) + STRUCTURAL_METRICS


def circle_profile(image: np.ndarray, center: Tuple[float, float], radius: float,
                   step_deg: float = 0.25) -> np.ndarray:
    """Bilinear samples along a circle, counter-clockwise from +x in steps of ``step_deg``."""
    angles = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    xs = center[0] + radius * np.cos(angles)
    ys = center[1] + radius * np.sin(angles)
    return bilinear_sample(np.asarray(image, dtype=np.float64), xs, ys, cval=0.0)


def thickness(edge_image: np.ndarray, center: Tuple[float, float], radius_px: float,
              radius_frac: float = 0.9, floor_frac: float = 0.05, significance: float = 3.0,
              step_deg: float = 0.25) -> float:
    """
    Arc length (px) of the strongest response on the circle at ``radius_frac · radius_px``,
    measured between the points where it falls to ``floor_frac`` of its peak.

    Raises:
        NoEdgeFoundError: the peak is not above ``significance`` × the profile median
    """
    radius = radius_frac * radius_px
    if radius < 5:
        raise ConfigurationError(f"thickness circle radius {radius:.2f}px is below 5px")
    profile = circle_profile(edge_image, center, radius, step_deg)
    n = len(profile)
    peak_idx = int(np.argmax(profile))
    peak = float(profile[peak_idx])
    median = float(np.median(profile))
    if peak <= 0 or peak <= significance * median:
        raise NoEdgeFoundError(f"no edge found: peak {peak:.4g} vs median {median:.4g}")
    floor = floor_frac * peak

    def walk(direction: int) -> float:
        previous = peak
        for k in range(1, n):
            value = profile[(peak_idx + direction * k) % n]
            if value <= floor:
                return (k - 1) + (previous - floor) / (previous - value)
            previous = value
        raise NoEdgeFoundError("edge response never falls to the floor level")

    samples = walk(+1) + walk(-1)
    return float(samples * math.radians(step_deg) * radius)


def _gradient(image: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    gy, gx = np.gradient(np.asarray(image, dtype=np.float64))
    return gx, gy


def tss(image: np.ndarray) -> float:
    """Sum of squared values."""
    return float(np.sum(np.square(image, dtype=np.float64)))


def gm(image: np.ndarray) -> float:
    """Mean squared gradient magnitude."""
    gx, gy = _gradient(image)
    return float(np.mean(gx ** 2 + gy ** 2))


def var(image: np.ndarray) -> float:
    """Population variance of pixel values."""
    return float(np.var(np.asarray(image, dtype=np.float64)))


def gradvar(image: np.ndarray) -> float:
    """Population variance of the gradient-magnitude image."""
    gx, gy = _gradient(image)
    return float(np.var(np.hypot(gx, gy)))


def structural_metrics(image: np.ndarray) -> Dict[str, float]:
    return {"tss": tss(image), "gm": gm(image), "var": var(image), "gradvar": gradvar(image)}


@dataclass
class MetricsRow:
    sensor_id: str
    rpm: float
    lux: float
    thickness_px: Optional[float] = None
    tss: Optional[float] = None
    gm: Optional[float] = None
    var: Optional[float] = None
    gradvar: Optional[float] = None
    normalized: Dict[str, Optional[float]] = field(default_factory=dict)


def _defined(value: Optional[float]) -> bool:
    return value is not None and not (isinstance(value, float) and math.isnan(value))


def normalize_sweep(rows: Sequence[MetricsRow]) -> List[MetricsRow]:
    """
    Divide every metric by its value in the lowest-rpm row. Rows come back ordered by rpm.

    A zero or missing anchor value leaves that normalised metric undefined (``None``).
    """
    if not rows:
        return []
    groups = {(r.sensor_id, r.lux) for r in rows}
    if len(groups) != 1:
        raise ValueError(f"normalize_sweep expects one (sensor, lux) group, got {sorted(groups)}")
    ordered = sorted(rows, key=lambda r: r.rpm)
    anchor = ordered[0]
    out = []
    for row in ordered:
        normalized = {}
        for name in NORMALIZED_METRICS:
            den, num = getattr(anchor, name), getattr(row, name)
            if not (_defined(den) and _defined(num)) or den == 0:
                normalized[name] = None
            else:
                normalized[name] = num / den
        out.append(replace(row, normalized=normalized))
    return out
