"""
Turntable Scene Model
=====================

Synthetic ground-truth world: a printed pattern on a disc spinning at constant speed,
lit at a fixed illuminance and viewed through a plane-to-sensor homography.

Geometry is expressed in sensor pixels. A pattern-plane point ``q`` appears on the sensor at
``H(c + R(θ(t))·(q − c))`` where ``c`` is the turntable center and ``R`` a rotation that turns
+x towards +y. The pattern is rasterised once into a fine texture and bilinearly interpolated,
so the scene can be queried at any time without temporal aliasing.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .error_handler import ConfigurationError
from .geometry import Homography, IntensityField, rotate_about
from .tasks import CornerSet, shi_tomasi

logger = logging.getLogger(__name__)

SUPERSAMPLE = 4


class PatternKind(Enum):
    UNIFORM = "uniform"
    RADIAL_LINE = "radial_line"
    CHECKER_GRID = "checker_grid"
    QR_LIKE = "qr_like"
    CORNER_GRID = "corner_grid"


DEFAULT_GRID_SIZE = {
    PatternKind.UNIFORM: 1,
    PatternKind.RADIAL_LINE: 1,      # spokes
    PatternKind.CHECKER_GRID: 4,     # squares per side
    PatternKind.QR_LIKE: 37,         # modules per side
    PatternKind.CORNER_GRID: 3,      # isolated squares per side
}


@dataclass
class PatternSpec:
    """
    Printed pattern description.

    ``feature_scale`` is the line width (RadialLine), square side (CheckerGrid, CornerGrid)
    or module side (QrLike) in pattern pixels; ``None`` derives it from the disc radius.
    ``contrast_levels`` holds the (low, high) reflectances; the disc base and the area
    around the disc share ``background``.
    """
    kind: PatternKind = PatternKind.CHECKER_GRID
    feature_scale: Optional[float] = None
    contrast_levels: List[float] = field(default_factory=lambda: [0.1, 0.9])
    background: float = 0.5
    grid_size: Optional[int] = None
    seed: int = 7

    def __post_init__(self):
        if isinstance(self.kind, str):
            try:
                self.kind = PatternKind(self.kind)
            except ValueError:
                raise ConfigurationError(
                    f"unknown pattern kind '{self.kind}', expected one of "
                    f"{[k.value for k in PatternKind]}", "scene.pattern.kind")
        if not self.contrast_levels:
            raise ConfigurationError("contrast_levels must not be empty", "scene.pattern.contrast_levels")
        for level in list(self.contrast_levels) + [self.background]:
            if not 0.0 <= level <= 1.0:
                raise ConfigurationError(f"reflectance {level} outside [0, 1]", "scene.pattern")
        if self.feature_scale is not None and self.feature_scale <= 0:
            raise ConfigurationError("feature_scale must be positive", "scene.pattern.feature_scale")
        if self.grid_size is not None and self.grid_size < 1:
            raise ConfigurationError("grid_size must be at least 1", "scene.pattern.grid_size")

    @property
    def low(self) -> float:
        return self.contrast_levels[0]

    @property
    def high(self) -> float:
        return self.contrast_levels[-1]

    def resolved_grid_size(self) -> int:
        return self.grid_size if self.grid_size is not None else DEFAULT_GRID_SIZE[self.kind]


@dataclass
class TurntableTrajectory:
    """Constant-speed rotation; ``center`` of ``None`` means the sensor center."""
    rpm: float = 0.0
    center: Optional[Tuple[float, float]] = None
    theta0: float = 0.0

    def __post_init__(self):
        if self.rpm < 0:
            raise ConfigurationError("rpm must be >= 0", "sweep.rpm")
        if self.center is not None:
            self.center = (float(self.center[0]), float(self.center[1]))

    @property
    def omega(self) -> float:
        """Angular speed in rad/s."""
        return 2.0 * math.pi * self.rpm / 60.0

    @property
    def period(self) -> float:
        return math.inf if self.rpm == 0 else 60.0 / self.rpm

    def theta(self, t: float) -> float:
        """Rotation angle at ``t`` seconds, reduced modulo one turn so periodic queries agree."""
        turns = self.rpm * t / 60.0
        return self.theta0 + 2.0 * math.pi * (turns - math.floor(turns))


class SceneModel:
    """
    Ground-truth scene. Immutable after construction and safe to share between readers.

    Args:
        pattern: printed pattern
        trajectory: turntable motion
        illuminance: lux, scales irradiance linearly
        homography: pattern plane to sensor plane
        sensor_resolution: (W, H)
        radius_px: disc radius, default 0.45·min(W, H)
        blur_px: Gaussian optical blur sigma applied to the pattern texture
        texel_px: texture sampling pitch
    """

    def __init__(self,
                 pattern: PatternSpec,
                 trajectory: TurntableTrajectory,
                 illuminance: float = 2000.0,
                 homography: Optional[Homography] = None,
                 sensor_resolution: Tuple[int, int] = (256, 256),
                 radius_px: Optional[float] = None,
                 blur_px: float = 0.0,
                 texel_px: float = 0.5):
        if illuminance <= 0:
            raise ConfigurationError("illuminance must be > 0", "scene.lux")
        width, height = int(sensor_resolution[0]), int(sensor_resolution[1])
        if width < 8 or height < 8:
            raise ConfigurationError("sensor resolution must be at least 8x8", "scene.resolution")
        if blur_px < 0 or texel_px <= 0:
            raise ConfigurationError("blur_px must be >= 0 and texel_px > 0", "scene")

        self.pattern = pattern
        self.trajectory = trajectory
        self.illuminance = float(illuminance)
        self.homography = homography or Homography.identity()
        self.width, self.height = width, height
        self.radius_px = float(radius_px) if radius_px else 0.45 * min(width, height)
        self.blur_px = float(blur_px)
        self.texel_px = float(texel_px)
        if trajectory.center is None:
            self.center = ((width - 1) / 2.0, (height - 1) / 2.0)
        else:
            self.center = trajectory.center

        self._inverse = self.homography.inverse()
        self._build_texture()

        # Rectified (pattern-plane, θ = 0) coordinates of every sensor pixel
        ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
        self._plane_x, self._plane_y = self._inverse.project_xy(xs, ys)

    # ------------------------------------------------------------------
    # Pattern rasterisation
    # ------------------------------------------------------------------

    def feature_scale(self) -> float:
        if self.pattern.feature_scale is not None:
            return float(self.pattern.feature_scale)
        n = self.pattern.resolved_grid_size()
        inscribed = math.sqrt(2.0) * self.radius_px
        kind = self.pattern.kind
        if kind == PatternKind.RADIAL_LINE:
            return 2.0
        if kind == PatternKind.CHECKER_GRID:
            return float(max(1, math.floor(inscribed / n)))
        if kind == PatternKind.CORNER_GRID:
            return float(max(1, math.floor(inscribed / (2 * n - 1))))
        return inscribed / n

    def _reflectance(self, du: np.ndarray, dv: np.ndarray) -> np.ndarray:
        """Reflectance at offsets (du, dv) from the center in the unrotated pattern plane."""
        spec = self.pattern
        out = np.full(du.shape, spec.background, dtype=np.float64)
        inside = du ** 2 + dv ** 2 <= self.radius_px ** 2
        n = spec.resolved_grid_size()
        s = self.feature_scale()
        kind = spec.kind

        if kind == PatternKind.UNIFORM:
            return out

        if kind == PatternKind.RADIAL_LINE:
            for k in range(n):
                phi = 2.0 * math.pi * k / n
                along = du * math.cos(phi) + dv * math.sin(phi)
                across = -du * math.sin(phi) + dv * math.cos(phi)
                on_line = inside & (along >= 0) & (np.abs(across) <= s / 2.0)
                out[on_line] = spec.high
            return out

        half = n * s / 2.0 if kind != PatternKind.CORNER_GRID else (2 * n - 1) * s / 2.0
        gx = (du + half) / s
        gy = (dv + half) / s
        in_grid = inside & (gx >= 0) & (gy >= 0)
        if kind == PatternKind.CORNER_GRID:
            cells = 2 * n - 1
            in_grid &= (gx < cells) & (gy < cells)
            ix, iy = np.floor(gx).astype(int), np.floor(gy).astype(int)
            on_square = in_grid & (ix % 2 == 0) & (iy % 2 == 0)
            out[on_square] = spec.high
            return out

        in_grid &= (gx < n) & (gy < n)
        ix = np.clip(np.floor(gx).astype(int), 0, n - 1)
        iy = np.clip(np.floor(gy).astype(int), 0, n - 1)
        if kind == PatternKind.CHECKER_GRID:
            levels = np.where((ix + iy) % 2 == 0, spec.low, spec.high)
        else:
            rng = np.random.default_rng(spec.seed)
            modules = rng.integers(0, 2, size=(n, n))
            levels = np.where(modules[iy, ix] == 0, spec.low, spec.high)
        out[in_grid] = levels[in_grid]
        return out

    def _build_texture(self):
        texel = self.texel_px
        margin = 2 * texel + 3.0 * self.blur_px
        extent = math.ceil((self.radius_px + margin) / texel) * texel
        n = int(round(2 * extent / texel)) + 1
        self._texture_origin = (self.center[0] - extent, self.center[1] - extent)
        offsets = (np.arange(n) * texel) - extent

        texture = np.zeros((n, n))
        sub = ((np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5) * texel
        dv_base, du_base = np.meshgrid(offsets, offsets, indexing="ij")
        for oy in sub:
            for ox in sub:
                texture += self._reflectance(du_base + ox, dv_base + oy)
        texture /= SUPERSAMPLE ** 2

        if self.blur_px > 0:
            texture = ndimage.gaussian_filter(texture, self.blur_px / texel, mode="nearest")
        self._texture = texture
        self._texture.setflags(write=False)
        logger.debug(f"Pattern texture {n}x{n} texels for {self.pattern.kind.value}")

    def _sample_texture(self, qx: np.ndarray, qy: np.ndarray) -> np.ndarray:
        tx = (qx - self._texture_origin[0]) / self.texel_px
        ty = (qy - self._texture_origin[1]) / self.texel_px
        values = ndimage.map_coordinates(self._texture, np.stack([ty.ravel(), tx.ravel()]),
                                         order=1, mode="nearest")
        return values.reshape(np.shape(qx))

    # ------------------------------------------------------------------
    # Ground-truth queries
    # ------------------------------------------------------------------

    @property
    def omega(self) -> float:
        return self.trajectory.omega

    def theta(self, t: float) -> float:
        return self.trajectory.theta(t)

    def sensor_to_pattern(self, x, y, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Unrotated pattern-plane coordinates seen by sensor position (x, y) at time t."""
        px, py = self._inverse.project_xy(x, y)
        return rotate_about(px, py, self.center, -self.theta(t))

    def pattern_to_sensor(self, points, t: float) -> np.ndarray:
        """Sensor positions at time t of (N, 2) unrotated pattern-plane points."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        rx, ry = rotate_about(pts[:, 0], pts[:, 1], self.center, self.theta(t))
        return self.homography.project(np.column_stack([rx, ry]))

    def irradiance_at(self, x, y, t: float):
        """Irradiance (lux × reflectance) at sensor positions; scalars in, scalar out."""
        qx, qy = self.sensor_to_pattern(x, y, t)
        values = self.illuminance * self._sample_texture(np.atleast_1d(qx), np.atleast_1d(qy))
        return float(values[0]) if np.ndim(x) == 0 and np.ndim(y) == 0 else values.reshape(np.shape(x))

    def render(self, t: float, rows: Optional[slice] = None) -> np.ndarray:
        """Irradiance on the full sensor grid (or a band of rows) at time t."""
        px = self._plane_x if rows is None else self._plane_x[rows]
        py = self._plane_y if rows is None else self._plane_y[rows]
        qx, qy = rotate_about(px, py, self.center, -self.theta(t))
        return self.illuminance * self._sample_texture(qx, qy)

    def render_normalized(self, t: float, rows: Optional[slice] = None) -> np.ndarray:
        return self.render(t, rows) / self.illuminance

    def render_reference(self, t: float) -> IntensityField:
        """Instantaneous (no motion blur) grayscale image normalised to [0, 1]."""
        return IntensityField(self.render_normalized(t), t)

    def gt_flow(self, x, y, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Image-plane velocity in px/s. Points whose rectified position falls outside the disc
        return NaN (no-motion region), which is distinct from the zero flow of a still disc.
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        px, py = self._inverse.project_xy(x, y)
        dx, dy = px - self.center[0], py - self.center[1]
        inside = dx ** 2 + dy ** 2 <= self.radius_px ** 2
        omega = self.omega
        vrx, vry = -omega * dy, omega * dx
        if self.homography.is_identity:
            vx, vy = vrx, vry
        else:
            jac = self.homography.jacobian(px, py)
            vx = jac[..., 0, 0] * vrx + jac[..., 0, 1] * vry
            vy = jac[..., 1, 0] * vrx + jac[..., 1, 1] * vry
        vx = np.where(inside, vx, np.nan)
        vy = np.where(inside, vy, np.nan)
        if vx.ndim == 0:
            return float(vx), float(vy)
        return vx, vy

    def gt_flow_field(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        ys, xs = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return self.gt_flow(xs, ys, t)

    def max_rim_speed(self) -> float:
        """Upper bound on image-plane speed (px/s) anywhere on the disc."""
        if self.omega == 0:
            return 0.0
        angles = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
        rim_x = self.center[0] + self.radius_px * np.cos(angles)
        rim_y = self.center[1] + self.radius_px * np.sin(angles)
        sx, sy = self.homography.project_xy(rim_x, rim_y)
        vx, vy = self.gt_flow(sx, sy, 0.0)
        speeds = np.hypot(vx, vy)
        speeds = speeds[np.isfinite(speeds)]
        fallback = self.omega * self.radius_px
        return float(max(speeds.max() if speeds.size else fallback, fallback))

    def max_log_gradient(self, eps: float) -> float:
        """Largest spatial derivative of ln(I + eps) in the texture, per pattern pixel."""
        irr = self.illuminance * self._texture + eps
        worst = 0.0
        for axis in (0, 1):
            diff = np.abs(np.diff(irr, axis=axis))
            lower = np.minimum(irr[:-1] if axis == 0 else irr[:, :-1],
                               irr[1:] if axis == 0 else irr[:, 1:])
            if diff.size:
                worst = max(worst, float(np.max(diff / lower)))
        return worst / self.texel_px

    def reference_pattern_image(self) -> np.ndarray:
        """Unrotated fronto-parallel pattern on the sensor grid, normalised to [0, 1]."""
        ys, xs = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return self._sample_texture(xs, ys)

    def gt_corners(self, quality_level: float = 0.5, min_distance: Optional[float] = None,
                   max_corners: int = 1000) -> CornerSet:
        """Shi-Tomasi corners of the unrotated, unwarped pattern, in pattern-plane pixels."""
        if min_distance is None:
            min_distance = max(3.0, self.feature_scale() / 2.0)
        return shi_tomasi(self.reference_pattern_image(), max_corners=max_corners,
                          quality_level=quality_level, min_distance=min_distance)

    def corners_at(self, t: float, corners: Optional[CornerSet] = None, **kwargs) -> CornerSet:
        """Ground-truth corners propagated to their sensor positions at time t."""
        base = corners if corners is not None else self.gt_corners(**kwargs)
        if len(base) == 0:
            return base
        moved = self.pattern_to_sensor(base.points, t)
        return CornerSet(moved, base.scores.copy())
