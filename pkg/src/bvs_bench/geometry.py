"""
Planar geometry shared by the scene, calibration and task modules.

Coordinates are (x, y) = (column, row) in pixels with y pointing down. Image arrays are
indexed ``[row, col]``.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from .error_handler import ConfigurationError

DET_EPSILON = 1e-12


class Homography:
    """3×3 projective map, row-major, normalised so that element (3,3) is 1."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ConfigurationError(f"homography must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ConfigurationError("homography has non-finite entries")
        if abs(m[2, 2]) < DET_EPSILON:
            raise ConfigurationError("homography cannot be normalised: element (3,3) is zero")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= DET_EPSILON:
            raise ConfigurationError("homography is singular (|det| <= 1e-12)")
        self._matrix = m
        self._matrix.setflags(write=False)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        return cls([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])

    @classmethod
    def oblique(cls, width: int, height: int, tilt_deg: float) -> "Homography":
        """
        View of the turntable plane tilted about the horizontal image axis.

        Focal length equals the sensor width, the principal point is the sensor center, and
        the result is re-translated so the center stays fixed.
        """
        f = float(width)
        cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
        k = np.array([[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]])
        a = math.radians(tilt_deg)
        rot = np.array([[1.0, 0.0, 0.0],
                        [0.0, math.cos(a), -math.sin(a)],
                        [0.0, math.sin(a), math.cos(a)]])
        h = k @ rot @ np.linalg.inv(k)
        h = h / h[2, 2]
        moved = h @ np.array([cx, cy, 1.0])
        moved = moved[:2] / moved[2]
        shift = np.array([[1.0, 0.0, cx - moved[0]], [0.0, 1.0, cy - moved[1]], [0.0, 0.0, 1.0]])
        return cls(shift @ h)

    @classmethod
    def from_preset(cls, preset: str, width: int, height: int, tilt_deg: float = 20.0) -> "Homography":
        if preset == "identity":
            return cls.identity()
        if preset == "oblique":
            return cls.oblique(width, height, tilt_deg)
        raise ConfigurationError(f"unknown homography preset '{preset}'", "scene.homography")

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self._matrix))

    def __matmul__(self, other: "Homography") -> "Homography":
        return Homography(self._matrix @ other.matrix)

    def __eq__(self, other) -> bool:
        return isinstance(other, Homography) and np.array_equal(self._matrix, other.matrix)

    def __repr__(self) -> str:
        return f"Homography({self._matrix.tolist()})"

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self._matrix, np.eye(3)))

    def project(self, points) -> np.ndarray:
        """Map (N, 2) points forward."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        homog = np.column_stack([pts, np.ones(len(pts))]) @ self._matrix.T
        return homog[:, :2] / homog[:, 2:3]

    def project_xy(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        """Map coordinate arrays of any matching shape forward."""
        m = self._matrix
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
        return ((m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w,
                (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w)

    def jacobian(self, x, y) -> np.ndarray:
        """Derivative of the forward map at (x, y); shape ``x.shape + (2, 2)``."""
        m = self._matrix
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
        px, py = self.project_xy(x, y)
        jac = np.empty(x.shape + (2, 2))
        jac[..., 0, 0] = (m[0, 0] - px * m[2, 0]) / w
        jac[..., 0, 1] = (m[0, 1] - px * m[2, 1]) / w
        jac[..., 1, 0] = (m[1, 0] - py * m[2, 0]) / w
        jac[..., 1, 1] = (m[1, 1] - py * m[2, 1]) / w
        return jac


@dataclass
class IntensityField:
    """Normalised grayscale image sampled at one instant (or over an exposure)."""
    data: np.ndarray
    t: float = 0.0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape


def rotate_about(x, y, center: Tuple[float, float], angle: float) -> Tuple[np.ndarray, np.ndarray]:
    """Rotate points by ``angle`` radians about ``center``; positive turns +x towards +y."""
    c, s = math.cos(angle), math.sin(angle)
    dx = np.asarray(x, dtype=np.float64) - center[0]
    dy = np.asarray(y, dtype=np.float64) - center[1]
    return center[0] + c * dx - s * dy, center[1] + s * dx + c * dy


def bilinear_sample(image: np.ndarray, x, y, cval: float = 0.0) -> np.ndarray:
    """Bilinear lookup of ``image`` at float positions; outside the grid returns ``cval``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    coords = np.stack([y.ravel(), x.ravel()])
    values = ndimage.map_coordinates(image, coords, order=1, mode="constant", cval=cval)
    return values.reshape(x.shape)


def warp_image(image: np.ndarray, homography: Homography, cval: float = 0.0) -> np.ndarray:
    """Resample ``image`` under ``homography`` by inverse mapping."""
    h, w = image.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    src_x, src_y = homography.inverse().project_xy(xs, ys)
    return bilinear_sample(image, src_x, src_y, cval=cval)
