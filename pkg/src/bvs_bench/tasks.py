"""
Perception Tasks
================

Corner detection on intensity images (Shi-Tomasi) and on event streams (arc test on the
surface of active events), corner de-duplication and matching, window-based least-squares
optical flow from AOP frames or event windows, and angular speed from an annulus of flow.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .aop_model import AopFrame, sd_to_gradient
from .calib import accumulate_events, register_corner_set, slice_by_angle
from .error_handler import ConfigurationError, InsufficientEventsError, InsufficientSupportError
from .evs_model import EventStream
from .geometry import Homography

logger = logging.getLogger(__name__)

FLOW_METHOD = "lk-window"

# Circle offsets (dx, dy), walked in order around the ring
CIRCLE_R3 = ((0, 3), (1, 3), (2, 2), (3, 1), (3, 0), (3, -1), (2, -2), (1, -3),
             (0, -3), (-1, -3), (-2, -2), (-3, -1), (-3, 0), (-3, 1), (-2, 2), (-1, 3))
CIRCLE_R4 = ((0, 4), (1, 4), (2, 3), (3, 2), (4, 1), (4, 0), (4, -1), (3, -2), (2, -3), (1, -4),
             (0, -4), (-1, -4), (-2, -3), (-3, -2), (-4, -1), (-4, 0), (-4, 1), (-3, 2), (-2, 3), (-1, 4))


@dataclass
class CornerSet:
    """Corner positions (N, 2) as (x, y) px, scores (N,), optional timestamps in µs."""
    points: np.ndarray
    scores: np.ndarray
    t: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        self.scores = np.asarray(self.scores, dtype=np.float64).ravel()
        if self.t is not None:
            self.t = np.asarray(self.t, dtype=np.int64).ravel()
        if len(self.scores) != len(self.points):
            raise ValueError("one score per corner is required")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("corner scores must be finite")

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls, timestamped: bool = False) -> "CornerSet":
        return cls(np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=np.int64) if timestamped else None)

    def subset(self, index) -> "CornerSet":
        return CornerSet(self.points[index], self.scores[index], None if self.t is None else self.t[index])

    def within(self, width: int, height: int, margin: float = 0.0) -> "CornerSet":
        x, y = self.points[:, 0], self.points[:, 1]
        keep = (x >= margin) & (y >= margin) & (x <= width - 1 - margin) & (y <= height - 1 - margin)
        return self.subset(keep)


register_corner_set(CornerSet)


@dataclass
class MatchResult:
    n_matched: int
    n_detected: int
    n_gt: int
    precision: float
    recall: float
    f1: float
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass
class FlowField:
    """Per-pixel flow in px/s; invalid pixels hold NaN."""
    vx: np.ndarray
    vy: np.ndarray
    valid: np.ndarray
    method: str = FLOW_METHOD

    def __post_init__(self):
        self.valid = np.asarray(self.valid, dtype=bool)
        self.vx = np.where(self.valid, self.vx, np.nan)
        self.vy = np.where(self.valid, self.vy, np.nan)

    @classmethod
    def invalid(cls, shape: Tuple[int, int]) -> "FlowField":
        return cls(np.full(shape, np.nan), np.full(shape, np.nan), np.zeros(shape, dtype=bool))


@dataclass
class AngularSpeedEstimate:
    omega_hat: float
    rel_error: Optional[float]
    abs_error: Optional[float]
    n_support: int


# ----------------------------------------------------------------------
# Shi-Tomasi
# ----------------------------------------------------------------------

def _min_eigenvalue(sxx: np.ndarray, sxy: np.ndarray, syy: np.ndarray) -> np.ndarray:
    half_trace = (sxx + syy) / 2.0
    return half_trace - np.sqrt(((sxx - syy) / 2.0) ** 2 + sxy ** 2)


def shi_tomasi(image: np.ndarray, max_corners: int = 100, quality_level: float = 0.01,
               min_distance: float = 5.0, sigma: float = 1.5, border: int = 3) -> CornerSet:
    """
    Good-features-to-track corners.

    Structure tensor of central-difference gradients over a Gaussian window (σ = 1.5, 7×7),
    min-eigenvalue score, 3×3 local maxima above ``quality_level`` × the global maximum,
    greedy suppression within ``min_distance`` strongest first (ties in row-major order),
    then parabolic sub-pixel refinement.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    if h < 7 or w < 7:
        raise ConfigurationError("shi_tomasi needs an image of at least 7x7")
    gy, gx = np.gradient(image)
    smooth = lambda a: ndimage.gaussian_filter(a, sigma, truncate=2.0, mode="nearest")
    score = _min_eigenvalue(smooth(gx * gx), smooth(gx * gy), smooth(gy * gy))
    score = np.maximum(score, 0.0)

    mask = np.zeros_like(score, dtype=bool)
    mask[border:h - border, border:w - border] = True
    peak = float(score[mask].max()) if mask.any() else 0.0
    if peak <= 1e-12:
        return CornerSet.empty()

    local_max = score == ndimage.maximum_filter(score, size=3, mode="nearest")
    candidates = np.flatnonzero(mask & local_max & (score >= quality_level * peak))
    flat_scores = score.ravel()[candidates]
    order = np.lexsort((candidates, -flat_scores))
    candidates = candidates[order]

    kept: List[Tuple[int, int]] = []
    kept_xy = np.zeros((0, 2))
    for idx in candidates:
        row, col = divmod(int(idx), w)
        if kept and np.min(np.hypot(kept_xy[:, 0] - col, kept_xy[:, 1] - row)) < min_distance:
            continue
        kept.append((row, col))
        kept_xy = np.vstack([kept_xy, [col, row]])
        if len(kept) >= max_corners:
            break

    points, scores = [], []
    for row, col in kept:
        points.append((col + _parabolic_offset(score[row, col - 1], score[row, col], score[row, col + 1]),
                       row + _parabolic_offset(score[row - 1, col], score[row, col], score[row + 1, col])))
        scores.append(score[row, col])
    return CornerSet(np.array(points), np.array(scores))


def _parabolic_offset(left: float, centre: float, right: float) -> float:
    denom = left - 2.0 * centre + right
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


# ----------------------------------------------------------------------
# Event corners
# ----------------------------------------------------------------------

def _arc_is_corner(values: np.ndarray, bounds: Sequence[Tuple[int, int]]) -> bool:
    """
    True when, for some length k in ``bounds``, the k newest ring pixels form one contiguous
    arc that is strictly newer than every remaining pixel.
    """
    n = len(values)
    order = np.argsort(-values, kind="stable")
    lengths = sorted({k for lo, hi in bounds for k in range(lo, hi + 1) if 0 < k < n})
    for k in lengths:
        if values[order[k - 1]] <= values[order[k]]:
            continue
        member = np.zeros(n, dtype=bool)
        member[order[:k]] = True
        if np.count_nonzero(member != np.roll(member, 1)) == 2:
            return True
    return False


class ArcCornerDetector:
    """
    Surface-of-active-events corner detector, one surface per polarity.

    An event is a corner when both its radius-3 and radius-4 rings pass the arc test. Arc
    lengths are checked for the arc and, through the complementary bounds, its complement.
    """

    def __init__(self, width: int, height: int,
                 r3_bounds: Tuple[int, int] = (3, 6), r4_bounds: Tuple[int, int] = (4, 8),
                 border: int = 4):
        self.width, self.height = width, height
        n3, n4 = len(CIRCLE_R3), len(CIRCLE_R4)
        self.r3_bounds = [tuple(r3_bounds), (n3 - r3_bounds[1], n3 - r3_bounds[0])]
        self.r4_bounds = [tuple(r4_bounds), (n4 - r4_bounds[1], n4 - r4_bounds[0])]
        self.border = border
        self._dx3 = np.array([d[0] for d in CIRCLE_R3])
        self._dy3 = np.array([d[1] for d in CIRCLE_R3])
        self._dx4 = np.array([d[0] for d in CIRCLE_R4])
        self._dy4 = np.array([d[1] for d in CIRCLE_R4])
        self.surfaces = {1: np.full((height, width), -1, dtype=np.int64),
                         -1: np.full((height, width), -1, dtype=np.int64)}
        self.rejected_events = 0

    def process(self, stream: EventStream) -> CornerSet:
        xs, ys, ts, ps = [], [], [], []
        b = self.border
        for t, x, y, p in zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist()):
            if not (0 <= x < self.width and 0 <= y < self.height):
                self.rejected_events += 1
                continue
            sae = self.surfaces[p]
            sae[y, x] = t
            if x < b or y < b or x >= self.width - b or y >= self.height - b:
                continue
            ring3 = sae[y + self._dy3, x + self._dx3]
            if not _arc_is_corner(ring3, self.r3_bounds):
                continue
            ring4 = sae[y + self._dy4, x + self._dx4]
            if not _arc_is_corner(ring4, self.r4_bounds):
                continue
            xs.append(x)
            ys.append(y)
            ts.append(t)
        if self.rejected_events:
            logger.warning(f"Arc detector rejected {self.rejected_events} out-of-bounds events")
        if not xs:
            return CornerSet.empty(timestamped=True)
        return CornerSet(np.column_stack([xs, ys]), np.ones(len(xs)), np.array(ts))


def arc_corner_detect(stream: EventStream, resolution: Optional[Tuple[int, int]] = None,
                      r3_bounds: Tuple[int, int] = (3, 6), r4_bounds: Tuple[int, int] = (4, 8)) -> CornerSet:
    """Timestamped event corners of a time-sorted stream; ``resolution`` is (W, H)."""
    width, height = resolution or (stream.width, stream.height)
    return ArcCornerDetector(width, height, r3_bounds, r4_bounds).process(stream)


def dedup_corners(corners: CornerSet, radius: float = 3.0) -> CornerSet:
    """
    Greedy de-duplication: strongest (or, for timestamped sets, newest) first; a corner is
    dropped when a kept corner lies within Chebyshev distance ``radius``.
    """
    if len(corners) == 0:
        return corners
    if corners.t is not None:
        order = np.lexsort((np.arange(len(corners)), -corners.scores, -corners.t))
    else:
        order = np.lexsort((np.arange(len(corners)), -corners.scores))
    kept: List[int] = []
    for i in order:
        if kept:
            d = np.max(np.abs(corners.points[kept] - corners.points[i]), axis=1)
            if np.any(d <= radius):
                continue
        kept.append(int(i))
    return corners.subset(np.array(kept, dtype=np.int64))


def match_corners(detected: CornerSet, gt: CornerSet, match_radius: float = 3.0) -> MatchResult:
    """
    One-to-one greedy matching: candidate pairs within ``match_radius`` are taken by
    increasing distance, then decreasing detection score.
    """
    if match_radius <= 0:
        raise ConfigurationError("match_radius must be > 0", "tasks.match_radius")
    n_det, n_gt = len(detected), len(gt)
    n_matched = 0
    if n_det and n_gt:
        diff = detected.points[:, None, :] - gt.points[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        det_idx, gt_idx = np.nonzero(dist <= match_radius)
        order = np.lexsort((gt_idx, det_idx, -detected.scores[det_idx], dist[det_idx, gt_idx]))
        used_det, used_gt = set(), set()
        for k in order:
            d, g = int(det_idx[k]), int(gt_idx[k])
            if d in used_det or g in used_gt:
                continue
            used_det.add(d)
            used_gt.add(g)
        n_matched = len(used_det)

    return _match_result(n_matched, n_det, n_gt)


def _match_result(n_matched: int, n_det: int, n_gt: int) -> MatchResult:
    precision = n_matched / n_det if n_det else 0.0
    recall = n_matched / n_gt if n_gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MatchResult(n_matched, n_det, n_gt, precision, recall, f1,
                       precision_defined=n_det > 0, recall_defined=n_gt > 0)


def merge_match_results(results: Sequence[MatchResult]) -> MatchResult:
    """Pool counts over several windows and recompute the ratios."""
    return _match_result(sum(r.n_matched for r in results), sum(r.n_detected for r in results),
                         sum(r.n_gt for r in results))


# ----------------------------------------------------------------------
# Optical flow
# ----------------------------------------------------------------------

def lucas_kanade(gx_list: Sequence[np.ndarray], gy_list: Sequence[np.ndarray], it_list: Sequence[np.ndarray],
                 window: int = 5, min_eig_rel: float = 0.01, min_eig_abs: float = 1e-10) -> FlowField:
    """
    Least-squares solution of gx·vx + gy·vy + It = 0 over ``window``×``window``
    neighbourhoods, with sums accumulated over all supplied frame pairs.
    """
    box = lambda a: ndimage.uniform_filter(a, size=window, mode="nearest")
    a11 = sum(box(gx * gx) for gx in gx_list)
    a12 = sum(box(gx * gy) for gx, gy in zip(gx_list, gy_list))
    a22 = sum(box(gy * gy) for gy in gy_list)
    b1 = -sum(box(gx * it) for gx, it in zip(gx_list, it_list))
    b2 = -sum(box(gy * it) for gy, it in zip(gy_list, it_list))

    min_eig = _min_eigenvalue(a11, a12, a22)
    threshold = max(min_eig_rel * float(min_eig.max()), min_eig_abs)
    valid = min_eig > threshold
    det = np.where(valid, a11 * a22 - a12 ** 2, 1.0)
    vx = (a22 * b1 - a12 * b2) / det
    vy = (a11 * b2 - a12 * b1) / det
    return FlowField(vx, vy, valid)


def frame_stride(fps: float, rpm: float, min_rotation_deg: Optional[float]) -> int:
    """Smallest frame spacing whose rotation increment exceeds ``min_rotation_deg``."""
    if not min_rotation_deg or rpm <= 0:
        return 1
    per_frame = 6.0 * rpm / fps
    return int(math.floor(min_rotation_deg / per_frame)) + 1


def flow_from_aop(frames: Sequence[AopFrame], fps: float, window: int = 5,
                  min_eig_rel: float = 0.01, stride: int = 1,
                  min_rotation_deg: Optional[float] = None, rpm: Optional[float] = None) -> FlowField:
    """
    Flow from TD and SD: gradients are the mean of both frames' SD gradients, shifted to the
    TD sample position; the temporal derivative is the TD sum over the pair divided by the
    pair spacing.
    """
    if len(frames) < 2:
        raise InsufficientEventsError("flow_from_aop needs at least two frames")
    if min_rotation_deg is not None and rpm is not None:
        stride = frame_stride(fps, rpm, min_rotation_deg)
    stride = max(1, min(stride, len(frames) - 1))

    d_a, d_b = frames[0].sd_directions
    centre_offset = ((d_a[1] + d_b[1]) / 4.0, (d_a[0] + d_b[0]) / 4.0)
    gradients = [sd_to_gradient(f) for f in frames]

    gx_list, gy_list, it_list = [], [], []
    for k in range(stride, len(frames)):
        gx = (gradients[k - stride][0] + gradients[k][0]) / 2.0
        gy = (gradients[k - stride][1] + gradients[k][1]) / 2.0
        if centre_offset != (0.0, 0.0):
            shift = (-centre_offset[0], -centre_offset[1])
            gx = ndimage.shift(gx, shift, order=1, mode="nearest")
            gy = ndimage.shift(gy, shift, order=1, mode="nearest")
        td = sum(frames[j].td.astype(np.float64) for j in range(k - stride + 1, k + 1))
        gx_list.append(gx)
        gy_list.append(gy)
        it_list.append(td * frames[k].quant_step * fps / stride)
    return lucas_kanade(gx_list, gy_list, it_list, window, min_eig_rel)


def flow_from_events(stream: EventStream, rpm_nominal: float, window_deg: float = 1.5,
                     sigma: float = 1.0, window: int = 5, min_eig_rel: float = 0.01) -> FlowField:
    """
    Flow between consecutive unwarped event-count images of ``window_deg`` rotation each.
    """
    shape = (stream.height, stream.width)
    if len(stream) == 0:
        raise InsufficientEventsError("flow_from_events needs a non-empty stream")
    if rpm_nominal <= 0:
        return FlowField.invalid(shape)
    dt_s = window_deg / (6.0 * rpm_nominal)
    slices = slice_by_angle(stream, rpm_nominal, window_deg)
    images = [ndimage.gaussian_filter(accumulate_events(s), sigma) for s in slices]
    if len(images) < 2:
        return FlowField.invalid(shape)

    gx_list, gy_list, it_list = [], [], []
    for a, b in zip(images[:-1], images[1:]):
        gy, gx = np.gradient((a + b) / 2.0)
        gx_list.append(gx)
        gy_list.append(gy)
        it_list.append((b - a) / dt_s)
    return lucas_kanade(gx_list, gy_list, it_list, window, min_eig_rel)


def angular_speed_from_flow(flow: FlowField, center: Tuple[float, float], radius_px: float,
                            omega_gt: Optional[float] = None, r_in_frac: float = 0.40,
                            r_out_frac: float = 0.50, min_support: int = 50,
                            homography: Optional[Homography] = None) -> AngularSpeedEstimate:
    """
    Median of tangential speed over radius in the annulus [r_in, r_out]·radius_px.

    With a homography, positions and flow are first mapped to the pattern plane.

    Raises:
        InsufficientSupportError: fewer than ``min_support`` valid pixels in the annulus
    """
    h, w = flow.vx.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    vx, vy = flow.vx, flow.vy
    if homography is not None and not homography.is_identity:
        inverse = homography.inverse()
        jac = inverse.jacobian(xs, ys)
        vx, vy = (jac[..., 0, 0] * flow.vx + jac[..., 0, 1] * flow.vy,
                  jac[..., 1, 0] * flow.vx + jac[..., 1, 1] * flow.vy)
        xs, ys = inverse.project_xy(xs, ys)
    dx, dy = xs - center[0], ys - center[1]
    r = np.hypot(dx, dy)
    annulus = (r >= r_in_frac * radius_px) & (r <= r_out_frac * radius_px)
    support = annulus & flow.valid & np.isfinite(vx) & np.isfinite(vy)
    n_support = int(np.count_nonzero(support))
    if n_support < min_support:
        raise InsufficientSupportError(f"insufficient support: {n_support} valid flow pixels in annulus")

    rs = r[support]
    tangential = (vx[support] * -dy[support] + vy[support] * dx[support]) / rs
    omega_hat = float(np.median(tangential / rs))
    if omega_gt is None:
        return AngularSpeedEstimate(omega_hat, None, None, n_support)
    abs_error = abs(omega_hat - omega_gt)
    rel_error = abs_error / abs(omega_gt) if omega_gt != 0 else None
    return AngularSpeedEstimate(omega_hat, rel_error, abs_error, n_support)
