"""
Event Camera Model
==================

Per-pixel log-intensity integrator that emits polarity events on contrast-threshold
crossings, plus the readout non-idealities applied to a finished stream: event-rate
saturation, ROI reduction and background activity.

Pipeline per pixel: L = ln(I + ε) → first-order low-pass at ``cutoff_hz(lux)`` →
threshold crossings against the last reference level, timestamped by linear interpolation
inside the simulation step → refractory gate.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .error_handler import ConfigurationError

logger = logging.getLogger(__name__)

MIN_THRESHOLD = 0.01
NEVER = np.iinfo(np.int64).min // 2


@dataclass
class Roi:
    """Sensor sub-rectangle: origin (x, y) and size in pixels."""
    x: int
    y: int
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError("ROI width and height must be positive", "evs.roi")

    def validate_within(self, width: int, height: int):
        if self.x < 0 or self.y < 0 or self.x + self.width > width or self.y + self.height > height:
            raise ConfigurationError(
                f"ROI ({self.x}, {self.y}, {self.width}x{self.height}) lies outside the "
                f"{width}x{height} sensor", "evs.roi")


@dataclass
class EvsConfig:
    """
    Event sensor parameters. ``math.inf`` disables a limit (cutoff or rate cap).

    Pixel bandwidth is interpolated geometrically in illuminance between
    (``lux_low``, ``cutoff_hz_low``) and (``lux_high``, ``cutoff_hz_high``) and held
    constant outside that range.
    """
    contrast_threshold: float = 0.2
    threshold_sigma: float = 0.03
    refractory_us: float = 0.0
    cutoff_hz_low: float = 300.0
    cutoff_hz_high: float = 3000.0
    lux_low: float = 100.0
    lux_high: float = 2000.0
    rate_cap: float = math.inf
    saturation_window_us: int = 1000
    drop_policy: str = "uniform"
    roi: Optional[Roi] = None
    ba_rate_hz: float = 0.0
    epsilon: float = 1e-6
    min_dt_s: float = 1e-7
    max_steps: int = 5_000_000
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.roi, dict):
            self.roi = Roi(**self.roi)
        if self.contrast_threshold <= 0:
            raise ConfigurationError("contrast_threshold must be > 0", "evs.contrast_threshold")
        if self.threshold_sigma < 0:
            raise ConfigurationError("threshold_sigma must be >= 0", "evs.threshold_sigma")
        if self.refractory_us < 0:
            raise ConfigurationError("refractory_us must be >= 0", "evs.refractory_us")
        if self.cutoff_hz_low <= 0 or self.cutoff_hz_high <= 0:
            raise ConfigurationError("cutoff frequencies must be > 0", "evs.cutoff_hz_low")
        if self.cutoff_hz_high < self.cutoff_hz_low or self.lux_high <= self.lux_low:
            raise ConfigurationError("cutoff_hz must be non-decreasing in lux", "evs.cutoff_hz_high")
        if self.rate_cap <= 0:
            raise ConfigurationError("rate_cap must be > 0", "evs.rate_cap")
        if self.saturation_window_us <= 0:
            raise ConfigurationError("saturation_window_us must be > 0", "evs.saturation_window_us")
        if self.drop_policy not in ("uniform", "tail"):
            raise ConfigurationError("drop_policy must be 'uniform' or 'tail'", "evs.drop_policy")
        if self.ba_rate_hz < 0:
            raise ConfigurationError("ba_rate_hz must be >= 0", "evs.ba_rate_hz")

    def cutoff_hz(self, lux: float) -> float:
        if math.isinf(self.cutoff_hz_low) or math.isinf(self.cutoff_hz_high):
            return math.inf
        if lux <= self.lux_low:
            return self.cutoff_hz_low
        if lux >= self.lux_high:
            return self.cutoff_hz_high
        frac = (math.log(lux) - math.log(self.lux_low)) / (math.log(self.lux_high) - math.log(self.lux_low))
        return math.exp(math.log(self.cutoff_hz_low)
                        + frac * (math.log(self.cutoff_hz_high) - math.log(self.cutoff_hz_low)))

    @classmethod
    def ideal(cls, **overrides) -> "EvsConfig":
        """No mismatch, refractory, bandwidth limit or readout cap."""
        base = dict(threshold_sigma=0.0, refractory_us=0.0,
                    cutoff_hz_low=math.inf, cutoff_hz_high=math.inf, rate_cap=math.inf)
        base.update(overrides)
        return cls(**base)


@dataclass
class EventStream:
    """
    Time-ordered events. ``t`` in integer microseconds, ``p`` in {+1, −1}.

    ``t_start_us`` / ``t_end_us`` bound the recording interval, which may extend beyond the
    first and last event.
    """
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    width: int
    height: int
    t_start_us: int = 0
    t_end_us: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64).ravel()
        self.x = np.asarray(self.x, dtype=np.int32).ravel()
        self.y = np.asarray(self.y, dtype=np.int32).ravel()
        self.p = np.asarray(self.p, dtype=np.int8).ravel()
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event arrays must share one length")
        if n:
            if self.x.min() < 0 or self.y.min() < 0 or self.x.max() >= self.width or self.y.max() >= self.height:
                raise ValueError("event coordinates outside the sensor")
            if not np.all(np.abs(self.p) == 1):
                raise ValueError("polarity must be +1 or -1")
        if self.t_end_us is None:
            self.t_end_us = int(self.t.max()) + 1 if n else int(self.t_start_us)

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def empty(cls, width: int, height: int, t_start_us: int = 0, t_end_us: Optional[int] = None,
              metadata: Optional[Dict[str, Any]] = None) -> "EventStream":
        z = np.zeros(0)
        return cls(z, z, z, z, width, height, t_start_us, t_end_us, dict(metadata or {}))

    @property
    def duration_us(self) -> int:
        return int(self.t_end_us - self.t_start_us)

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.t) >= 0))

    def select(self, index) -> "EventStream":
        """Subset by boolean mask or index array, keeping sensor size, span and metadata."""
        return EventStream(self.t[index], self.x[index], self.y[index], self.p[index],
                           self.width, self.height, self.t_start_us, self.t_end_us, dict(self.metadata))

    def time_window(self, t0_us: float, t1_us: float) -> "EventStream":
        """Events with t in [t0_us, t1_us); the span becomes the window."""
        lo = np.searchsorted(self.t, t0_us, side="left")
        hi = np.searchsorted(self.t, t1_us, side="left")
        return EventStream(self.t[lo:hi], self.x[lo:hi], self.y[lo:hi], self.p[lo:hi],
                           self.width, self.height, int(math.ceil(t0_us)), int(math.ceil(t1_us)),
                           dict(self.metadata))

    def event_rate(self) -> float:
        """Mean events per second over the recording span."""
        return len(self) / (self.duration_us * 1e-6) if self.duration_us > 0 else 0.0


def sort_events(t, x, y, p) -> np.ndarray:
    """Canonical order: time, then row, column, polarity."""
    return np.lexsort((p, x, y, t))


class PixelArrayEmulator:
    """
    Stateful per-pixel event generator fed with log-intensity frames.

    State per pixel: reference level of the last crossing, low-pass filtered log intensity,
    time of the last emitted event and the realised contrast threshold.
    """

    def __init__(self, thresholds: np.ndarray, config: EvsConfig, cutoff_hz: float,
                 row_offset: int = 0):
        self.config = config
        self.cutoff_hz = cutoff_hz
        self.threshold_draw = np.asarray(thresholds, dtype=np.float64)
        self.row_offset = row_offset
        self.shape = self.threshold_draw.shape
        self.last_log_level: Optional[np.ndarray] = None
        self.filtered_log: Optional[np.ndarray] = None
        self.last_event_t = np.full(self.shape, NEVER, dtype=np.int64)
        self._t_prev_us: Optional[float] = None

    @staticmethod
    def draw_thresholds(shape: Tuple[int, int], config: EvsConfig, rng: np.random.Generator) -> np.ndarray:
        draws = config.contrast_threshold + config.threshold_sigma * rng.standard_normal(shape)
        return np.maximum(draws, MIN_THRESHOLD)

    def reset(self, log_frame: np.ndarray, t_s: float):
        self.last_log_level = np.array(log_frame, dtype=np.float64)
        self.filtered_log = self.last_log_level.copy()
        self.last_event_t.fill(NEVER)
        self._t_prev_us = t_s * 1e6

    def step(self, log_frame: np.ndarray, t_s: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Advance to ``t_s`` and return the (t_us, x, y, p) events emitted in the step."""
        if self.filtered_log is None:
            self.reset(log_frame, t_s)
            return _no_events()

        t_us = t_s * 1e6
        dt_us = t_us - self._t_prev_us
        if dt_us <= 0:
            raise ValueError("emulator time must increase")

        previous = self.filtered_log
        if math.isinf(self.cutoff_hz):
            current = np.array(log_frame, dtype=np.float64)
        else:
            alpha = 1.0 - math.exp(-2.0 * math.pi * self.cutoff_hz * dt_us * 1e-6)
            current = previous + alpha * (log_frame - previous)

        delta = current - self.last_log_level
        thr = self.threshold_draw
        crossings = np.floor(np.abs(delta) / thr).astype(np.int64)
        sign = np.sign(delta)

        flat = np.flatnonzero(crossings)
        out_t: List[np.ndarray] = []
        out_i: List[np.ndarray] = []
        out_p: List[np.ndarray] = []
        if flat.size:
            ref_f = self.last_log_level.ravel()
            prev_f, cur_f = previous.ravel(), current.ravel()
            thr_f, sign_f, n_f = thr.ravel(), sign.ravel(), crossings.ravel()
            last_f = self.last_event_t.reshape(-1)
            refractory = self.config.refractory_us
            for k in range(1, int(n_f[flat].max()) + 1):
                sel = flat[n_f[flat] >= k]
                level = ref_f[sel] + k * thr_f[sel] * sign_f[sel]
                frac = np.clip((level - prev_f[sel]) / (cur_f[sel] - prev_f[sel]), 0.0, 1.0)
                t_ev = np.rint(self._t_prev_us + frac * dt_us).astype(np.int64)
                allowed = (t_ev - last_f[sel]) >= refractory
                emitted = sel[allowed]
                last_f[emitted] = t_ev[allowed]
                out_t.append(t_ev[allowed])
                out_i.append(emitted)
                out_p.append(sign_f[emitted].astype(np.int8))
            self.last_log_level = self.last_log_level + crossings * thr * sign

        self.filtered_log = current
        self._t_prev_us = t_us

        if not out_t:
            return _no_events()
        idx = np.concatenate(out_i)
        rows, cols = np.divmod(idx, self.shape[1])
        return np.concatenate(out_t), cols, rows + self.row_offset, np.concatenate(out_p)


def _no_events():
    z = np.zeros(0, dtype=np.int64)
    return z, z, z, np.zeros(0, dtype=np.int8)


def required_time_step(scene, config: EvsConfig) -> Optional[float]:
    """
    Step (s) keeping the per-pixel log change below C/4, or ``None`` for a still scene.
    """
    if scene.omega == 0:
        return None
    max_gradient = scene.max_log_gradient(config.epsilon)
    max_speed = scene.omega * scene.radius_px
    if max_gradient <= 0:
        return None
    return (config.contrast_threshold / 4.0) / (max_gradient * max_speed)


def simulate_events(scene, config: EvsConfig, t0: float, t1: float, workers: int = 1) -> "EventStream":
    """
    Simulate the event stream of ``scene`` over [t0, t1) seconds.

    Raises:
        ConfigurationError: the step size needed for the configured contrast threshold is
            below ``min_dt_s`` or needs more than ``max_steps`` steps.
    """
    if t1 <= t0:
        raise ConfigurationError("simulation interval must satisfy t1 > t0")
    cutoff = config.cutoff_hz(scene.illuminance)
    dt = required_time_step(scene, config)
    if dt is None:
        steps = 1
    else:
        steps = int(math.ceil((t1 - t0) / dt))
        if dt < config.min_dt_s or steps > config.max_steps:
            raise ConfigurationError(
                f"required simulation step dt={dt:.3e}s ({steps} steps) exceeds limits "
                f"(min_dt_s={config.min_dt_s:g}, max_steps={config.max_steps}); lower the "
                f"resolution, rpm or duration", "evs")
    times = np.linspace(t0, t1, steps + 1)
    logger.debug(f"EVS simulation: {steps} steps, dt={(t1 - t0) / steps:.3e}s, cutoff={cutoff:g}Hz")

    rng = np.random.default_rng(config.seed)
    thresholds = PixelArrayEmulator.draw_thresholds((scene.height, scene.width), config, rng)

    def run_band(band: slice):
        emulator = PixelArrayEmulator(thresholds[band], config, cutoff, row_offset=band.start)
        chunks = []
        for t in times:
            log_frame = np.log(scene.render(t, rows=band) + config.epsilon)
            chunks.append(emulator.step(log_frame, t))
        return [np.concatenate(parts) for parts in zip(*chunks)]

    results = map_row_bands(run_band, scene.height, workers)
    t_all, x_all, y_all, p_all = (np.concatenate(parts) for parts in zip(*results))
    t_start_us = int(round(t0 * 1e6))
    t_end_us = int(round(t1 * 1e6))
    meta = {"sensor": "evs", "contrast_threshold": config.contrast_threshold,
            "threshold_sigma": config.threshold_sigma, "cutoff_hz": cutoff,
            "refractory_us": config.refractory_us, "seed": config.seed}

    if config.ba_rate_hz > 0:
        noise = background_activity(scene.width, scene.height, t_start_us, t_end_us,
                                    config.ba_rate_hz, np.random.default_rng([config.seed, 1]))
        t_all = np.concatenate([t_all, noise[0]])
        x_all = np.concatenate([x_all, noise[1]])
        y_all = np.concatenate([y_all, noise[2]])
        p_all = np.concatenate([p_all, noise[3]])

    order = sort_events(t_all, x_all, y_all, p_all)
    stream = EventStream(t_all[order], x_all[order], y_all[order], p_all[order],
                         scene.width, scene.height, t_start_us, t_end_us, meta)
    logger.debug(f"EVS simulation produced {len(stream)} events ({stream.event_rate() / 1e6:.3f} Mev/s)")
    return stream


def map_row_bands(run_band: Callable[[slice], Any], height: int, workers: int) -> List[Any]:
    """Apply ``run_band`` to contiguous row bands, one thread per band; results in row order."""
    edges = np.linspace(0, height, min(max(1, workers), height) + 1).astype(int)
    bands = [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if len(bands) == 1:
        return [run_band(bands[0])]
    with ThreadPoolExecutor(max_workers=len(bands)) as pool:
        return list(pool.map(run_band, bands))


def background_activity(width: int, height: int, t_start_us: int, t_end_us: int,
                        rate_hz: float, rng: np.random.Generator):
    """Spatially and temporally uniform noise events at ``rate_hz`` per pixel."""
    duration = (t_end_us - t_start_us) * 1e-6
    n = int(rng.poisson(rate_hz * width * height * duration))
    t = rng.integers(t_start_us, max(t_start_us + 1, t_end_us), size=n, dtype=np.int64)
    x = rng.integers(0, width, size=n)
    y = rng.integers(0, height, size=n)
    p = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    return t, x, y, p


def apply_rate_saturation(stream: EventStream, rate_cap: float, window_us: int = 1000,
                          policy: str = "uniform", seed: int = 0) -> EventStream:
    """
    Keep at most ``floor(rate_cap · window)`` events in every tumbling window aligned to t = 0.

    ``uniform`` drops a seeded random subset across the window; ``tail`` keeps the earliest
    events and drops the rest.
    """
    if math.isinf(rate_cap) or len(stream) == 0:
        return stream
    budget = int(math.floor(rate_cap * window_us * 1e-6))
    windows = stream.t // window_us
    starts = np.flatnonzero(np.r_[True, windows[1:] != windows[:-1]])
    ends = np.r_[starts[1:], len(stream)]

    rng = np.random.default_rng(seed)
    keep = np.ones(len(stream), dtype=bool)
    for a, b in zip(starts, ends):
        count = b - a
        if count <= budget:
            continue
        keep[a:b] = False
        if budget <= 0:
            continue
        if policy == "tail":
            keep[a:a + budget] = True
        else:
            keep[a + rng.choice(count, size=budget, replace=False)] = True

    dropped = int(len(stream) - keep.sum())
    if dropped:
        logger.warning(f"Readout saturation dropped {dropped} of {len(stream)} events "
                       f"(cap {rate_cap:g} ev/s, window {window_us} us)")
    out = stream.select(keep)
    out.metadata["saturation_dropped"] = out.metadata.get("saturation_dropped", 0) + dropped
    return out


def apply_roi(stream: EventStream, roi: Roi) -> EventStream:
    """Keep events inside ``roi`` and shift coordinates to its origin."""
    roi.validate_within(stream.width, stream.height)
    inside = ((stream.x >= roi.x) & (stream.x < roi.x + roi.width)
              & (stream.y >= roi.y) & (stream.y < roi.y + roi.height))
    meta = dict(stream.metadata)
    meta["roi"] = [roi.x, roi.y, roi.width, roi.height]
    return EventStream(stream.t[inside], stream.x[inside] - roi.x, stream.y[inside] - roi.y,
                       stream.p[inside], roi.width, roi.height, stream.t_start_us, stream.t_end_us, meta)


def simulate_sensor(scene, config: EvsConfig, t0: float, t1: float, workers: int = 1) -> EventStream:
    """Full EVS readout: simulation, optional ROI, then the rate cap on the (reduced) stream."""
    stream = simulate_events(scene, config, t0, t1, workers=workers)
    if config.roi is not None:
        stream = apply_roi(stream, config.roi)
    return apply_rate_saturation(stream, config.rate_cap, config.saturation_window_us,
                                 config.drop_policy, seed=config.seed)
