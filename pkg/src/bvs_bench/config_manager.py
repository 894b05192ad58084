"""
Run Configuration Management
============================

Typed run configuration for simulation sweeps: dataclass sections validated on
construction, strict YAML/JSON loading with dotted key paths in every error, sensor
presets, environment-variable overrides and a stable configuration hash.

Sources are applied in priority order: defaults < preset < config file < environment
(``BVS_BENCH__SECTION__KEY``) < command line.
"""

import copy
import dataclasses
import hashlib
import json
import logging
import math
import os
import re
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union, get_args, get_origin, get_type_hints

import yaml

from .aop_model import AopConfig
from .config import ENV_PREFIX, ENV_SEPARATOR
from .error_handler import ConfigurationError
from .evs_model import EvsConfig, Roi
from .geometry import Homography
from .scene import PatternKind, PatternSpec

logger = logging.getLogger(__name__)

HOMOGRAPHY_PRESETS = ("identity", "oblique")
OMEGA_SOURCES = ("ground_truth", "cmax")
EVENT_FORMATS = ("csv", "bin")
VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
SENSOR_ID_PATTERN = re.compile(r"^[A-Za-z0-9_.-]+$")

# Sections excluded from the configuration hash: they change where and how loudly a run
# reports, not what it computes
NON_SEMANTIC_SECTIONS = ("output", "logging", "jobs")


class ConfigSource(Enum):
    """Configuration sources in priority order"""
    COMMAND_LINE = "cli"
    ENVIRONMENT_VARIABLE = "env_var"
    CONFIG_FILE = "config_file"
    PRESET = "preset"
    DEFAULT = "default"


@dataclass(frozen=True)
class ConfigValue:
    """A value set explicitly, and where it came from"""
    value: Any
    source: ConfigSource
    description: str = ""


# Sensor presets. Values are per-field overrides of EvsConfig / AopConfig; a sensor entry
# naming a preset may override any of them.
SENSOR_PRESETS: Dict[str, Dict[str, Any]] = {
    "ideal_evs": {
        "kind": "evs",
        "evs": {"threshold_sigma": 0.0, "refractory_us": 0.0, "cutoff_hz_low": math.inf,
                "cutoff_hz_high": math.inf, "rate_cap": math.inf},
    },
    "dvxplorer": {
        "kind": "evs",
        "evs": {"contrast_threshold": 0.2, "threshold_sigma": 0.03, "refractory_us": 1.0,
                "cutoff_hz_low": 300.0, "cutoff_hz_high": 3000.0, "rate_cap": 1.0e7},
    },
    "dvxplorer_roi": {
        "kind": "evs",
        "roi_fraction": 0.5,
        "evs": {"contrast_threshold": 0.2, "threshold_sigma": 0.03, "refractory_us": 1.0,
                "cutoff_hz_low": 300.0, "cutoff_hz_high": 3000.0, "rate_cap": 1.0e7},
    },
    "davis346": {
        "kind": "evs",
        "evs": {"contrast_threshold": 0.25, "threshold_sigma": 0.04, "refractory_us": 5.0,
                "cutoff_hz_low": 100.0, "cutoff_hz_high": 1000.0, "rate_cap": 1.2e7},
    },
    "ideal_aop": {
        "kind": "aop",
        "aop": {"fps": 1515.0, "quant_bits": 10, "cop_fps": 30.0, "cop_exposure_s": 4e-4},
    },
    "tianmouc_low": {
        "kind": "aop",
        "aop": {"fps": 757.0, "quant_bits": 7, "cop_fps": 30.0, "cop_exposure_s": 1e-3},
    },
    "tianmouc_high": {
        "kind": "aop",
        "aop": {"fps": 1515.0, "quant_bits": 7, "cop_fps": 30.0, "cop_exposure_s": 4e-4},
    },
}


@dataclass
class SceneConfig:
    """Pattern, geometry and illumination of the turntable scene"""
    pattern: str = "checker_grid"
    feature_scale: Optional[float] = None
    contrast_levels: List[float] = field(default_factory=lambda: [0.1, 0.9])
    background: float = 0.5
    grid_size: Optional[int] = None
    pattern_seed: int = 7
    resolution: List[int] = field(default_factory=lambda: [256, 256])
    radius_px: Optional[float] = None
    blur_px: float = 0.0
    texel_px: float = 0.5
    homography: str = "identity"
    tilt_deg: float = 20.0
    lux: List[float] = field(default_factory=lambda: [2000.0])

    def __post_init__(self):
        # Constructing the spec validates kind, levels and scale
        self.pattern_spec()
        if len(self.resolution) != 2 or min(self.resolution) < 8:
            raise ConfigurationError("resolution must be [W, H] with both >= 8", "scene.resolution")
        if self.homography not in HOMOGRAPHY_PRESETS:
            raise ConfigurationError(f"homography must be one of {list(HOMOGRAPHY_PRESETS)}", "scene.homography")
        if not self.lux:
            raise ConfigurationError("lux list must not be empty", "scene.lux")
        if any(v <= 0 for v in self.lux):
            raise ConfigurationError("lux values must be > 0", "scene.lux")
        if len(set(self.lux)) != len(self.lux):
            raise ConfigurationError("lux values must be unique", "scene.lux")
        if self.blur_px < 0 or self.texel_px <= 0:
            raise ConfigurationError("blur_px must be >= 0 and texel_px > 0", "scene.blur_px")

    @property
    def width(self) -> int:
        return int(self.resolution[0])

    @property
    def height(self) -> int:
        return int(self.resolution[1])

    def pattern_spec(self) -> PatternSpec:
        return PatternSpec(kind=self.pattern, feature_scale=self.feature_scale,
                           contrast_levels=list(self.contrast_levels), background=self.background,
                           grid_size=self.grid_size, seed=self.pattern_seed)

    def build_homography(self) -> Homography:
        return Homography.from_preset(self.homography, self.width, self.height, self.tilt_deg)


@dataclass
class SensorConfig:
    """One simulated sensor: an event camera (``evs``) or a primitive-pathway sensor (``aop``)"""
    id: str
    kind: str = "evs"
    preset: Optional[str] = None
    roi_fraction: Optional[float] = None
    evs: Optional[EvsConfig] = None
    aop: Optional[AopConfig] = None

    def __post_init__(self):
        if not SENSOR_ID_PATTERN.match(self.id or ""):
            raise ConfigurationError(f"sensor id '{self.id}' must match {SENSOR_ID_PATTERN.pattern}", "id")
        if self.kind not in ("evs", "aop"):
            raise ConfigurationError("kind must be 'evs' or 'aop'", "kind")
        if self.preset is not None and self.preset not in SENSOR_PRESETS:
            raise ConfigurationError(f"unknown preset '{self.preset}', expected one of {sorted(SENSOR_PRESETS)}",
                                     "preset")
        if self.kind == "evs":
            if self.aop is not None:
                raise ConfigurationError("an evs sensor cannot carry an aop block", "aop")
            self.evs = self.evs or EvsConfig()
        else:
            if self.evs is not None:
                raise ConfigurationError("an aop sensor cannot carry an evs block", "evs")
            if self.roi_fraction is not None:
                raise ConfigurationError("roi_fraction applies to evs sensors only", "roi_fraction")
            self.aop = self.aop or AopConfig()
        if self.roi_fraction is not None and not 0 < self.roi_fraction <= 1:
            raise ConfigurationError("roi_fraction must be in (0, 1]", "roi_fraction")

    def resolve_roi(self, width: int, height: int) -> Optional[Roi]:
        """Explicit ROI, or a centered ROI covering ``roi_fraction`` of each side."""
        if self.kind != "evs":
            return None
        if self.evs.roi is not None:
            self.evs.roi.validate_within(width, height)
            return self.evs.roi
        if self.roi_fraction is None:
            return None
        w = max(1, int(round(width * self.roi_fraction)))
        h = max(1, int(round(height * self.roi_fraction)))
        return Roi((width - w) // 2, (height - h) // 2, w, h)


@dataclass
class SweepConfig:
    """
    Speed grid and trial timing.

    A trial spans ``duration_revolutions``; the first ``warmup_revolutions`` are discarded.
    Analysis covers ``eval_deg`` of rotation after the warm-up; event simulation starts
    ``fill_deg`` earlier so pixel and corner-detector state is populated.
    """
    rpm: List[float] = field(default_factory=lambda: [50.0, 100.0, 200.0, 300.0, 400.0, 500.0])
    duration_revolutions: float = 2.0
    warmup_revolutions: float = 1.0
    eval_deg: float = 30.0
    fill_deg: float = 15.0
    aop_frames: int = 16

    def __post_init__(self):
        if not self.rpm:
            raise ConfigurationError("rpm list must not be empty", "sweep.rpm")
        if any(r <= 0 for r in self.rpm):
            raise ConfigurationError("rpm values must be > 0", "sweep.rpm")
        if any(b <= a for a, b in zip(self.rpm[:-1], self.rpm[1:])):
            raise ConfigurationError("rpm must be ascending", "sweep.rpm")
        if self.duration_revolutions < 1:
            raise ConfigurationError("duration_revolutions must be >= 1", "sweep.duration_revolutions")
        if not 0 <= self.warmup_revolutions < self.duration_revolutions:
            raise ConfigurationError("warmup_revolutions must be in [0, duration_revolutions)",
                                     "sweep.warmup_revolutions")
        if not 0 < self.eval_deg <= 360.0 * (self.duration_revolutions - self.warmup_revolutions):
            raise ConfigurationError("eval_deg must fit after the warm-up", "sweep.eval_deg")
        if not 0 <= self.fill_deg <= 360.0 * self.warmup_revolutions:
            raise ConfigurationError("fill_deg must fit inside the warm-up", "sweep.fill_deg")
        if self.aop_frames < 2:
            raise ConfigurationError("aop_frames must be at least 2", "sweep.aop_frames")

    def period_s(self, rpm: float) -> float:
        return 60.0 / rpm

    def eval_interval(self, rpm: float) -> Tuple[float, float]:
        """Start and end (s) of the analysed span at ``rpm``."""
        start = self.warmup_revolutions * self.period_s(rpm)
        return start, start + self.eval_deg / (6.0 * rpm)

    def simulation_start(self, rpm: float) -> float:
        return self.eval_interval(rpm)[0] - self.fill_deg / (6.0 * rpm)


@dataclass
class TasksConfig:
    """Which analyses run per cell, and their parameters"""
    thickness: bool = True
    structural: bool = True
    corners: bool = True
    flow: bool = True
    cmax: bool = True
    recon: bool = True
    omega_source: str = "ground_truth"
    calib_window_deg: float = 15.0
    corner_window_deg: float = 1.5
    corner_windows: int = 4
    corner_samples: int = 4
    corner_quality: float = 0.5
    match_radius: float = 3.0
    dedup_radius: float = 3.0
    arc_r3_bounds: List[int] = field(default_factory=lambda: [3, 6])
    arc_r4_bounds: List[int] = field(default_factory=lambda: [4, 8])
    flow_windows_deg: List[float] = field(default_factory=lambda: [1.5, 15.0])
    flow_window_px: int = 5
    flow_min_rotation_deg: Optional[float] = None
    annulus: List[float] = field(default_factory=lambda: [0.40, 0.50])
    cmax_range: List[float] = field(default_factory=lambda: [0.5, 1.5])
    cmax_coarse_steps: int = 31
    thickness_radius_frac: float = 0.9
    thickness_floor_frac: float = 0.05
    recon_coupling: float = 1e-3

    def __post_init__(self):
        if self.omega_source not in OMEGA_SOURCES:
            raise ConfigurationError(f"omega_source must be one of {list(OMEGA_SOURCES)}", "tasks.omega_source")
        for name in ("calib_window_deg", "corner_window_deg", "match_radius", "dedup_radius", "recon_coupling"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0", f"tasks.{name}")
        if self.corner_windows < 1 or self.corner_samples < 1:
            raise ConfigurationError("corner_windows and corner_samples must be >= 1", "tasks.corner_windows")
        if not 0 < self.corner_quality <= 1:
            raise ConfigurationError("corner_quality must be in (0, 1]", "tasks.corner_quality")
        for name in ("arc_r3_bounds", "arc_r4_bounds"):
            bounds = getattr(self, name)
            if len(bounds) != 2 or not 0 < bounds[0] <= bounds[1]:
                raise ConfigurationError("arc bounds must be [lo, hi] with 0 < lo <= hi", f"tasks.{name}")
        if not self.flow_windows_deg or any(w <= 0 for w in self.flow_windows_deg):
            raise ConfigurationError("flow_windows_deg must hold positive angles", "tasks.flow_windows_deg")
        if self.flow_window_px < 3 or self.flow_window_px % 2 == 0:
            raise ConfigurationError("flow_window_px must be an odd size >= 3", "tasks.flow_window_px")
        if len(self.annulus) != 2 or not 0 <= self.annulus[0] < self.annulus[1] <= 1:
            raise ConfigurationError("annulus must be [r_in, r_out] fractions with r_in < r_out", "tasks.annulus")
        if len(self.cmax_range) != 2 or not 0 <= self.cmax_range[0] < self.cmax_range[1]:
            raise ConfigurationError("cmax_range must be [lo, hi] factors with lo < hi", "tasks.cmax_range")
        if self.cmax_coarse_steps < 3:
            raise ConfigurationError("cmax_coarse_steps must be >= 3", "tasks.cmax_coarse_steps")
        if not 0 < self.thickness_radius_frac <= 1 or not 0 < self.thickness_floor_frac < 1:
            raise ConfigurationError("thickness fractions must be in (0, 1]", "tasks.thickness_radius_frac")


@dataclass
class OutputConfig:
    """Output directory layout and formats"""
    directory: str = "output/run"
    save_data: bool = True
    save_images: bool = False
    event_format: str = "csv"
    plots: bool = True
    log_scale_x: bool = False

    def __post_init__(self):
        if self.event_format not in EVENT_FORMATS:
            raise ConfigurationError(f"event_format must be one of {list(EVENT_FORMATS)}", "output.event_format")
        if not self.directory:
            raise ConfigurationError("directory must not be empty", "output.directory")


@dataclass
class LoggingConfig:
    """Logging configuration"""
    log_level: str = "INFO"
    enable_file_logging: bool = False
    enable_console_logging: bool = True
    log_file_path: str = "output/logs/bvs_bench.log"

    def __post_init__(self):
        self.log_level = self.log_level.upper()
        if self.log_level not in VALID_LOG_LEVELS:
            raise ConfigurationError(f"log level must be one of {VALID_LOG_LEVELS}", "logging.log_level")


@dataclass
class RunConfig:
    """Main run configuration container"""
    scene: SceneConfig = field(default_factory=SceneConfig)
    sensors: List[SensorConfig] = field(default_factory=lambda: [SensorConfig("ideal_evs", preset="ideal_evs",
                                                                              evs=EvsConfig.ideal())])
    sweep: SweepConfig = field(default_factory=SweepConfig)
    tasks: TasksConfig = field(default_factory=TasksConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    seed: int = 0
    jobs: Optional[int] = None

    def __post_init__(self):
        if not self.sensors:
            raise ConfigurationError("at least one sensor is required", "sensors")
        ids = [s.id for s in self.sensors]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ConfigurationError(f"sensor ids must be unique, duplicated: {duplicates}", "sensors")
        for index, sensor in enumerate(self.sensors):
            try:
                sensor.resolve_roi(self.scene.width, self.scene.height)
            except ConfigurationError as e:
                raise ConfigurationError(e.detail, f"sensors[{index}].evs.roi")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0", "seed")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1", "jobs")

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    def resolved_jobs(self) -> int:
        return self.jobs or os.cpu_count() or 1


# ----------------------------------------------------------------------
# Dict <-> dataclass conversion
# ----------------------------------------------------------------------

def _plain(value: Any) -> Any:
    """Tuples become lists so YAML/JSON writers accept the tree."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _type_name(annotation: Any) -> str:
    return getattr(annotation, "__name__", str(annotation).replace("typing.", ""))


def _coerce(value: Any, annotation: Any, path: str, lenient: bool) -> Any:
    """Check ``value`` against a type annotation, converting containers and nested sections."""
    origin, args = get_origin(annotation), get_args(annotation)
    if annotation is Any:
        return value
    if origin is Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], path, lenient)
    if dataclasses.is_dataclass(annotation):
        if isinstance(value, annotation):
            return value
        if not isinstance(value, dict):
            raise ConfigurationError(f"expected a mapping for {annotation.__name__}, got {type(value).__name__}", path)
        return build_section(annotation, value, path, lenient)
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"expected a list, got {type(value).__name__}", path)
        item = args[0] if args else Any
        return [_coerce(v, item, f"{path}[{i}]", lenient) for i, v in enumerate(value)]
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"expected a list, got {type(value).__name__}", path)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], f"{path}[{i}]", lenient) for i, v in enumerate(value))
        if args and len(args) != len(value):
            raise ConfigurationError(f"expected {len(args)} items, got {len(value)}", path)
        return tuple(_coerce(v, a, f"{path}[{i}]", lenient) for i, (v, a) in enumerate(zip(value, args)))
    if origin in (dict, Dict):
        if not isinstance(value, dict):
            raise ConfigurationError(f"expected a mapping, got {type(value).__name__}", path)
        return dict(value)
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"expected bool, got {type(value).__name__}", path)
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"expected int, got {type(value).__name__}", path)
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"expected float, got {type(value).__name__}", path)
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"expected str, got {type(value).__name__}", path)
        return value
    if isinstance(annotation, type) and issubclass(annotation, Enum):
        try:
            return annotation(value)
        except ValueError:
            raise ConfigurationError(f"expected one of {[m.value for m in annotation]}, got {value!r}", path)
    return value


def build_section(cls, data: Dict[str, Any], path: str = "", lenient: bool = False):
    """
    Build dataclass ``cls`` from a mapping.

    Unknown keys raise ``ConfigurationError`` with their dotted path, or are logged and
    dropped when ``lenient``. Validation errors raised by the section are re-keyed to the
    full path.
    """
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, value in data.items():
        key_path = f"{path}.{key}" if path else str(key)
        if key not in names:
            if lenient:
                logger.warning(f"Ignoring unknown configuration key '{key_path}'")
                continue
            raise ConfigurationError("unknown configuration key", key_path)
        kwargs[key] = _coerce(value, hints[key], key_path, lenient)
    try:
        return cls(**kwargs)
    except ConfigurationError as e:
        if e.key_path and path and not e.key_path.startswith(path):
            leaf = e.key_path.split(".")[-1]
            raise ConfigurationError(e.detail, f"{path}.{leaf}" if leaf in names else path) from e
        raise
    except TypeError as e:
        raise ConfigurationError(str(e), path or cls.__name__) from e


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _expand_presets(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Merge every sensor entry over its named preset."""
    raw = copy.deepcopy(raw)
    sensors = raw.get("sensors")
    if not isinstance(sensors, list):
        return raw
    expanded = []
    for index, entry in enumerate(sensors):
        if isinstance(entry, dict) and entry.get("preset") is not None:
            preset = entry["preset"]
            if preset not in SENSOR_PRESETS:
                raise ConfigurationError(f"unknown preset '{preset}', expected one of {sorted(SENSOR_PRESETS)}",
                                         f"sensors[{index}].preset")
            entry = _deep_merge(SENSOR_PRESETS[preset], entry)
        expanded.append(entry)
    raw["sensors"] = expanded
    return raw


def config_from_dict(raw: Dict[str, Any], lenient: bool = False) -> RunConfig:
    """Fully defaulted RunConfig from a (possibly partial) mapping."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"configuration root must be a mapping, got {type(raw).__name__}")
    return build_section(RunConfig, _expand_presets(raw), "", lenient)


def save_config(config: RunConfig, filepath: Union[str, Path]) -> Path:
    """Write the resolved configuration as YAML (sorted keys) or JSON."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    data = config.to_dict()
    with open(filepath, "w") as f:
        if filepath.suffix == ".json":
            json.dump(data, f, indent=2, sort_keys=True)
        else:
            yaml.safe_dump(data, f, default_flow_style=False, sort_keys=True)
    return filepath


def config_hash(config: RunConfig) -> str:
    """First 16 hex digits of SHA-256 over the canonical JSON of the semantic fields."""
    data = config.to_dict()
    for key in NON_SEMANTIC_SECTIONS:
        data.pop(key, None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class ConfigurationValidator:
    """Soft validation: configurations that are legal but likely to produce empty metrics"""

    def __init__(self):
        self.validation_rules = {
            "tasks.match_radius": [lambda x: x <= 10],
            "tasks.dedup_radius": [lambda x: x <= 10],
            "sweep.aop_frames": [lambda x: x <= 512],
            "tasks.cmax_coarse_steps": [lambda x: x <= 1001],
        }

    def validate_config(self, config: RunConfig) -> List[str]:
        """Validate configuration and return list of warnings"""
        warnings = []
        flat_config = self._flatten_dict(config.to_dict())

        for key, rules in self.validation_rules.items():
            if key in flat_config:
                value = flat_config[key]
                for rule in rules:
                    try:
                        if not rule(value):
                            warnings.append(f"Unusual value for {key}: {value}")
                    except Exception as e:
                        warnings.append(f"Validation error for {key}: {e}")

        warnings.extend(self._validate_cross_dependencies(config))
        return warnings

    def _flatten_dict(self, d: Dict, parent_key: str = '', sep: str = '.') -> Dict[str, Any]:
        """Flatten nested dictionary"""
        items = []
        for k, v in d.items():
            new_key = f"{parent_key}{sep}{k}" if parent_key else k
            if isinstance(v, dict):
                items.extend(self._flatten_dict(v, new_key, sep=sep).items())
            else:
                items.append((new_key, v))
        return dict(items)

    def _validate_cross_dependencies(self, config: RunConfig) -> List[str]:
        warnings = []
        tasks, sweep, scene = config.tasks, config.sweep, config.scene

        if tasks.thickness and scene.pattern != PatternKind.RADIAL_LINE.value:
            warnings.append("thickness is meaningful on radial_line patterns only")
        if tasks.calib_window_deg > sweep.eval_deg:
            warnings.append("calib_window_deg exceeds eval_deg; the calibration slice is truncated")
        if 2 * max(tasks.flow_windows_deg) > sweep.eval_deg:
            warnings.append("eval_deg holds fewer than two windows of the longest flow window")
        if tasks.corner_windows * tasks.corner_window_deg > sweep.eval_deg:
            warnings.append("corner windows extend past eval_deg and will be truncated")
        if any(s.kind == "evs" for s in config.sensors) and sweep.fill_deg < tasks.corner_window_deg:
            warnings.append("fill_deg is shorter than one corner window; the first windows see an empty SAE")
        return warnings


class ConfigurationManager:
    """
    Loads a RunConfig from file, environment and command-line overrides and records where
    every value came from.
    """

    def __init__(self, config_file: Optional[str] = None, lenient: bool = False):
        self.config_file = config_file
        self.lenient = lenient
        self.validator = ConfigurationValidator()
        self.config: Optional[RunConfig] = None
        self.config_values: Dict[str, ConfigValue] = {}
        self.logger = logging.getLogger(__name__)

    def load(self, overrides: Optional[Dict[str, Any]] = None, apply_env: bool = True) -> RunConfig:
        """
        Resolve the configuration.

        Args:
            overrides: dotted-key overrides from the command line (``{"seed": 3}``)
            apply_env: read ``BVS_BENCH__*`` environment variables
        """
        raw: Dict[str, Any] = {}
        if self.config_file:
            raw = self._load_config_file(self.config_file)
            self._track(raw, ConfigSource.CONFIG_FILE, f"Loaded from {self.config_file}")
        if apply_env:
            raw = self._apply_environment_overrides(raw)
        for key, value in (overrides or {}).items():
            _set_path(raw, key.split("."), value)
            self.config_values[key] = ConfigValue(value, ConfigSource.COMMAND_LINE,
                                                  "Command-line override")

        config = config_from_dict(raw, lenient=self.lenient)
        for warning in self.validator.validate_config(config):
            self.logger.warning(f"Configuration: {warning}")
        self.config = config
        self.logger.info(f"Configuration loaded: {len(config.sensors)} sensor(s), "
                         f"{len(config.sweep.rpm)} rpm, {len(config.scene.lux)} lux, hash {config_hash(config)}")
        return config

    def _load_config_file(self, path: str) -> Dict[str, Any]:
        path_obj = Path(path)
        if not path_obj.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")
        with open(path_obj, "r") as f:
            try:
                if path_obj.suffix in (".yaml", ".yml"):
                    data = yaml.safe_load(f)
                elif path_obj.suffix == ".json":
                    data = json.load(f)
                else:
                    raise ConfigurationError(f"Unsupported config file format: {path}")
            except (yaml.YAMLError, json.JSONDecodeError) as e:
                raise ConfigurationError(f"cannot parse {path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"configuration root must be a mapping, got {type(data).__name__}")
        return data

    def _apply_environment_overrides(self, raw: Dict[str, Any]) -> Dict[str, Any]:
        """``BVS_BENCH__SWEEP__RPM="[50, 500]"`` sets ``sweep.rpm``; values are parsed as YAML."""
        raw = copy.deepcopy(raw)
        for env_var in sorted(os.environ):
            if not env_var.startswith(ENV_PREFIX):
                continue
            parts = [p.lower() for p in env_var[len(ENV_PREFIX):].split(ENV_SEPARATOR) if p]
            if not parts:
                continue
            try:
                value = yaml.safe_load(os.environ[env_var])
            except yaml.YAMLError as e:
                raise ConfigurationError(f"cannot parse value of {env_var}: {e}") from e
            _set_path(raw, parts, value)
            key = ".".join(parts)
            self.config_values[key] = ConfigValue(value, ConfigSource.ENVIRONMENT_VARIABLE,
                                                  f"Override from {env_var}")
            self.logger.debug(f"Environment override {key} = {value!r}")
        return raw

    def _track(self, raw: Dict[str, Any], source: ConfigSource, description: str):
        for key, value in self.validator._flatten_dict(raw).items():
            self.config_values[key] = ConfigValue(value, source, description)

    def get_configuration_summary(self) -> Dict[str, Any]:
        """Identity of the loaded run plus every value set from the environment or command line."""
        config = self.config
        overrides = {key: value.source.value for key, value in sorted(self.config_values.items())
                     if value.source in (ConfigSource.ENVIRONMENT_VARIABLE, ConfigSource.COMMAND_LINE)}
        return {
            "config_file": self.config_file,
            "config_hash": config_hash(config) if config else None,
            "sensors": [sensor.id for sensor in config.sensors] if config else [],
            "cells": len(config.sensors) * len(config.sweep.rpm) * len(config.scene.lux) if config else 0,
            "overrides": overrides,
        }


def _set_path(tree: Dict[str, Any], parts: List[str], value: Any):
    """Assign ``value`` at a key path; digit segments index into lists."""
    node: Any = tree
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(node, list):
            if not part.isdigit() or int(part) >= len(node):
                raise ConfigurationError(f"list index '{part}' out of range", ".".join(parts[:i + 1]))
            if last:
                node[int(part)] = value
            else:
                node = node[int(part)]
            continue
        if last:
            node[part] = value
        else:
            if not isinstance(node.get(part), (dict, list)):
                node[part] = {}
            node = node[part]


def load_config(path: Optional[Union[str, Path]], lenient: bool = False, apply_env: bool = True,
                overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Load, default and validate a run configuration."""
    manager = ConfigurationManager(str(path) if path else None, lenient=lenient)
    return manager.load(overrides=overrides, apply_env=apply_env)
