"""
Sweep Orchestration
===================

Runs every (sensor × rpm × lux) cell of a RunConfig: simulate the sensor, calibrate or
reconstruct, compute imaging metrics and perception tasks, and write one report row per
cell. Rows are normalised against the slowest speed within each (sensor, lux) group.

Cells are independent and may run in a process pool; rows are always written in
(sensor, rpm, lux) order. A failing cell is recorded in its row and the sweep continues.
"""

import dataclasses
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .aop_model import sample_aop, sample_cop, sd_to_gradient
from .calib import apply_homography, estimate_omega_cmax, slice_by_angle, warp_events
from .config import (DATA_DIRECTORY_NAME, PERFORMANCE_FILE_NAME, PLOTS_DIRECTORY_NAME,
                     REPORT_FILE_NAME, RESOLVED_CONFIG_FILE_NAME)
from .config_manager import RunConfig, SensorConfig, config_from_dict, config_hash, save_config
from .error_handler import BenchError, ErrorHandler, RecoveryStrategy
from .evs_model import EventStream, Roi, simulate_sensor
from .file_utils import (ensure_directory, read_aop_bin, read_events, sanitize_component, write_aop_bin,
                         write_corner_overlay, write_events, write_flow_bin, write_pgm, write_report_csv)
from .geometry import IntensityField, rotate_about
from .metrics import MetricsRow, NORMALIZED_METRICS, normalize_sweep, structural_metrics, thickness
from .performance_monitor import PerformanceMonitor, timed
from .recon import reconstruct_from_sd, rmse
from .scene import SceneModel, TurntableTrajectory
from .tasks import (CornerSet, FLOW_METHOD, angular_speed_from_flow, arc_corner_detect, dedup_corners,
                    flow_from_aop, flow_from_events, match_corners, merge_match_results, shi_tomasi)
from .visual_interface import VisualInterface

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "config_hash", "sensor_id", "sensor_kind", "pattern", "rpm", "lux", "status", "error",
    "n_events", "saturation_dropped",
    "omega_gt", "omega_used", "cmax_omega", "cmax_rel_error", "cmax_low_confidence",
    "thickness_px", "cop_thickness_px", "tss", "gm", "var", "gradvar",
    "norm_thickness_px", "norm_tss", "norm_gm", "norm_var", "norm_gradvar",
    "match_radius", "n_matched", "n_detected", "n_gt", "precision", "recall", "f1", "precision_defined",
    "flow_method", "flow_rel_error", "flow_abs_error", "flow_support", "flow_rel_error_long",
    "recon_rmse", "recon_iterations", "recon_residual",
]

MODE_SIMULATE = "simulate"
MODE_SWEEP = "sweep"
MODE_EVALUATE = "evaluate"


@dataclass(frozen=True)
class Cell:
    sensor_index: int
    sensor_id: str
    rpm_index: int
    rpm: float
    lux_index: int
    lux: float

    @property
    def label(self) -> str:
        return f"{self.sensor_id}/{self.rpm:g}/{self.lux:g}"


def iter_cells(config: RunConfig) -> List[Cell]:
    """Cells in report order: sensor, then rpm, then lux."""
    return [Cell(si, sensor.id, ri, float(rpm), li, float(lux))
            for si, sensor in enumerate(config.sensors)
            for ri, rpm in enumerate(config.sweep.rpm)
            for li, lux in enumerate(config.scene.lux)]


def cell_seed(seed: int, cell: Cell) -> int:
    """Per-cell seed independent of execution order."""
    sequence = np.random.SeedSequence([seed, cell.sensor_index, cell.lux_index, cell.rpm_index])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def cell_data_dir(output_dir: str, cell: Cell) -> str:
    return os.path.join(output_dir, DATA_DIRECTORY_NAME, sanitize_component(cell.sensor_id),
                        sanitize_component(cell.lux), sanitize_component(cell.rpm))


def build_scene(config: RunConfig, rpm: float, lux: float) -> SceneModel:
    scene_cfg = config.scene
    return SceneModel(scene_cfg.pattern_spec(), TurntableTrajectory(rpm=rpm), illuminance=lux,
                      homography=scene_cfg.build_homography(),
                      sensor_resolution=(scene_cfg.width, scene_cfg.height),
                      radius_px=scene_cfg.radius_px, blur_px=scene_cfg.blur_px, texel_px=scene_cfg.texel_px)


def embed_roi(stream: EventStream, roi: Optional[Roi], width: int, height: int) -> EventStream:
    """Return ROI-origin events to full-sensor coordinates."""
    if roi is None:
        return stream
    return EventStream(stream.t, stream.x + roi.x, stream.y + roi.y, stream.p, width, height,
                       stream.t_start_us, stream.t_end_us, dict(stream.metadata))


def _corners_inside(corners: CornerSet, roi: Optional[Roi], width: int, height: int) -> CornerSet:
    if roi is None:
        return corners.within(width, height)
    x, y = corners.points[:, 0], corners.points[:, 1]
    keep = (x >= roi.x) & (x <= roi.x + roi.width - 1) & (y >= roi.y) & (y <= roi.y + roi.height - 1)
    return corners.subset(keep)


class CellEvaluator:
    """
    Simulates and evaluates one cell. Metric-level failures that the error rules mark as
    FALLBACK leave that metric empty; anything else fails the whole cell.
    """

    def __init__(self, config: RunConfig, cell: Cell, error_handler: ErrorHandler,
                 monitor: PerformanceMonitor, workers: int = 1):
        self.config = config
        self.cell = cell
        self.sensor: SensorConfig = config.sensors[cell.sensor_index]
        self.error_handler = error_handler
        self.monitor = monitor
        self.workers = workers
        self.seed = cell_seed(config.seed, cell)
        self.scene = build_scene(config, cell.rpm, cell.lux)
        self.homography = None if self.scene.homography.is_identity else self.scene.homography
        self.row: Dict[str, Any] = {
            "config_hash": config_hash(config),
            "sensor_id": self.sensor.id,
            "sensor_kind": self.sensor.kind,
            "pattern": config.scene.pattern,
            "rpm": cell.rpm,
            "lux": cell.lux,
            "status": "ok",
            "omega_gt": self.scene.omega,
            "match_radius": config.tasks.match_radius,
        }
        # Image and flow exports go here when set
        self.artifacts_dir: Optional[str] = None

    def _export(self, name: str, write: Callable[[str], Any]):
        if self.artifacts_dir is not None:
            write(os.path.join(self.artifacts_dir, name))

    def _attempt(self, operation: str, func: Callable[[], Any]) -> Any:
        """Run one metric; FALLBACK errors give ``None``, others propagate."""
        with self.monitor.measure(self.sensor.kind, operation):
            try:
                return func()
            except BenchError as e:
                if self.error_handler.handle(e, self.cell.label, operation).strategy is not RecoveryStrategy.FALLBACK:
                    raise
                return None

    # ------------------------------------------------------------------
    # Simulation
    # ------------------------------------------------------------------

    def _roi(self) -> Optional[Roi]:
        return self.sensor.resolve_roi(self.scene.width, self.scene.height)

    @timed("evs", "simulate")
    def simulate_events(self) -> EventStream:
        sweep = self.config.sweep
        evs_cfg = dataclasses.replace(self.sensor.evs, seed=self.seed, roi=self._roi())
        _, t1 = sweep.eval_interval(self.cell.rpm)
        return simulate_sensor(self.scene, evs_cfg, sweep.simulation_start(self.cell.rpm), t1, workers=self.workers)

    @timed("aop", "simulate")
    def simulate_aop(self):
        aop_cfg = self.sensor.aop
        t0, _ = self.config.sweep.eval_interval(self.cell.rpm)
        return sample_aop(self.scene, aop_cfg, t0, t0 + self.config.sweep.aop_frames / aop_cfg.fps,
                          workers=self.workers)

    # ------------------------------------------------------------------
    # Event sensor analysis
    # ------------------------------------------------------------------

    @timed("evs", "evaluate")
    def evaluate_events(self, stream: EventStream):
        config, tasks, scene, row = self.config, self.config.tasks, self.scene, self.row
        rpm = self.cell.rpm
        roi = self._roi()
        full = embed_roi(stream, roi, scene.width, scene.height)
        t0, t1 = config.sweep.eval_interval(rpm)
        evaluation = full.time_window(t0 * 1e6, t1 * 1e6)
        row["n_events"] = len(evaluation)
        row["saturation_dropped"] = int(stream.metadata.get("saturation_dropped", 0))

        calib_slice = slice_by_angle(evaluation, rpm, tasks.calib_window_deg)[0]
        omega_used = scene.omega
        if tasks.cmax:
            lo, hi = tasks.cmax_range
            estimate = self._attempt("cmax", lambda: estimate_omega_cmax(
                calib_slice, scene.center, (lo * scene.omega, hi * scene.omega),
                coarse_steps=tasks.cmax_coarse_steps, homography=self.homography))
            if estimate is not None:
                row["cmax_omega"] = estimate.omega_hat
                row["cmax_rel_error"] = abs(estimate.omega_hat - scene.omega) / scene.omega
                row["cmax_low_confidence"] = estimate.low_confidence
                if tasks.omega_source == "cmax":
                    omega_used = estimate.omega_hat
        row["omega_used"] = omega_used

        iwe = warp_events(calib_slice, omega_used, scene.center, homography=self.homography)
        self._export("iwe.pgm", lambda path: write_pgm(iwe.grid, path, bits=16))
        self._export("reference.pgm", lambda path: write_pgm(
            scene.render_reference(iwe.t_ref * 1e-6).data, path, bits=16, value_range=(0.0, 1.0)))
        self._image_metrics(iwe.grid)
        if tasks.corners:
            self._event_corners(full, evaluation, roi)
        if tasks.flow:
            for index, window_deg in enumerate(tasks.flow_windows_deg[:2]):
                field = self._attempt("flow", lambda: flow_from_events(
                    evaluation, rpm, window_deg, window=tasks.flow_window_px))
                if index == 0 and field is not None:
                    self._export("flow.bin", lambda path: write_flow_bin(field.vx, field.vy, field.valid, path))
                self._angular_speed(field, "flow_rel_error" if index == 0 else "flow_rel_error_long",
                                    record_support=index == 0)

    def _event_corners(self, full: EventStream, evaluation: EventStream, roi: Optional[Roi]):
        tasks, scene = self.config.tasks, self.scene
        window_us = tasks.corner_window_deg / (6.0 * self.cell.rpm) * 1e6
        gt_base = scene.gt_corners(quality_level=tasks.corner_quality)
        results = []
        with self.monitor.measure("evs", "corners"):
            for window in slice_by_angle(evaluation, self.cell.rpm, tasks.corner_window_deg)[:tasks.corner_windows]:
                feed = full.time_window(max(full.t_start_us, window.t_start_us - window_us), window.t_end_us)
                detected = arc_corner_detect(feed, (scene.width, scene.height),
                                             tuple(tasks.arc_r3_bounds), tuple(tasks.arc_r4_bounds))
                detected = dedup_corners(detected.subset(detected.t >= window.t_start_us), tasks.dedup_radius)
                t_mid = (window.t_start_us + window.t_end_us) / 2e6
                gt = _corners_inside(scene.corners_at(t_mid, gt_base), roi, scene.width, scene.height)
                results.append(match_corners(detected, gt, tasks.match_radius))
                if len(results) == 1:
                    self._export("corners.pgm", lambda path: write_corner_overlay(
                        scene.render_reference(t_mid).data, detected.points, path))
        self._record_match(merge_match_results(results))

    # ------------------------------------------------------------------
    # Primitive-pathway analysis
    # ------------------------------------------------------------------

    def _rectify(self, image: np.ndarray, t: float = 0.0) -> np.ndarray:
        if self.homography is None:
            return image
        return apply_homography(self.homography.inverse(), IntensityField(image, t)).data

    @timed("aop", "evaluate")
    def evaluate_aop(self, frames):
        tasks, scene, row = self.config.tasks, self.scene, self.row
        aop_cfg = self.sensor.aop
        first = frames[0]
        t_first = first.t / 1e6

        gx, gy = sd_to_gradient(first)
        self._image_metrics(self._rectify(np.hypot(gx, gy), t_first))

        if tasks.thickness:
            cop = sample_cop(scene, aop_cfg.cop_fps, aop_cfg.cop_exposure_s, t0=t_first, n_frames=1,
                             workers=self.workers)[0]
            self._export("cop.pgm", lambda path: write_pgm(cop.intensity, path, bits=16, value_range=(0.0, 1.0)))
            edge = self._rectify(np.abs(cop.intensity - scene.pattern.background), t_first)
            row["cop_thickness_px"] = self._attempt("cop_thickness", lambda: thickness(
                edge, scene.center, scene.radius_px, tasks.thickness_radius_frac, tasks.thickness_floor_frac))

        if tasks.recon:
            reference = scene.render_reference(t_first).data
            self._export("reference.pgm", lambda path: write_pgm(reference, path, bits=16, value_range=(0.0, 1.0)))
            result = self._attempt("recon", lambda: reconstruct_from_sd(
                first, anchor_mean=float(reference.mean()), coupling=tasks.recon_coupling))
            if result is not None:
                row["recon_rmse"] = rmse(result.image, reference)
                row["recon_iterations"] = result.iterations
                row["recon_residual"] = result.residual
                self._export("recon.pgm", lambda path: write_pgm(result.image, path, bits=16))

        if tasks.corners:
            self._aop_corners(frames)
        if tasks.flow:
            field = self._attempt("flow", lambda: flow_from_aop(
                frames, aop_cfg.fps, window=tasks.flow_window_px,
                min_rotation_deg=tasks.flow_min_rotation_deg, rpm=self.cell.rpm))
            if field is not None:
                self._export("flow.bin", lambda path: write_flow_bin(field.vx, field.vy, field.valid, path))
            self._angular_speed(field, "flow_rel_error", record_support=True)

    def _aop_corners(self, frames):
        tasks, scene = self.config.tasks, self.scene
        gt_base = scene.gt_corners(quality_level=tasks.corner_quality)
        min_distance = max(3.0, scene.feature_scale() / 2.0)
        indices = sorted({int(round(i)) for i in np.linspace(0, len(frames) - 1, tasks.corner_samples)})
        results = []
        with self.monitor.measure("aop", "corners"):
            for index in indices:
                frame = frames[index]
                t = frame.t / 1e6
                recon = reconstruct_from_sd(frame, coupling=tasks.recon_coupling)
                image = self._rectify(recon.image, t)
                detected = shi_tomasi(image, max_corners=1000,
                                      quality_level=tasks.corner_quality, min_distance=min_distance)
                detected = dedup_corners(detected, tasks.dedup_radius)
                if len(gt_base):
                    gx, gy = rotate_about(gt_base.points[:, 0], gt_base.points[:, 1], scene.center, scene.theta(t))
                    gt = CornerSet(np.column_stack([gx, gy]), gt_base.scores.copy()).within(scene.width, scene.height)
                else:
                    gt = gt_base
                results.append(match_corners(detected, gt, tasks.match_radius))
                if len(results) == 1:
                    self._export("corners.pgm", lambda path: write_corner_overlay(image, detected.points, path))
        self._record_match(merge_match_results(results))

    # ------------------------------------------------------------------
    # Shared
    # ------------------------------------------------------------------

    def _image_metrics(self, image: np.ndarray):
        tasks, scene = self.config.tasks, self.scene
        if tasks.thickness:
            self.row["thickness_px"] = self._attempt("thickness", lambda: thickness(
                image, scene.center, scene.radius_px, tasks.thickness_radius_frac, tasks.thickness_floor_frac))
        if tasks.structural:
            self.row.update(structural_metrics(image))

    def _angular_speed(self, field, column: str, record_support: bool):
        self.row["flow_method"] = FLOW_METHOD
        if field is None:
            return
        lo, hi = self.config.tasks.annulus
        estimate = self._attempt("angular_speed", lambda: angular_speed_from_flow(
            field, self.scene.center, self.scene.radius_px, self.scene.omega, lo, hi,
            homography=self.homography))
        if estimate is None:
            return
        self.row[column] = estimate.rel_error
        if record_support:
            self.row["flow_abs_error"] = estimate.abs_error
            self.row["flow_support"] = estimate.n_support

    def _record_match(self, match):
        self.row.update({"n_matched": match.n_matched, "n_detected": match.n_detected, "n_gt": match.n_gt,
                         "precision": match.precision, "recall": match.recall, "f1": match.f1,
                         "precision_defined": match.precision_defined})


def run_cell(config: RunConfig, cell: Cell, mode: str, output_dir: str,
             error_handler: Optional[ErrorHandler] = None, monitor: Optional[PerformanceMonitor] = None,
             workers: int = 1) -> Dict[str, Any]:
    """
    Simulate and/or evaluate one cell.

    ``simulate`` writes recordings only, ``sweep`` simulates and evaluates, ``evaluate``
    reads recordings written earlier (or recorded elsewhere in the same layout).
    """
    error_handler = error_handler or ErrorHandler()
    monitor = monitor or PerformanceMonitor()
    monitor.sample_memory(f"{cell.label}:start")
    evaluator = CellEvaluator(config, cell, error_handler, monitor, workers)
    row = evaluator.row
    data_dir = cell_data_dir(output_dir, cell)
    kind = evaluator.sensor.kind
    if config.output.save_images and mode != MODE_SIMULATE:
        evaluator.artifacts_dir = data_dir
    try:
        if kind == "evs":
            if mode == MODE_EVALUATE:
                stream = read_events(_recorded_events_path(data_dir))
            else:
                stream = evaluator.simulate_events()
                if config.output.save_data or mode == MODE_SIMULATE:
                    write_events(stream, os.path.join(data_dir, "events"), config.output.event_format)
            if mode == MODE_SIMULATE:
                row["n_events"] = len(stream)
            else:
                evaluator.evaluate_events(stream)
        else:
            if mode == MODE_EVALUATE:
                frames, _ = read_aop_bin(os.path.join(data_dir, "aop.bin"))
            else:
                frames = evaluator.simulate_aop()
                if config.output.save_data or mode == MODE_SIMULATE:
                    write_aop_bin(frames, evaluator.sensor.aop.fps, evaluator.sensor.aop.quant_bits,
                                  os.path.join(data_dir, "aop.bin"))
            if mode != MODE_SIMULATE:
                evaluator.evaluate_aop(frames)
    except (MemoryError, PermissionError):
        raise
    except Exception as e:
        error_handler.handle(e, cell.label, mode)
        row["status"] = "failed"
        row["error"] = f"{type(e).__name__}: {e}"
    monitor.sample_memory(f"{cell.label}:end")
    return row


def _recorded_events_path(data_dir: str) -> str:
    for name in ("events.bin", "events.csv"):
        path = os.path.join(data_dir, name)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"No event recording in {data_dir}")


def _cell_worker(args: Tuple[Dict[str, Any], Cell, str, str]) -> Tuple[Dict[str, Any], Dict[str, Any], List[Dict[str, Any]]]:
    """Process-pool entry point; returns the row, the monitor state and the error records."""
    config_dict, cell, mode, output_dir = args
    config = config_from_dict(config_dict)
    error_handler = ErrorHandler()
    monitor = PerformanceMonitor()
    row = run_cell(config, cell, mode, output_dir, error_handler, monitor)
    return row, monitor.export_state(), error_handler.export_records()


def normalize_rows(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Fill ``norm_*`` columns per (sensor, lux) group; row order is preserved."""
    groups: Dict[Tuple[str, float], List[int]] = {}
    for index, row in enumerate(rows):
        groups.setdefault((row["sensor_id"], row["lux"]), []).append(index)
    for indices in groups.values():
        metrics_rows = [MetricsRow(rows[i]["sensor_id"], rows[i]["rpm"], rows[i]["lux"],
                                   **{name: rows[i].get(name) for name in NORMALIZED_METRICS})
                        for i in indices]
        by_rpm = {r.rpm: r for r in normalize_sweep(metrics_rows)}
        for i in indices:
            normalized = by_rpm[rows[i]["rpm"]].normalized
            for name in NORMALIZED_METRICS:
                rows[i][f"norm_{name}"] = normalized.get(name)
    return rows


class SweepRunner:
    """Drives a whole run and owns its output directory."""

    def __init__(self, config: RunConfig, output_dir: Optional[str] = None,
                 interface: Optional[VisualInterface] = None,
                 error_handler: Optional[ErrorHandler] = None,
                 monitor: Optional[PerformanceMonitor] = None,
                 report_path: Optional[str] = None):
        self.config = config
        self.output_dir = output_dir or config.output.directory
        self.report_path = report_path or os.path.join(self.output_dir, REPORT_FILE_NAME)
        self.interface = interface or VisualInterface(quiet=True)
        self.error_handler = error_handler or ErrorHandler()
        self.monitor = monitor or PerformanceMonitor()

    def _prepare_output(self):
        ensure_directory(self.output_dir)
        save_config(self.config, os.path.join(self.output_dir, RESOLVED_CONFIG_FILE_NAME))

    def _execute(self, mode: str) -> List[Dict[str, Any]]:
        cells = iter_cells(self.config)
        jobs = min(self.config.resolved_jobs(), len(cells))
        self.interface.print_section_header(f"{mode.upper()}: {len(cells)} cells, {jobs} job(s)")
        rows: List[Dict[str, Any]] = []
        if jobs <= 1:
            for index, cell in enumerate(cells, start=1):
                row = run_cell(self.config, cell, mode, self.output_dir, self.error_handler, self.monitor,
                               workers=self.config.resolved_jobs())
                rows.append(row)
                self._report_cell(cell, row)
                self.interface.print_progress_bar(index, len(cells), "Cells")
        else:
            config_dict = self.config.to_dict()
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_cell_worker, [(config_dict, cell, mode, self.output_dir) for cell in cells])
                for index, (cell, (row, state, errors)) in enumerate(zip(cells, results), start=1):
                    rows.append(row)
                    self.monitor.merge(state)
                    self.error_handler.absorb(errors)
                    self._report_cell(cell, row)
                    self.interface.print_progress_bar(index, len(cells), "Cells")
        self.interface.print_section_footer()
        return rows

    def _report_cell(self, cell: Cell, row: Dict[str, Any]):
        ok = row.get("status") == "ok"
        detail = "" if ok else row.get("error", "")
        self.interface.print_cell_result(cell.sensor_id, cell.rpm, cell.lux, ok, detail)
        if ok:
            logger.info(f"Cell {cell.sensor_id} rpm={cell.rpm:g} lux={cell.lux:g} done")
        else:
            logger.warning(f"Cell {cell.sensor_id} rpm={cell.rpm:g} lux={cell.lux:g} failed: {detail}")

    def _write_performance(self):
        self.monitor.write_report(os.path.join(self.output_dir, PERFORMANCE_FILE_NAME),
                                  errors=self.error_handler.summary())

    def _finish(self, rows: List[Dict[str, Any]]) -> str:
        rows = normalize_rows(rows)
        report_path = write_report_csv(rows, REPORT_COLUMNS, self.report_path)
        self.interface.print_file_saved("Report", report_path)
        if self.config.output.plots:
            from .plots import emit_plots
            for path in emit_plots(report_path, os.path.join(self.output_dir, PLOTS_DIRECTORY_NAME),
                                   log_scale_x=self.config.output.log_scale_x):
                self.interface.print_file_saved("Plot", path)
        self._write_performance()
        failed = sum(1 for row in rows if row.get("status") != "ok")
        self.interface.print_operation_summary("Sweep", [
            f"Rows: {len(rows)}",
            f"Failed cells: {failed}",
            f"Config hash: {config_hash(self.config)}",
        ])
        return report_path

    def simulate(self) -> str:
        """Write recordings for every cell; returns the data directory."""
        self._prepare_output()
        rows = self._execute(MODE_SIMULATE)
        self._write_performance()
        failed = [r for r in rows if r.get("status") != "ok"]
        if failed:
            logger.warning(f"{len(failed)} cell(s) failed to simulate")
        return os.path.join(self.output_dir, DATA_DIRECTORY_NAME)

    def run(self) -> str:
        """Simulate and evaluate every cell; returns the report path."""
        self._prepare_output()
        return self._finish(self._execute(MODE_SWEEP))

    def evaluate(self) -> str:
        """Evaluate recordings under ``<output>/data``; returns the report path."""
        self._prepare_output()
        return self._finish(self._execute(MODE_EVALUATE))


def run_sweep(config: RunConfig, output_dir: Optional[str] = None,
              interface: Optional[VisualInterface] = None) -> str:
    """Simulate and evaluate the whole sweep; returns the report path."""
    return SweepRunner(config, output_dir, interface).run()


def simulate(config: RunConfig, output_dir: Optional[str] = None,
             interface: Optional[VisualInterface] = None) -> str:
    return SweepRunner(config, output_dir, interface).simulate()


def evaluate(config: RunConfig, output_dir: Optional[str] = None,
             interface: Optional[VisualInterface] = None) -> str:
    return SweepRunner(config, output_dir, interface).evaluate()
