"""
Report Plots
============

Line charts of the normalised metrics against rotation speed, one SVG per metric with one
polyline per sensor (and per illuminance when the sweep has several). Undefined cells leave a
gap in the line. Output is byte-stable across reruns.
"""

import logging
import os
from typing import Dict, List, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .file_utils import read_report_csv
from .metrics import NORMALIZED_METRICS

logger = logging.getLogger(__name__)

# Fixed id salt and no timestamp keep SVG bytes reproducible
SVG_HASH_SALT = "bvs_bench"

METRIC_LABELS = {
    "thickness_px": "Normalised edge thickness",
    "tss": "Normalised TSS",
    "gm": "Normalised gradient magnitude",
    "var": "Normalised variance",
    "gradvar": "Normalised gradient variance",
}


def _series(rows: List[Dict], column: str) -> Dict[Tuple[str, float], Tuple[np.ndarray, np.ndarray]]:
    grouped: Dict[Tuple[str, float], List[Tuple[float, float]]] = {}
    for row in rows:
        value = row.get(column)
        y = float(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else np.nan
        grouped.setdefault((str(row["sensor_id"]), float(row["lux"])), []).append((float(row["rpm"]), y))
    series = {}
    for key, points in grouped.items():
        points.sort(key=lambda p: p[0])
        series[key] = (np.array([p[0] for p in points]), np.array([p[1] for p in points]))
    return series


def plot_metric(rows: List[Dict], metric: str, file_path: str, log_scale_x: bool = False) -> str:
    """Write one SVG for ``norm_<metric>``."""
    series = _series(rows, f"norm_{metric}")
    several_lux = len({lux for _, lux in series}) > 1
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for (sensor_id, lux), (x, y) in series.items():
            label = f"{sensor_id} @ {lux:g} lux" if several_lux else sensor_id
            ax.plot(x, y, marker="o", label=label)
        if log_scale_x:
            ax.set_xscale("log")
        ax.set_xlabel("Rotation speed (rpm)")
        ax.set_ylabel(METRIC_LABELS.get(metric, metric))
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(file_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return file_path


def emit_plots(report_path: str, output_dir: str, log_scale_x: bool = False) -> List[str]:
    """
    One line chart per normalised metric from a sweep report.

    Returns:
        Paths of the written SVG files; empty when the report has no rows
    """
    rows = read_report_csv(report_path)
    if not rows:
        logger.warning(f"Report {report_path} has no rows; no plots written")
        return []
    os.makedirs(output_dir, exist_ok=True)
    written = []
    for metric in NORMALIZED_METRICS:
        path = plot_metric(rows, metric, os.path.join(output_dir, f"{metric}.svg"), log_scale_x)
        logger.debug(f"Plot written: {path}")
        written.append(path)
    logger.info(f"{len(written)} plots written to {output_dir}")
    return written
