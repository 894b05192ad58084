"""
Performance Monitoring
======================

Stage timings and resident-memory samples for a sweep, written to ``performance.json``
next to the report. Nothing here feeds back into results.
"""

import functools
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import psutil


@dataclass
class OperationProfile:
    """Wall-clock samples of one ``component.operation``."""
    component: str
    operation: str
    samples: List[float] = field(default_factory=list)
    errors: int = 0

    @property
    def calls(self) -> int:
        return len(self.samples)

    @property
    def total(self) -> float:
        return float(np.sum(self.samples)) if self.samples else 0.0

    def to_dict(self) -> Dict[str, Any]:
        times = np.asarray(self.samples if self.samples else [0.0])
        return {
            "component": self.component,
            "operation": self.operation,
            "calls": self.calls,
            "errors": self.errors,
            "total_s": self.total,
            "mean_s": float(times.mean()),
            "median_s": float(np.median(times)),
            "min_s": float(times.min()),
            "max_s": float(times.max()),
        }


class PerformanceMonitor:
    """Stage profiles plus process RSS sampled at cell boundaries."""

    def __init__(self):
        self.profiles: Dict[str, OperationProfile] = {}
        self.memory_samples: List[Dict[str, Any]] = []
        self._process = psutil.Process(os.getpid())

    def _profile(self, component: str, operation: str) -> OperationProfile:
        key = f"{component}.{operation}"
        if key not in self.profiles:
            self.profiles[key] = OperationProfile(component, operation)
        return self.profiles[key]

    def record(self, component: str, operation: str, seconds: float, failed: bool = False):
        profile = self._profile(component, operation)
        profile.samples.append(seconds)
        profile.errors += int(failed)

    @contextmanager
    def measure(self, component: str, operation: str):
        """Time the enclosed block; an escaping exception counts as an error."""
        start = time.perf_counter()
        failed = True
        try:
            yield
            failed = False
        finally:
            self.record(component, operation, time.perf_counter() - start, failed)

    def sample_memory(self, label: str) -> float:
        """Resident set size in MB, kept under ``label``."""
        rss_mb = self._process.memory_info().rss / 2 ** 20
        self.memory_samples.append({"label": label, "rss_mb": rss_mb})
        return rss_mb

    def export_state(self) -> Dict[str, Any]:
        """Picklable snapshot a worker process hands back to the parent."""
        return {
            "profiles": [{"component": p.component, "operation": p.operation,
                          "samples": list(p.samples), "errors": p.errors} for p in self.profiles.values()],
            "memory_samples": list(self.memory_samples),
        }

    def merge(self, state: Dict[str, Any]):
        for data in state["profiles"]:
            profile = self._profile(data["component"], data["operation"])
            profile.samples.extend(data["samples"])
            profile.errors += data["errors"]
        self.memory_samples.extend(state["memory_samples"])

    def summary(self) -> Dict[str, Any]:
        ranked = sorted(self.profiles.values(), key=lambda p: p.total, reverse=True)
        return {
            "operations": len(ranked),
            "calls": sum(p.calls for p in ranked),
            "peak_rss_mb": max((s["rss_mb"] for s in self.memory_samples), default=0.0),
            "slowest": [f"{p.component}.{p.operation}" for p in ranked[:5]],
        }

    def write_report(self, filepath: str, errors: Optional[Dict[str, Any]] = None) -> str:
        """``performance.json``: summary, per-stage profiles, memory samples and the error summary."""
        report = {
            "generated": datetime.now().isoformat(),
            "summary": self.summary(),
            "profiles": {key: self.profiles[key].to_dict() for key in sorted(self.profiles)},
            "memory_samples": self.memory_samples,
        }
        if errors is not None:
            report["errors"] = errors
        with open(filepath, "w") as f:
            json.dump(report, f, indent=2)
        return filepath


def timed(component: str, operation: Optional[str] = None):
    """
    Method decorator timing each call through the instance's ``monitor``.

    Usage:
        @timed("evs", "simulate")
        def simulate_events(self):
            ...
    """

    def decorator(method: Callable) -> Callable:
        name = operation or method.__name__

        @functools.wraps(method)
        def wrapper(self, *args, **kwargs) -> Any:
            with self.monitor.measure(component, name):
                return method(self, *args, **kwargs)

        return wrapper
    return decorator
