"""
Error Handling for the Benchmark Harness
========================================

Domain exceptions and the recovery rules a sweep applies to them.

Metric-level problems (too few events, no edge, thin flow support) leave one report
column empty. Other failures mark the cell as failed and the sweep moves on to the next
cell. Configuration, permission and memory errors stop the run.
"""

import functools
import logging
import sys
from collections import Counter
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional


class BenchError(Exception):
    """Base class for all benchmark errors"""


class ConfigurationError(BenchError, ValueError):
    """Invalid or unsatisfiable configuration"""

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        self.detail = message
        super().__init__(f"{key_path}: {message}" if key_path else message)


class InsufficientEventsError(BenchError):
    """An estimator received too few events to work with"""


class NoEdgeFoundError(BenchError):
    """Thickness profile has no significant peak"""


class InsufficientSupportError(BenchError):
    """Too few valid flow pixels inside the evaluation annulus"""


class ConvergenceError(BenchError):
    """Iterative solver hit its iteration cap"""

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")


class FormatError(BenchError):
    """A persisted file does not match its documented layout"""


class RecoveryStrategy(str, Enum):
    HALT = "halt"           # stop the run
    SKIP = "skip"           # fail the cell, continue with the next one
    FALLBACK = "fallback"   # leave one metric undefined


@dataclass(frozen=True)
class ErrorRule:
    level: int
    strategy: RecoveryStrategy
    user_message: str


ERROR_RULES: Dict[type, ErrorRule] = {
    ConfigurationError: ErrorRule(logging.CRITICAL, RecoveryStrategy.HALT,
                                  "Configuration is invalid. Fix the reported key and rerun."),
    PermissionError: ErrorRule(logging.CRITICAL, RecoveryStrategy.HALT,
                               "Permission denied on the output location."),
    MemoryError: ErrorRule(logging.CRITICAL, RecoveryStrategy.HALT,
                           "Insufficient memory. Reduce resolution or duration."),
    FormatError: ErrorRule(logging.ERROR, RecoveryStrategy.SKIP,
                           "Recorded data could not be parsed. Cell skipped."),
    ConvergenceError: ErrorRule(logging.ERROR, RecoveryStrategy.SKIP,
                                "Solver did not converge. Cell recorded as failed."),
    FileNotFoundError: ErrorRule(logging.ERROR, RecoveryStrategy.SKIP,
                                 "Input file not found. Cell skipped."),
    InsufficientEventsError: ErrorRule(logging.WARNING, RecoveryStrategy.FALLBACK,
                                       "Too few events; metric left undefined."),
    NoEdgeFoundError: ErrorRule(logging.WARNING, RecoveryStrategy.FALLBACK,
                                "No edge found; thickness left undefined."),
    InsufficientSupportError: ErrorRule(logging.WARNING, RecoveryStrategy.FALLBACK,
                                        "Too few valid flow vectors; flow error left undefined."),
}

UNEXPECTED_ERROR = ErrorRule(logging.ERROR, RecoveryStrategy.SKIP, "Unexpected error. Cell recorded as failed.")


def rule_for(error: BaseException) -> ErrorRule:
    """Rule of the nearest class in the exception's MRO."""
    for klass in type(error).__mro__:
        rule = ERROR_RULES.get(klass)
        if rule is not None:
            return rule
    return UNEXPECTED_ERROR


@dataclass
class ErrorRecord:
    """One handled failure, tied to a cell label (``sensor/rpm/lux``) and a stage."""
    cell: str
    stage: str
    error_type: str
    message: str
    strategy: RecoveryStrategy

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["strategy"] = self.strategy.value
        return data


class ErrorHandler:
    """
    Applies ``ERROR_RULES`` and keeps the failures of one run.

    Worker processes use their own handler; the parent folds their records in with ``absorb``.
    """

    def __init__(self):
        self.records: List[ErrorRecord] = []
        self.logger = logging.getLogger("bvs_bench.errors")

    def handle(self, error: BaseException, cell: str, stage: str) -> ErrorRule:
        """Record ``error`` and log it at its rule's level; returns the rule."""
        rule = rule_for(error)
        record = ErrorRecord(cell, stage, type(error).__name__, str(error), rule.strategy)
        self.records.append(record)
        self.logger.log(rule.level, f"[{cell}] {stage}: {record.error_type}: {record.message}")
        return rule

    def absorb(self, records: Iterable[Dict[str, Any]]):
        for data in records:
            self.records.append(ErrorRecord(**{**data, "strategy": RecoveryStrategy(data["strategy"])}))

    def export_records(self) -> List[Dict[str, Any]]:
        return [record.to_dict() for record in self.records]

    def summary(self) -> Dict[str, Any]:
        """Counts per strategy and per stage, plus the cells that failed outright."""
        return {
            "total": len(self.records),
            "by_strategy": dict(Counter(r.strategy.value for r in self.records)),
            "by_stage": dict(Counter(r.stage for r in self.records)),
            "failed_cells": sorted({r.cell for r in self.records if r.strategy is not RecoveryStrategy.FALLBACK}),
        }


def with_error_handling(error_handler: ErrorHandler, command: str):
    """
    Wraps a CLI sub-command. Benchmark and file errors print their user message and exit
    with status 2 (HALT or missing input) or 1; anything else propagates.

    Usage:
        @with_error_handling(error_handler, "sweep")
        def cmd_sweep(args, ui):
            ...
    """

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            try:
                return func(*args, **kwargs)
            except (BenchError, PermissionError, FileNotFoundError) as e:
                rule = error_handler.handle(e, "cli", command)
                print(rule.user_message, file=sys.stderr)
                halt = rule.strategy is RecoveryStrategy.HALT or isinstance(e, FileNotFoundError)
                sys.exit(2 if halt else 1)

        return wrapper
    return decorator
