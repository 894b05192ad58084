"""
Test Suite for Error Handling System
====================================

Recovery rules, per-cell failure records and the CLI exit-code decorator.
"""

import logging

import pytest

from bvs_bench.error_handler import (ConfigurationError, ConvergenceError, ErrorHandler, FormatError,
                                     InsufficientEventsError, InsufficientSupportError, NoEdgeFoundError,
                                     RecoveryStrategy, UNEXPECTED_ERROR, rule_for, with_error_handling)

CELL = "evs/2000/100"


@pytest.mark.unit
class TestExceptions:

    def test_configuration_error_carries_key_path(self):
        """Key path prefixes the message and stays available"""
        error = ConfigurationError("must be > 0", "sweep.rpm")
        assert str(error) == "sweep.rpm: must be > 0"
        assert error.key_path == "sweep.rpm"
        assert error.detail == "must be > 0"
        assert isinstance(error, ValueError)

    def test_convergence_error_reports_state(self):
        error = ConvergenceError("stalled", 0.5, 10)
        assert error.iterations == 10
        assert "iterations=10" in str(error)


@pytest.mark.unit
class TestRules:

    @pytest.mark.parametrize("error,strategy,level", [
        (ConfigurationError("bad"), RecoveryStrategy.HALT, logging.CRITICAL),
        (PermissionError("denied"), RecoveryStrategy.HALT, logging.CRITICAL),
        (MemoryError(), RecoveryStrategy.HALT, logging.CRITICAL),
        (FormatError("bad header"), RecoveryStrategy.SKIP, logging.ERROR),
        (ConvergenceError("stalled", 1.0, 5), RecoveryStrategy.SKIP, logging.ERROR),
        (FileNotFoundError("gone"), RecoveryStrategy.SKIP, logging.ERROR),
        (InsufficientEventsError("few"), RecoveryStrategy.FALLBACK, logging.WARNING),
        (NoEdgeFoundError("flat"), RecoveryStrategy.FALLBACK, logging.WARNING),
        (InsufficientSupportError("sparse"), RecoveryStrategy.FALLBACK, logging.WARNING),
        (ZeroDivisionError(), RecoveryStrategy.SKIP, logging.ERROR),
    ])
    def test_rule_classification(self, error, strategy, level):
        """Every exception type maps to its recovery strategy"""
        rule = rule_for(error)
        assert rule.strategy is strategy
        assert rule.level == level

    def test_subclass_uses_nearest_rule(self):
        class TruncatedRecording(FormatError):
            pass

        assert rule_for(TruncatedRecording("short")).strategy is RecoveryStrategy.SKIP
        assert rule_for(KeyError("bug")) is UNEXPECTED_ERROR


@pytest.mark.unit
class TestErrorHandler:

    def test_failure_is_recorded_against_cell(self, error_handler):
        rule = error_handler.handle(NoEdgeFoundError("no edge found"), CELL, "thickness")
        assert rule.strategy is RecoveryStrategy.FALLBACK
        record = error_handler.records[0]
        assert (record.cell, record.stage, record.error_type) == (CELL, "thickness", "NoEdgeFoundError")
        assert record.message == "no edge found"

    def test_rule_sets_log_level(self, error_handler, caplog):
        with caplog.at_level(logging.INFO, logger="bvs_bench.errors"):
            error_handler.handle(InsufficientSupportError("sparse"), CELL, "flow")
            error_handler.handle(ConfigurationError("bad"), "cli", "sweep")
        assert [r.levelno for r in caplog.records] == [logging.WARNING, logging.CRITICAL]
        assert caplog.records[0].getMessage() == f"[{CELL}] flow: InsufficientSupportError: sparse"

    def test_summary_counts_and_failed_cells(self, error_handler):
        assert error_handler.summary() == {"total": 0, "by_strategy": {}, "by_stage": {}, "failed_cells": []}
        error_handler.handle(NoEdgeFoundError("a"), "aop/50/100", "cop_thickness")
        error_handler.handle(NoEdgeFoundError("b"), CELL, "thickness")
        error_handler.handle(FormatError("c"), CELL, "evaluate")
        summary = error_handler.summary()
        assert summary["total"] == 3
        assert summary["by_strategy"] == {"fallback": 2, "skip": 1}
        assert summary["by_stage"] == {"cop_thickness": 1, "thickness": 1, "evaluate": 1}
        assert summary["failed_cells"] == [CELL]

    def test_worker_records_are_absorbed(self, error_handler):
        worker = ErrorHandler()
        worker.handle(ConvergenceError("stalled", 1e-3, 40), CELL, "recon")
        error_handler.absorb(worker.export_records())
        record = error_handler.records[0]
        assert record.strategy is RecoveryStrategy.SKIP
        assert record.error_type == "ConvergenceError"
        assert error_handler.summary()["failed_cells"] == [CELL]


@pytest.mark.unit
class TestWithErrorHandling:

    def test_passes_return_value_through(self, error_handler):
        @with_error_handling(error_handler, "noop")
        def command():
            return 0

        assert command() == 0
        assert not error_handler.records

    def test_halt_exits_with_two(self, error_handler, capsys):
        @with_error_handling(error_handler, "sweep")
        def command():
            raise ConfigurationError("rpm must be > 0", "sweep.rpm")

        with pytest.raises(SystemExit) as excinfo:
            command()
        assert excinfo.value.code == 2
        assert "Configuration is invalid" in capsys.readouterr().err
        assert error_handler.records[0].cell == "cli"

    def test_recoverable_error_exits_with_one(self, error_handler):
        @with_error_handling(error_handler, "evaluate")
        def command():
            raise FormatError("not an event binary")

        with pytest.raises(SystemExit) as excinfo:
            command()
        assert excinfo.value.code == 1

    def test_missing_input_exits_with_two(self, error_handler):
        @with_error_handling(error_handler, "plot")
        def command():
            raise FileNotFoundError("report.csv")

        with pytest.raises(SystemExit) as excinfo:
            command()
        assert excinfo.value.code == 2

    def test_unexpected_errors_propagate(self, error_handler):
        @with_error_handling(error_handler, "sweep")
        def command():
            raise KeyError("bug")

        with pytest.raises(KeyError):
            command()
