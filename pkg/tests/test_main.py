"""
Test Suite for the Command-Line Entry Point
===========================================
"""

import io
import logging
import os

import pytest
import yaml

from bvs_bench.config_manager import ConfigurationManager
from bvs_bench.main import build_parser, main, print_configuration
from bvs_bench.visual_interface import VisualInterface


@pytest.fixture(autouse=True)
def restore_logging(monkeypatch):
    for name in list(os.environ):
        if name.startswith("BVS_BENCH__"):
            monkeypatch.delenv(name)
    logger = logging.getLogger("bvs_bench")
    level = logger.level
    yield
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(level)


@pytest.fixture
def config_file(tmp_path, small_run_dict):
    path = tmp_path / "sweep.yaml"
    path.write_text(yaml.safe_dump(small_run_dict))
    return str(path)


@pytest.mark.unit
class TestParser:

    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_common_flags(self):
        args = build_parser().parse_args(["sweep", "--seed", "7", "--jobs", "2", "--lenient", "--quiet"])
        assert (args.command, args.seed, args.jobs, args.lenient, args.quiet) == ("sweep", 7, 2, True, True)


@pytest.mark.unit
def test_configuration_banner_lists_overrides(config_file):
    manager = ConfigurationManager(config_file)
    config = manager.load(overrides={"seed": 11})
    stream = io.StringIO()
    print_configuration(VisualInterface(stream=stream), manager.get_configuration_summary())
    text = stream.getvalue()
    assert manager.get_configuration_summary()["config_hash"] in text
    assert "evs_ideal, aop_ideal; 4 cells" in text
    assert "seed set from cli" in text
    assert config.seed == 11


@pytest.mark.integration
class TestCommands:

    def test_sweep_then_plot(self, config_file, tmp_path):
        out = str(tmp_path / "cli")
        assert main(["sweep", "--config", config_file, "--out", out, "--quiet", "--log-level", "WARNING"]) == 0
        report = os.path.join(out, "report.csv")
        assert os.path.exists(report)
        assert main(["plot", "--config", config_file, "--report", report, "--quiet", "--log-level", "WARNING"]) == 0
        assert len([f for f in os.listdir(os.path.join(out, "plots")) if f.endswith(".svg")]) == 5

    def test_missing_report_exits_with_two(self, config_file, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["plot", "--config", config_file, "--report", str(tmp_path / "absent.csv"), "--quiet"])
        assert excinfo.value.code == 2

    def test_invalid_configuration_exits_with_two(self, small_run_dict, tmp_path):
        small_run_dict["sweep"]["rpm"] = [0, 50]
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(small_run_dict))
        with pytest.raises(SystemExit) as excinfo:
            main(["sweep", "--config", str(path), "--quiet"])
        assert excinfo.value.code == 2
