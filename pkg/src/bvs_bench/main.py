"""
Command-line entry point.

    python run.py sweep --config configs/example_sweep.yaml --out output/run
    python run.py simulate --config ... --out ...
    python run.py evaluate --config ... --out ...      # reads <out>/data
    python run.py plot --report output/run/report.csv
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from .config import DEFAULT_CONFIG_FILE_PATH, LOG_FILE_PATH, PLOTS_DIRECTORY_NAME, REPORT_FILE_NAME
from .config_manager import ConfigurationManager, RunConfig
from .error_handler import ErrorHandler, with_error_handling
from .harness import SweepRunner
from .plots import emit_plots
from .visual_interface import VisualInterface, configure_logging

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

error_handler = ErrorHandler()
logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help=f"YAML/JSON run configuration (default {os.path.relpath(DEFAULT_CONFIG_FILE_PATH)})")
    common.add_argument("--out", default=None, help="Output directory (overrides output.directory)")
    common.add_argument("--seed", type=int, default=None, help="Master seed (overrides seed)")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes (default: CPU count)")
    common.add_argument("--lenient", action="store_true", help="Warn on unknown configuration keys")
    common.add_argument("--log-level", choices=LOG_LEVELS, default=None)
    common.add_argument("--quiet", action="store_true", help="No console progress output")

    parser = argparse.ArgumentParser(prog="bvs_bench",
                                     description="Brain-inspired vision sensor simulator and benchmark")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Write event streams / AOP frames only")
    evaluate = sub.add_parser("evaluate", parents=[common], help="Score recordings under <out>/data")
    evaluate.add_argument("--report", default=None, help="Report path (default <out>/report.csv)")
    sub.add_parser("sweep", parents=[common], help="Simulate and evaluate every cell")
    plot = sub.add_parser("plot", parents=[common], help="Plot normalised metrics from a report")
    plot.add_argument("--report", default=None, help="Report to plot (default <out>/report.csv)")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.out is not None:
        overrides["output.directory"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.log_level is not None:
        overrides["logging.log_level"] = args.log_level
    return overrides


def _config_path(args: argparse.Namespace) -> Optional[str]:
    if args.config:
        return args.config
    return DEFAULT_CONFIG_FILE_PATH if os.path.exists(DEFAULT_CONFIG_FILE_PATH) else None


def load_run_config(args: argparse.Namespace, ui: Optional[VisualInterface] = None) -> RunConfig:
    manager = ConfigurationManager(_config_path(args), lenient=args.lenient)
    config = manager.load(overrides=_overrides(args))
    logging_cfg = config.logging
    configure_logging(logging_cfg.log_level, logging_cfg.enable_console_logging,
                      logging_cfg.enable_file_logging, logging_cfg.log_file_path or LOG_FILE_PATH)
    if ui is not None:
        print_configuration(ui, manager.get_configuration_summary())
    return config


def print_configuration(ui: VisualInterface, summary: Dict[str, Any]):
    lines = [f"Config: {summary['config_file'] or 'defaults'} (hash {summary['config_hash']})",
             f"Sensors: {', '.join(summary['sensors'])}; {summary['cells']} cells"]
    lines += [f"- {key} set from {source}" for key, source in summary["overrides"].items()]
    ui.print_info("\n".join(lines))


@with_error_handling(error_handler, "simulate")
def cmd_simulate(args: argparse.Namespace, ui: VisualInterface) -> int:
    config = load_run_config(args, ui)
    data_dir = SweepRunner(config, interface=ui).simulate()
    ui.print_success(f"Recordings written to {data_dir}")
    return 0


@with_error_handling(error_handler, "evaluate")
def cmd_evaluate(args: argparse.Namespace, ui: VisualInterface) -> int:
    config = load_run_config(args, ui)
    report_path = SweepRunner(config, interface=ui, report_path=args.report).evaluate()
    ui.print_success(f"Report written to {report_path}")
    return 0


@with_error_handling(error_handler, "sweep")
def cmd_sweep(args: argparse.Namespace, ui: VisualInterface) -> int:
    config = load_run_config(args, ui)
    report_path = SweepRunner(config, interface=ui).run()
    ui.print_success(f"Report written to {report_path}")
    return 0


@with_error_handling(error_handler, "plot")
def cmd_plot(args: argparse.Namespace, ui: VisualInterface) -> int:
    config = load_run_config(args)
    report_path = args.report or os.path.join(config.output.directory, REPORT_FILE_NAME)
    if not os.path.exists(report_path):
        raise FileNotFoundError(f"Report not found: {report_path}")
    plots_dir = os.path.join(os.path.dirname(os.path.abspath(report_path)), PLOTS_DIRECTORY_NAME)
    written = emit_plots(report_path, plots_dir, log_scale_x=config.output.log_scale_x)
    if not written:
        ui.print_warning("Report is empty; nothing plotted")
    for path in written:
        ui.print_file_saved("Plot", path)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or "INFO")
    ui = VisualInterface(quiet=args.quiet)
    ui.print_banner()
    return COMMANDS[args.command](args, ui)


if __name__ == "__main__":
    sys.exit(main())
