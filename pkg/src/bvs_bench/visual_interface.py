"""
Console Interface Module for BVS Bench
Sweep progress output and coloured log formatting using colorama
"""

import logging
import os
import sys
from typing import Iterable, Optional

from colorama import Fore, Style, init

# Initialize colorama for cross-platform color support
init(autoreset=True)

BAR = f"{Fore.BLUE}{Style.BRIGHT}│{Style.RESET_ALL}"


class VisualInterface:
    """Sweep progress console with framed sections"""

    def __init__(self, quiet: bool = False, stream=None):
        self.quiet = quiet
        self.stream = stream or sys.stdout

    def _emit(self, text: str = "", end: str = "\n"):
        if not self.quiet:
            print(text, end=end, file=self.stream, flush=True)

    def print_banner(self):
        """Display the application banner"""
        self._emit(f"""
{Fore.CYAN}{Style.BRIGHT}
┌────────────────────────────────────────────────────────────────────────────────┐
│                                                                                │
│                                  BVS BENCH                                     │
│                                                                                │
│              Event and Primitive Vision Sensor Simulation Benchmark            │
│                                                                                │
└────────────────────────────────────────────────────────────────────────────────┘
{Style.RESET_ALL}""")

    def print_section_header(self, title: str):
        """Print a section header"""
        self._emit(f"\n{Fore.BLUE}{Style.BRIGHT}┌─ {title.upper()} ─{'─' * max(0, 60 - len(title))}")
        self._emit(BAR)

    def print_section_footer(self):
        self._emit(f"{Fore.BLUE}{Style.BRIGHT}└─{'─' * 78}{Style.RESET_ALL}")

    def print_success(self, message: str):
        self._emit(f"{BAR} {Fore.GREEN}[✓]{Style.RESET_ALL} {message}")

    def print_warning(self, message: str):
        self._emit(f"{BAR} {Fore.YELLOW}[!]{Style.RESET_ALL} WARNING: {message}")

    def print_info(self, message: str):
        """Print an info message; multi-line text stays inside the frame"""
        for line in str(message).split('\n'):
            if line.strip().startswith('- '):
                line = f"    • {line.strip()[2:]}"
            self._emit(f"{BAR} {Fore.CYAN}[i]{Style.RESET_ALL} {line}")

    def print_cell_result(self, sensor_id: str, rpm: float, lux: float, ok: bool, detail: str = ""):
        """One line per sweep cell"""
        label = f"{sensor_id:<16} rpm={rpm:<8g} lux={lux:<6g}"
        if ok:
            self._emit(f"{BAR} {Fore.GREEN}[✓]{Style.RESET_ALL} {label} {detail}")
        else:
            self._emit(f"{BAR} {Fore.RED}[✗]{Style.RESET_ALL} {label} {Fore.RED}{detail}{Style.RESET_ALL}")

    def print_file_saved(self, file_type: str, file_path: str):
        self._emit(f"{BAR} {Fore.GREEN}[✓]{Style.RESET_ALL} {file_type} saved")
        self._emit(f"{BAR}   └─ Location: {Fore.WHITE}{file_path}{Style.RESET_ALL}")

    def print_progress_bar(self, current: int, total: int, description: str = "Progress"):
        """Print a progress bar"""
        if total <= 0:
            return
        percent = int((current / total) * 100)
        filled_length = int(40 * current // total)
        bar = '█' * filled_length + '░' * (40 - filled_length)
        self._emit(f"\r{BAR} {description}: {Fore.CYAN}[{bar}]{Style.RESET_ALL} {percent}%", end="")
        if current == total:
            self._emit()

    def print_operation_summary(self, operation: str, details: Iterable[str]):
        """Print a summary of an operation"""
        self._emit(BAR)
        self._emit(f"{BAR} {Fore.MAGENTA}[{operation.upper()}]{Style.RESET_ALL}")
        for detail in details:
            self._emit(f"{BAR}   • {detail}")
        self._emit(BAR)


class ColouredFormatter(logging.Formatter):
    """Console log formatter colouring the level name"""

    LEVEL_COLOURS = {
        logging.DEBUG: Fore.WHITE,
        logging.INFO: Fore.CYAN,
        logging.WARNING: Fore.YELLOW,
        logging.ERROR: Fore.RED,
        logging.CRITICAL: Fore.RED + Style.BRIGHT,
    }

    def format(self, record: logging.LogRecord) -> str:
        colour = self.LEVEL_COLOURS.get(record.levelno, "")
        message = super().format(record)
        return f"{colour}{message}{Style.RESET_ALL}"


DETAILED_FORMAT = '%(asctime)s | %(name)s | %(levelname)s | %(funcName)s:%(lineno)d | %(message)s'
CONSOLE_FORMAT = '%(levelname)-8s %(name)s: %(message)s'


def configure_logging(log_level: str = "INFO",
                      enable_console_logging: bool = True,
                      enable_file_logging: bool = False,
                      log_file_path: Optional[str] = None) -> logging.Logger:
    """
    Set up the ``bvs_bench`` logger hierarchy once per process.

    Repeated calls replace the handlers instead of stacking them.
    """
    logger = logging.getLogger("bvs_bench")
    logger.setLevel(getattr(logging, log_level))
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    if enable_console_logging:
        console = logging.StreamHandler(sys.stderr)
        console.setFormatter(ColouredFormatter(CONSOLE_FORMAT))
        logger.addHandler(console)

    if enable_file_logging and log_file_path:
        os.makedirs(os.path.dirname(os.path.abspath(log_file_path)), exist_ok=True)
        file_handler = logging.FileHandler(log_file_path)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(DETAILED_FORMAT))
        logger.addHandler(file_handler)

    return logger
