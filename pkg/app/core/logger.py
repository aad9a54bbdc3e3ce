# Console output for the scheduler: Rich logging with a SUCCESS level, parameter tables,
# schedule frames, validation reports, benchmark summaries and progress bars.
# Author: shiboli
# date: 2025-06-09
# Version 0.2.0

import logging
from typing import Optional

import pandas as pd
from rich.logging import RichHandler
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.progress import track as rich_track
from rich.theme import Theme

from app.config import settings
from app.models.network import ScheduleFrame, ValidationReport

SUCCESS_LEVEL_NUM = 25
logging.addLevelName(SUCCESS_LEVEL_NUM, "SUCCESS")


def success_log(self, message, *args, **kwargs):
    if self.isEnabledFor(SUCCESS_LEVEL_NUM):
        self._log(SUCCESS_LEVEL_NUM, message, args, **kwargs)


if not hasattr(logging.Logger, 'success'):
    setattr(logging.Logger, 'success', success_log)


def _format_cell(value, float_digits: int) -> str:
    if isinstance(value, float):
        return "-" if pd.isna(value) else f"{value:.{float_digits}f}"
    if value is None or value is pd.NA:
        return "-"
    return str(value)


class ConsoleManager:
    """
    Singleton wrapper around one Rich console. Log records go through a RichHandler on the
    "WSN-Reliability-Scheduler" logger; the display_* helpers print straight to the console.
    """
    def __init__(self):
        self._console = Console(theme=Theme({"logging.level.success": "bold green"}))
        self._logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        logger = logging.getLogger("WSN-Reliability-Scheduler")
        if logger.hasHandlers():
            return logger

        logger.setLevel(getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO))
        handler = RichHandler(
            console=self._console,
            rich_tracebacks=True,
            tracebacks_show_locals=False,
            keywords=["SUCCESS", "WARNING", "ERROR", "slot", "rho", "tau"],
            show_path=False
        )
        handler.setFormatter(logging.Formatter(fmt="%(message)s", datefmt="[%X]"))
        logger.addHandler(handler)
        return logger

    def debug(self, message: str):
        self._logger.debug(message)

    def info(self, message: str):
        self._logger.info(message)

    def success(self, message: str):
        self._logger.success(f"[SUCCESS] {message}")

    def warning(self, message: str):
        self._logger.warning(f"[WARNING] {message}")

    def error(self, message: str):
        self._logger.error(f"[ERROR] {message}")

    def exception(self, message: str):
        self._logger.exception(f"[EXCEPTION] {message}")

    def rule(self, title: str, style: str = "cyan"):
        self._console.rule(f"[bold {style}]{title}[/bold {style}]", style=style)

    def display_data_as_table(self, data: dict, title: str):
        """
        Display a flat mapping as a two-column panel; nested dicts are expanded one
        level and sequences joined with commas.
        """
        table = Table(show_header=True, header_style="bold magenta", box=None, show_edge=False)
        table.add_column("Parameter", style="cyan", no_wrap=True, width=24)
        table.add_column("Value", style="white")

        for key, value in data.items():
            if isinstance(value, dict):
                for sub_key, sub_value in value.items():
                    table.add_row(f"  • {key}.{sub_key}", str(sub_value))
            elif isinstance(value, (list, tuple, set, frozenset)):
                table.add_row(key, ", ".join(map(str, value or [])))
            else:
                table.add_row(key, str(value))

        panel = Panel(table, title=f"[bold green]✓[/bold green] {title}", border_style="green")
        self._console.print(panel)

    def display_dataframe(self, frame: pd.DataFrame, title: str, float_digits: int = 3):
        """
        Display a benchmark summary table. The index is dropped; missing values print as "-".
        """
        table = Table(title=title, header_style="bold magenta", show_lines=False)
        for column in frame.columns:
            table.add_column(str(column), style="cyan" if frame[column].dtype == object else "white")
        for row in frame.itertuples(index=False):
            table.add_row(*(_format_cell(value, float_digits) for value in row))
        self._console.print(table)

    def display_frame(self, frame: ScheduleFrame, title: str, limit: Optional[int] = None):
        """
        Display the first `limit` slots of a schedule frame, one row per slot (1-based),
        with the packet each attempt carries when the frame is attributed.

        Args:
            frame (ScheduleFrame): The frame to show.
            title (str): Panel title.
            limit (Optional[int]): Number of slots to show; all when None.
        """
        table = Table(show_header=True, header_style="bold magenta", box=None, show_edge=False)
        table.add_column("Slot", style="cyan", justify="right")
        table.add_column("Transmissions", style="white")
        table.add_column("Packets (source/hop)", style="white")

        for index, slot in enumerate(frame.slots[:limit]):
            links = ", ".join(f"{tx.transmitter}->{tx.receiver}" for tx in slot)
            packets = ", ".join(
                f"{tx.attribution[0]}/{tx.attribution[1]}" if tx.attribution is not None else "-"
                for tx in slot
            )
            table.add_row(str(index + 1), links, packets)
        if limit is not None and len(frame.slots) > limit:
            table.add_row("...", f"{len(frame.slots) - limit} more slots", "")

        self._console.print(Panel(table, title=f"[bold yellow]{title}[/bold yellow]", border_style="yellow"))

    def display_validation(self, report: ValidationReport, title: str):
        """Green one-liner for a valid report, otherwise a red table of the violations."""
        if report.is_valid:
            self._console.print(f"[bold green]✓[/bold green] {title}: no violations")
            return
        table = Table(show_header=True, header_style="bold red", box=None, show_edge=False)
        table.add_column("Constraint", style="red", no_wrap=True)
        table.add_column("Slot", justify="right")
        table.add_column("Nodes")
        table.add_column("Message", style="white")
        for v in report.violations:
            table.add_row(
                v.constraint,
                "-" if v.slot is None else str(v.slot + 1),
                ", ".join(map(str, v.nodes)),
                v.message,
            )
        self._console.print(Panel(table, title=f"[bold red]{title}: {len(report)} violations[/bold red]", border_style="red"))

    def display_error_panel(self, source: str, error_message: str):
        panel = Panel(f"[bold]Cell:[/bold] {source}\n[bold]Error:[/bold] {error_message}", title="[bold red]Processing Error[/bold red]", border_style="red")
        self._console.print(panel)

    def get_progress_tracker(self, *args, **kwargs):
        """Rich `track` bound to this console."""
        return rich_track(*args, console=self._console, **kwargs)


console = ConsoleManager()
