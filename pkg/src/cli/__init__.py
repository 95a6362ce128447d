"""Command-line workflows and their reports"""

from .commands import COMMANDS, CommandRunner, load_mesh, split_mesh
from .reports import Failure, RunReport, write_csv, write_report

__all__ = [
    "COMMANDS",
    "CommandRunner",
    "Failure",
    "RunReport",
    "load_mesh",
    "split_mesh",
    "write_csv",
    "write_report",
]
