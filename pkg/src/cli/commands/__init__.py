"""Subcommand implementations; each returns a process exit code."""

from .check_config import cmd_check_config
from .phi_table import cmd_phi_table
from .run import cmd_run, execute_run
from .sweep import cmd_sweep
from .synth_ic import cmd_synth_ic

__all__ = [
    "cmd_check_config",
    "cmd_phi_table",
    "cmd_run",
    "cmd_sweep",
    "cmd_synth_ic",
    "execute_run",
]
