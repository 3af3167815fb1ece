"""
Command-line package

Run configuration (TOML) and the synthesize / validate / plotdata commands.
"""

from .commands import build_parser, cmd_plotdata, cmd_synthesize, cmd_validate, main
from .config import RunConfig, load_config, parse_config

__all__ = [
    "RunConfig",
    "load_config",
    "parse_config",
    "build_parser",
    "cmd_synthesize",
    "cmd_validate",
    "cmd_plotdata",
    "main",
]
