"""
Logging setup for the command line entry point.

Library modules only call ``logging.getLogger(__name__)``; handlers are
installed here, once, from the ``FUNNEL_LOG`` environment variable.
"""

import logging
import os
from typing import Optional

ENV_VAR = "FUNNEL_LOG"
DEFAULT_LEVEL = "WARNING"
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def resolve_level(value: Optional[str]) -> int:
    """Map a level name (or number) to a logging level, falling back to WARNING."""
    if not value:
        return logging.WARNING
    value = value.strip()
    if value.isdigit():
        return int(value)
    level = logging.getLevelName(value.upper())
    return level if isinstance(level, int) else logging.WARNING


def configure_logging(level: Optional[str] = None) -> int:
    """Configure the root logger from ``level`` or the FUNNEL_LOG variable.

    Returns:
        The numeric level that was applied
    """
    resolved = resolve_level(level if level is not None else os.environ.get(ENV_VAR, DEFAULT_LEVEL))
    logging.basicConfig(level=resolved, format=LOG_FORMAT)
    logging.getLogger().setLevel(resolved)
    return resolved
