"""
Logging setup shared by the CLI, the API and the simulation harness
"""
import logging
from typing import Optional

from config.settings import get_settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_configured = False


def setup_logging(level: Optional[str] = None) -> None:
    """
    Configure the root logger once

    Args:
        level: Log level name; falls back to the configured settings value
    """
    global _configured
    level_name = (level or get_settings().log_level).upper()
    if not _configured:
        logging.basicConfig(level=level_name, format=LOG_FORMAT)
        _configured = True
    else:
        logging.getLogger().setLevel(level_name)
