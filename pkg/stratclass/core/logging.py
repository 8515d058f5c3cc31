"""Logging setup"""

import logging
import sys

from pythonjsonlogger import jsonlogger

from stratclass.core.config import settings

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str | None = None, json: bool | None = None) -> None:
    """Install a single stderr handler on the root logger.

    Library modules only call ``logging.getLogger(__name__)``; handlers are
    configured once, by the CLI.
    """
    level = (level or settings.LOG_LEVEL).upper()
    use_json = settings.LOG_JSON if json is None else json

    handler = logging.StreamHandler(sys.stderr)
    if use_json:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)
