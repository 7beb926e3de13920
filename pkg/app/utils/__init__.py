"""Utilities: configuration and logging."""

from .config import Config, get_config, reload_config, parse_n_list
from .logger import get_logger, setup_logger, clear_loggers, current_run_id, run_context

__all__ = [
    "Config",
    "get_config",
    "reload_config",
    "parse_n_list",
    "get_logger",
    "setup_logger",
    "clear_loggers",
    "current_run_id",
    "run_context",
]
