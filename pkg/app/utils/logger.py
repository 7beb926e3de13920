import logging
import sys
import uuid
from contextlib import contextmanager
from contextvars import ContextVar
from pathlib import Path
from typing import Dict, Iterator, List, Optional

from app.utils.config import get_config

LOG_FORMAT = "%(asctime)s | run=%(run_id)s | %(name)s | %(levelname)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
NO_RUN = "none"
RUN_ID_LENGTH = 8

# Id of the experiment run in progress; stamped on every record
current_run_id: ContextVar[str] = ContextVar("run_id", default=NO_RUN)


class RunContextFilter(logging.Filter):
    """Adds `run_id` to records that do not carry one."""

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "run_id"):
            record.run_id = current_run_id.get()[:RUN_ID_LENGTH]
        return True


def new_run_id() -> str:
    return uuid.uuid4().hex[:RUN_ID_LENGTH]


@contextmanager
def run_context(run_id: Optional[str] = None) -> Iterator[str]:
    """
    Tag every record logged inside the block with `run_id` (a fresh id when None).

    The previous id is restored on exit, also when the block raises.
    """
    run_id = run_id or new_run_id()
    token = current_run_id.set(run_id)
    try:
        yield run_id
    finally:
        current_run_id.reset(token)


def _resolve_level(level: str) -> int:
    resolved = logging.getLevelName(level.upper())
    if not isinstance(resolved, int):
        raise ValueError(f"unknown log level '{level}'")
    return resolved


def _build_handlers(level: int, log_file: str, log_to_console: bool) -> List[logging.Handler]:
    handlers: List[logging.Handler] = []
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    if log_to_console:
        # stdout is reserved for CSV and circuit text
        handlers.append(logging.StreamHandler(sys.stderr))

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
    return handlers


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    log_to_console: Optional[bool] = None,
) -> logging.Logger:
    """
    Configure a module logger from arguments, falling back to the LOG_* config keys.

    An empty `log_file` disables file output.
    """
    config = get_config()
    resolved = _resolve_level(config.LOG_LEVEL if level is None else level)
    log_file = config.LOG_FILE if log_file is None else log_file
    log_to_console = config.LOG_TO_CONSOLE if log_to_console is None else log_to_console

    logger = logging.getLogger(name)
    logger.setLevel(resolved)
    logger.handlers.clear()
    logger.filters.clear()
    logger.addFilter(RunContextFilter())
    for handler in _build_handlers(resolved, log_file, log_to_console):
        logger.addHandler(handler)
    logger.propagate = False
    return logger


_loggers: Dict[str, logging.Logger] = {}


def get_logger(name: str) -> logging.Logger:
    """Cached logger for `name`, configured on first use."""
    if name not in _loggers:
        _loggers[name] = setup_logger(name)
    return _loggers[name]


def clear_loggers() -> None:
    for logger in _loggers.values():
        for handler in logger.handlers:
            handler.close()
        logger.handlers.clear()
    _loggers.clear()
