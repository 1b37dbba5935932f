"""Structured logging configuration for simulation runs."""

import json
import logging
import sys
import time
from contextvars import ContextVar
from datetime import datetime, timezone
from functools import wraps
from typing import Any, Callable, Dict, Optional

# Context variable for the current run / sweep point
run_id_ctx: ContextVar[Optional[str]] = ContextVar('run_id', default=None)

# Attributes every LogRecord carries; anything else arrived through ``extra=``
_RESERVED_ATTRS = frozenset(
    vars(logging.LogRecord('', 0, '', 0, '', None, None)).keys()
) | {'message', 'asctime', 'extra_fields'}


class JSONFormatter(logging.Formatter):
    """Custom JSON formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_entry: Dict[str, Any] = {
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        run_id = run_id_ctx.get()
        if run_id:
            log_entry['run_id'] = run_id
        elif hasattr(record, 'run_id'):
            log_entry['run_id'] = record.run_id

        if record.exc_info:
            log_entry['exception'] = {
                'type': record.exc_info[0].__name__ if record.exc_info[0] else None,
                'message': str(record.exc_info[1]) if record.exc_info[1] else None,
                'traceback': self.formatException(record.exc_info)
            }

        # Plain extra={...} keys
        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS and key not in log_entry:
                log_entry[key] = value

        # Context helper payload
        if hasattr(record, 'extra_fields'):
            log_entry.update(record.extra_fields)

        return json.dumps(log_entry, ensure_ascii=False, default=str)


class PlainFormatter(logging.Formatter):
    """Human readable single-line formatter that still shows the run id."""

    def __init__(self) -> None:
        super().__init__('%(asctime)s %(levelname)-7s %(name)s: %(message)s')

    def format(self, record: logging.LogRecord) -> str:
        text = super().format(record)
        run_id = run_id_ctx.get()
        return f"[{run_id}] {text}" if run_id else text


def setup_logging(log_level: str = "INFO", log_format: str = "json",
                  log_file: Optional[str] = None) -> None:
    """Configure the root logger.

    Logs go to stderr so that stdout stays free for command output
    (``check-config`` prints the resolved configuration there).

    Args:
        log_level: Standard level name
        log_format: ``json`` or ``plain``
        log_file: Optional path of an additional log file
    """
    formatter: logging.Formatter = JSONFormatter() if log_format == "json" else PlainFormatter()

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper()))

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        try:
            file_handler = logging.FileHandler(log_file)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except (OSError, PermissionError) as e:
            root_logger.warning(f"Could not create file handler: {e}. Using console logging only.")

    # matplotlib is chatty at DEBUG
    logging.getLogger('matplotlib').setLevel(logging.WARNING)


def log_info(logger: logging.Logger, message: str, **context: Any) -> None:
    """Log INFO level message with structured context."""
    logger.info(message, extra={'extra_fields': context} if context else {})


def log_warning(logger: logging.Logger, message: str, **context: Any) -> None:
    """Log WARNING level message with structured context."""
    logger.warning(message, extra={'extra_fields': context} if context else {})


def log_error(logger: logging.Logger, message: str, exc_info: bool = False, **context: Any) -> None:
    """Log ERROR level message with structured context."""
    logger.error(message, extra={'extra_fields': context} if context else {}, exc_info=exc_info)


def log_debug(logger: logging.Logger, message: str, **context: Any) -> None:
    """Log DEBUG level message with structured context."""
    logger.debug(message, extra={'extra_fields': context} if context else {})


def log_performance(operation: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """Decorator to log operation duration and outcome."""
    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            logger = logging.getLogger(func.__module__)
            start = time.perf_counter()

            try:
                result: Any = func(*args, **kwargs)
            except Exception as e:
                log_error(
                    logger,
                    f"Operation failed: {operation}",
                    operation=operation,
                    duration_seconds=time.perf_counter() - start,
                    status="error",
                    error_type=type(e).__name__,
                    error_message=str(e)
                )
                raise

            log_info(
                logger,
                f"Operation completed: {operation}",
                operation=operation,
                duration_seconds=time.perf_counter() - start,
                status="success"
            )
            return result
        return wrapper
    return decorator
