"""
Structured logging setup for the Choquard solver.

Development runs render through rich on stderr so that command output on
stdout stays clean. Production runs emit one JSON object per line.
"""

import sys
import logging
from typing import Any, Dict, List, Optional
import structlog
from rich.console import Console
from rich.logging import RichHandler

from .config import get_settings, is_development

settings = get_settings()


def _handler() -> logging.Handler:
    if is_development():
        return RichHandler(
            console=Console(stderr=True),
            show_time=True,
            show_path=False,
            markup=False,
            rich_tracebacks=True,
        )
    return logging.StreamHandler(sys.stdout)


def _processors() -> List[Any]:
    shared: List[Any] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_logger_name,
        structlog.processors.add_log_level,
        structlog.processors.StackInfoRenderer(),
        structlog.dev.set_exc_info,
    ]
    if is_development():
        return shared + [structlog.dev.ConsoleRenderer(colors=True)]
    return shared + [
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.format_exc_info,
        structlog.processors.JSONRenderer(sort_keys=True),
    ]


def setup_logging() -> structlog.stdlib.BoundLogger:
    """Configure stdlib logging and structlog from the process settings.

    Safe to call more than once; the root handlers are replaced each time.
    """
    level = getattr(logging, settings.log_level)
    logging.basicConfig(format="%(message)s", level=level, handlers=[_handler()], force=True)

    structlog.configure(
        processors=_processors(),
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    return structlog.get_logger("choquard")


def get_logger(name: Optional[str] = None) -> structlog.stdlib.BoundLogger:
    """Get a logger instance with optional name."""
    if name:
        return structlog.get_logger(name)
    return structlog.get_logger()


def log_function_call(func_name: str, **kwargs) -> Dict[str, Any]:
    """Helper to log function calls with parameters."""
    return {
        "function": func_name,
        "parameters": {k: v for k, v in kwargs.items() if not k.startswith('_')}
    }


def log_iteration(solver: str, iteration: int, energy: float, residual: float, **kwargs) -> Dict[str, Any]:
    """Helper to log one solver iteration."""
    return {
        "solver": solver,
        "iteration": iteration,
        "energy": energy,
        "residual": residual,
        **kwargs
    }


def log_check(check: str, value: Any, passed: Optional[bool] = None, **kwargs) -> Dict[str, Any]:
    """Helper to log a diagnostic verdict."""
    return {
        "check": check,
        "value": value,
        "passed": passed,
        **kwargs
    }


# Initialize logging on module import
logger = setup_logging()
