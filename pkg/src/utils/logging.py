"""Structured logging configuration using structlog"""

import logging
import sys
from contextlib import contextmanager
from typing import Any, Iterator, Optional, TextIO

import structlog


def setup_logging(log_level: str = "INFO", stream: Optional[TextIO] = None) -> None:
    """
    Configure structlog for the process

    JSON lines unless ``stream`` is a terminal. The CLI logs to stderr and keeps
    stdout for its summary.

    Args:
        log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL
        stream: Destination (stdout when omitted)
    """
    numeric_level = getattr(logging, log_level.upper(), logging.INFO)
    stream = stream or sys.stdout
    logging.basicConfig(format="%(message)s", stream=stream, level=numeric_level)

    renderer = structlog.dev.ConsoleRenderer() if stream.isatty() else structlog.processors.JSONRenderer()
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.dev.set_exc_info,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=stream),
        # the stream may be swapped by a later setup_logging call
        cache_logger_on_first_use=False,
    )


@contextmanager
def run_context(**values: Any) -> Iterator[None]:
    """Attach ``values`` (subcommand, seed, ...) to every log line emitted inside the block"""
    tokens = structlog.contextvars.bind_contextvars(**values)
    try:
        yield
    finally:
        structlog.contextvars.reset_contextvars(**tokens)
