"""Logger setup. Everything logs under the `qspectral` namespace to stderr."""

from __future__ import annotations

import logging
import sys
import time
from collections.abc import Iterator
from contextlib import contextmanager

LOGGER_NAME = "qspectral"
_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def get_logger(name: str | None = None) -> logging.Logger:
    """Return the package logger or one of its children (`qspectral.<name>`)."""
    return logging.getLogger(LOGGER_NAME if not name else f"{LOGGER_NAME}.{name}")


def setup_logging(verbose: int = 0) -> logging.Logger:
    """Attach a single stderr handler. 0 -> WARNING, 1 -> INFO, 2+ -> DEBUG."""
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logger = get_logger()
    logger.setLevel(level)
    if not any(getattr(h, "_qspectral", False) for h in logger.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._qspectral = True  # type: ignore[attr-defined]
        logger.addHandler(handler)
    return logger


@contextmanager
def timed(logger: logging.Logger, label: str, timings: dict[str, float] | None = None) -> Iterator[None]:
    """Log start/finish of a block and record its wall-clock seconds in `timings`."""
    logger.info("%s: start", label)
    start = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - start
        if timings is not None:
            timings[label] = elapsed
        logger.info("%s: done in %.3fs", label, elapsed)
