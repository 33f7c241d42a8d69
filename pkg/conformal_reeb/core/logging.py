"""
Logging configuration for the classifier.
Provides stage-tagged logging for pipeline runs.
"""

import logging
import sys

from conformal_reeb.config import settings


def setup_logging(level: int | None = None) -> None:
    """Configure application logging."""

    if level is None:
        level = logging.DEBUG if settings.debug else logging.INFO

    # Reports go to stdout, so logs go to stderr
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
    )

    # Set third-party loggers to WARNING
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("func_timeout").setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance.

    Args:
        name: Logger name (typically __name__)

    Returns:
        Logger instance
    """
    return logging.getLogger(name)
