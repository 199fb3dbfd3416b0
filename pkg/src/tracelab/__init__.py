"""tracelab - nonlocal semi-norms and traces on cusped and fractal domains."""

import importlib.metadata
import logging
import sys

from .config import get_config_value

# Version from pyproject.toml - single source of truth
try:
    __version__ = importlib.metadata.version("tracelab")
except importlib.metadata.PackageNotFoundError:
    __version__ = "0.0.0+dev"  # Fallback for source checkouts


def setup_logging(level_name: str | None = None) -> None:
    """Configure the package logger.

    Args:
        level_name: Explicit level (e.g. "DEBUG"). Falls back to the
            ``log_level`` config value when omitted.
    """
    level_str = level_name or get_config_value("log_level")
    level = getattr(logging, str(level_str).upper(), logging.WARNING)

    logger = logging.getLogger("tracelab")
    logger.setLevel(level)

    # Only add handler if not already configured
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    for handler in logger.handlers:
        handler.setLevel(level)


# Initialize logging on import
setup_logging()
