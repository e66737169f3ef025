"""
Loguru configuration shared by the library and the CLI.
"""

import sys

from loguru import logger

from backend.core.settings import settings

_configured = False


def configure_logging(level: str = None, fmt: str = None) -> None:
    """Install the single stderr sink according to settings (idempotent per call)."""
    global _configured

    level = (level or settings.log_level).upper()
    fmt = (fmt or settings.log_format).lower()
    unknown = fmt not in settings.log_formats

    logger.remove()
    if fmt == "json":
        logger.add(sys.stderr, level=level, serialize=True)
    else:
        logger.add(
            sys.stderr,
            level=level,
            format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{function} - {message}",
        )
    if unknown:
        logger.warning(f"Unknown log format {fmt!r}; using text (choose from {', '.join(settings.log_formats)})")
    _configured = True


def is_configured() -> bool:
    return _configured
