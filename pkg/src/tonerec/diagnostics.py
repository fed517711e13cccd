"""Structured warning lines for the diagnostic stream (``WARN <code> <detail>``)."""

import logging
import sys

logger = logging.getLogger("tonerec")


def warn(code: str, detail: str) -> None:
    logger.warning("WARN %s %s", code, detail)


def configure_stderr(level: int = logging.INFO) -> None:
    """Attach a plain-message stderr handler once (used by the CLI)."""
    if any(getattr(h, "_tonerec", False) for h in logger.handlers):
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    handler._tonerec = True
    logger.addHandler(handler)
    logger.setLevel(level)
