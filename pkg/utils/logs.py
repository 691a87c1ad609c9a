"""Logging setup; the level comes from QGDUAL_LOG unless given explicitly."""
from __future__ import annotations

import logging
import os
import warnings
from typing import Optional

ENV_VAR = "QGDUAL_LOG"
LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None) -> int:
    """Configure the root handler once and return the numeric level in effect."""
    name = (level or os.getenv(ENV_VAR) or "error").strip().lower()
    if name not in LEVELS:
        warnings.warn(f"{ENV_VAR}={name!r} is not one of {', '.join(LEVELS)}; using error", RuntimeWarning,
                      stacklevel=2)
        name = "error"
    numeric = LEVELS[name]
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=numeric, format=FORMAT)
    root.setLevel(numeric)
    return numeric
