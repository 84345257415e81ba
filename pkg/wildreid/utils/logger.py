"""
Logger factory for the wildreid namespace.
Console handler on the package root; an optional rotating file handler
(10MB, 3 backups) is attached per run directory.
"""
from __future__ import annotations

import logging
import logging.handlers
import sys
from pathlib import Path

ROOT_NAME = "wildreid"

_FORMAT = logging.Formatter(
    fmt="%(asctime)s %(levelname)-8s [%(name)s] %(message)s",
    datefmt="%Y-%m-%dT%H:%M:%S",
)


def _root(level: str | None = None) -> logging.Logger:
    root = logging.getLogger(ROOT_NAME)
    if not root.handlers:
        ch = logging.StreamHandler(sys.stdout)
        ch.setFormatter(_FORMAT)
        root.addHandler(ch)
        root.setLevel(logging.INFO)
        root.propagate = False
    if level:
        root.setLevel(getattr(logging, level.upper(), logging.INFO))
    return root


def get_logger(name: str, log_dir: Path | None = None, level: str | None = None) -> logging.Logger:
    """Return ``wildreid.<name>``; handlers live on the package root."""
    root = _root(level)
    if log_dir is not None:
        attach_file_handler(log_dir)
    if not name or name == ROOT_NAME:
        return root
    return root.getChild(name)


def set_level(level: str) -> None:
    _root(level)


def attach_file_handler(log_dir: Path, filename: str = "wildreid.log") -> Path:
    """Add a RotatingFileHandler under ``log_dir`` (idempotent per path)."""
    root = _root()
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    target = (log_dir / filename).resolve()
    for h in root.handlers:
        if isinstance(h, logging.handlers.RotatingFileHandler) and Path(h.baseFilename) == target:
            return target
    fh = logging.handlers.RotatingFileHandler(
        filename=target,
        maxBytes=10 * 1024 * 1024,
        backupCount=3,
        encoding="utf-8",
    )
    fh.setFormatter(_FORMAT)
    root.addHandler(fh)
    return target


def detach_file_handlers() -> None:
    root = _root()
    for h in list(root.handlers):
        if isinstance(h, logging.handlers.RotatingFileHandler):
            root.removeHandler(h)
            h.close()
