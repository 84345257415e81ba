"""
Exception hierarchy shared by every stage.

  WildReidError
    ├─ ValidationError   bad input data or configuration (CLI exit 1)
    └─ StageError        a pipeline stage failed (CLI exit 2)

Module-specific errors subclass one of these next to the code that raises them.
"""
from __future__ import annotations


class WildReidError(Exception):
    pass


class ValidationError(WildReidError):
    pass


class ConfigError(ValidationError):
    pass


class StageError(WildReidError):
    def __init__(self, stage: str, cause: BaseException | str) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
