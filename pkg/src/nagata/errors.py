"""Shared exception types.

Every failure mode that callers are expected to branch on gets its own
class; anything else surfaces as ValueError from the raising site.
"""

from __future__ import annotations


class GroupMismatchError(ValueError):
    """Two elements from different group descriptors were combined."""


class BudgetExceededError(RuntimeError):
    """A search hit its configured element/node cap before completing.

    The computation is *inconclusive*, never silently wrong: callers must
    either raise the cap or report the inconclusive state (CLI exit code 2).
    """

    def __init__(self, message: str, explored: int | None = None, cap: int | None = None):
        super().__init__(message)
        self.explored = explored
        self.cap = cap


class ConfigError(ValueError):
    """A run configuration file or CLI argument set is invalid."""


class CacheFormatError(ValueError):
    """A norm cache file is malformed, mislabeled, or inconsistent."""
