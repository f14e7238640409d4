"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid experiment or sweep configuration.

    Carries the offending field path (dotted, e.g. ``experiment.alpha``) so the
    CLI can point at the exact key.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class StateError(RuntimeError):
    """Operation requested on a run object that lacks the required state."""
