"""Shared error hierarchy.

Every failure the tool can report derives from CrucibleError so the CLI
can map any of them to exit code 1 with a single-line diagnostic.
Module-specific errors live next to the code that raises them and
subclass this.
"""


class CrucibleError(Exception):
    """Base class for all tool errors."""


class ConfigError(CrucibleError):
    """Bad or unreadable configuration file."""
