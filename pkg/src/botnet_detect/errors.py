"""Exception types shared across the toolkit.

The CLI maps :class:`InputError` to exit code 1 and :class:`ConfigError`
to exit code 2.
"""

from __future__ import annotations


class DetectError(Exception):
    """Base class for all toolkit errors."""


class InputError(DetectError):
    """Malformed or inconsistent input data."""

    def __init__(self, message: str, *, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        prefix = ""
        if source:
            prefix += f"{source}:"
        if line is not None:
            prefix += f"line {line}: "
        elif prefix:
            prefix += " "
        super().__init__(prefix + message)


class ConfigError(DetectError):
    """Invalid configuration, mapping, or parameter combination."""


class EstimationError(InputError):
    """A threshold cannot be estimated from the data; an override is needed."""
