"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: input problems exit 2, bad
configuration exits 3, violated internal invariants exit 4.
"""

from __future__ import annotations


class InputDataError(ValueError):
    """Raised when input files or datasets violate a precondition."""


class ConfigError(ValueError):
    """Raised when a configuration value is out of its legal range."""


class InvariantError(RuntimeError):
    """Raised when an internal cross-check fails; indicates a bug, not bad input."""
