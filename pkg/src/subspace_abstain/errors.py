"""Exception types shared across the package."""

from __future__ import annotations


class DimensionError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class ContractError(ValueError):
    """An input violated a documented contract (range, shape, domain)."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyModelError(ValueError):
    """Preprocessing removed every training point."""


class NonConvergedError(RuntimeError):
    """Iterative solver hit its iteration cap.

    ``best`` carries the last iterate so callers can inspect it.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best
