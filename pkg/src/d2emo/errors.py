"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class D2emoError(Exception):
    """Root of all d2emo errors."""


class ContractViolation(D2emoError, ValueError):
    """An operation was called outside its precondition."""


class ConfigError(D2emoError, ValueError):
    """An experiment configuration is invalid."""


class FitError(D2emoError):
    """A Gaussian-process fit could not produce a positive-definite covariance."""


class RunError(D2emoError):
    """The optimization loop failed at a given iteration."""

    def __init__(self, message: str, *, iteration: int | None = None) -> None:
        super().__init__(message)
        self.iteration = iteration


class ReportError(D2emoError):
    """Run records cannot be combined into a report."""
