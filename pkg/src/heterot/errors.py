"""Exceptions shared across the library and mapped to CLI exit codes."""


class HeterotError(Exception):
    """Base class for library errors."""


class DimensionMismatchError(HeterotError):
    """Two inputs live in incompatible ambient dimensions."""

    def __init__(self, p: int, q: int, context: str = ""):
        self.p = p
        self.q = q
        msg = f"dimension mismatch: {p} vs {q}"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class SampleCountMismatchError(HeterotError):
    """An operation requiring equally sized samples got n != m."""

    def __init__(self, n: int, m: int, context: str = ""):
        self.n = n
        self.m = m
        msg = f"sample count mismatch: {n} vs {m}"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class NumericalAbortError(HeterotError):
    """A NaN or Inf appeared mid-computation; carries the offending step."""

    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class InputFormatError(HeterotError):
    """A file or configuration value could not be parsed."""
