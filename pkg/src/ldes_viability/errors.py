"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class LdesError(Exception):
    """Base class for errors raised by this package."""


class InputFileError(LdesError, OSError):
    """A required input file is missing or unreadable."""

    def __init__(self, path, reason: str = "missing") -> None:
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{reason} input file: {self.path}")

    def __reduce__(self):
        return type(self), (self.path, self.reason)


class ValidationError(LdesError, ValueError):
    """Input data violates a schema rule or a domain invariant."""


class ConfigError(ValidationError):
    """Config file is malformed, lacks a required key, or has an unknown one."""

    def __init__(self, message: str, key: str | None = None) -> None:
        self.key = key
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self.args[0], self.key)


class AlreadyExpandedError(LdesError, RuntimeError):
    """Candidate assets were already added to this system."""


class ConsistencyError(LdesError, ValueError):
    """A primal point does not satisfy the program it is claimed to solve."""

    def __init__(self, message: str, max_residual: float) -> None:
        self.message = message
        self.max_residual = max_residual
        super().__init__(f"{message} (max residual {max_residual:.3e})")

    def __reduce__(self):
        return type(self), (self.message, self.max_residual)


class SolveError(LdesError, RuntimeError):
    """A solve did not reach proven optimality."""

    def __init__(self, status: str, stage: str = "", state: str = "") -> None:
        self.status = status
        self.stage = stage
        self.state = state
        where = " ".join(p for p in (state, stage) if p)
        super().__init__(f"solver returned {status!r}" + (f" during {where}" if where else ""))

    def __reduce__(self):
        return type(self), (self.status, self.stage, self.state)
