"""Exception types shared across the toolkit."""

from __future__ import annotations


class ResourceCapError(RuntimeError):
    """A requested sampling mean exceeded the configured resource cap.

    Raised instead of attempting a draw that would take an unbounded amount
    of work; carries the offending mean so callers can report it.
    """

    def __init__(self, mean: float, cap: float, context: str = ""):
        self.mean = mean
        self.cap = cap
        self.context = context
        detail = f"requested mean {mean:.6g} exceeds the sampling cap {cap:.6g}"
        if context:
            detail += f" ({context})"
        super().__init__(detail)


class MechanismStateError(RuntimeError):
    """A sequential mechanism was stepped after it halted."""


class ExperimentCheckError(RuntimeError):
    """A built-in experiment check failed; maps to CLI exit code 1."""


class ConfigError(ValueError):
    """Invalid experiment configuration. Collects every error, not just the first."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        lines = "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(f"invalid configuration:\n{lines}")
