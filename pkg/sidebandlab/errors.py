"""Exception hierarchy for the sideband squeezing simulator."""

from __future__ import annotations


class SidebandLabError(Exception):
    """Base class for every error raised by sidebandlab."""


class InvalidArgument(SidebandLabError, ValueError):
    """An operation received an argument outside its domain."""


class InvalidSpec(SidebandLabError, ValueError):
    """A cavity, OPA or chain description violates its invariants."""


class InvalidState(SidebandLabError, ValueError):
    """A covariance matrix is malformed or unphysical."""


class NoSolution(SidebandLabError, ValueError):
    """A calibration target has no physical (pump ratio, efficiency) solution."""


class NotFeasible(SidebandLabError):
    """Coupler design targets cannot be met simultaneously.

    Attributes:
        best_transmission: On-resonance transmission at the best coupler found
        best_leakage: Leakage at the offset for that same coupler
        coupler_t: The coupler transmissivity that produced the best pair
    """

    def __init__(
        self,
        message: str,
        best_transmission: float,
        best_leakage: float,
        coupler_t: float,
    ):
        super().__init__(message)
        self.best_transmission = best_transmission
        self.best_leakage = best_leakage
        self.coupler_t = coupler_t


class ConfigError(SidebandLabError):
    """A run configuration could not be read or failed validation.

    Attributes:
        problems: Field-qualified messages, e.g. ``"rfc1.excess_loss: ..."``
    """

    def __init__(self, message: str, problems: list[str] | None = None):
        self.problems = problems or []
        detail = "\n".join(f"  {p}" for p in self.problems)
        super().__init__(f"{message}\n{detail}" if detail else message)
