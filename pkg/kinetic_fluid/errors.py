"""Exception hierarchy for `kinetic_fluid`.

Numerical sub-steps raise the specific errors below; the coupled driver wraps
them into `NumericalFailure` together with a failure report, and the CLI maps
each family onto an exit code.
"""

from typing import Any, Optional, Sequence, Tuple


class KineticFluidError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(KineticFluidError, ValueError):
    """A configuration key is missing, unknown or violates a constraint.

    `problems` holds one `(key, constraint)` pair per violation so callers can
    report all of them at once.
    """

    def __init__(self, problems: Sequence[Tuple[str, str]]):
        self.problems = list(problems)
        lines = [f"{key}: {constraint}" for key, constraint in self.problems]
        super().__init__("; ".join(lines))

    @property
    def key(self) -> str:
        return self.problems[0][0]

    @property
    def constraint(self) -> str:
        return self.problems[0][1]


class GridError(KineticFluidError, ValueError):
    """Invalid grid geometry or mismatched grids."""


class NonFiniteError(KineticFluidError, ValueError):
    """A field holds NaN or infinity."""

    def __init__(self, name: str, index: Tuple[int, ...]):
        self.name = name
        self.index = tuple(int(i) for i in index)
        super().__init__(f"non-finite value in {name} at cell {self.index}")


class NegativeDensityError(KineticFluidError, ValueError):
    """A density-like input that must be nonnegative is not."""


class SupportEscape(KineticFluidError, RuntimeError):
    """Kinetic support reached the guard band of the phase box."""

    def __init__(self, point: Any, message: Optional[str] = None):
        self.point = point
        super().__init__(message or f"support escaped the phase box at {point}")


class StaleFieldsError(KineticFluidError, RuntimeError):
    """Alignment fields were built from a different kinetic state."""


class TimestepError(KineticFluidError, RuntimeError):
    """The requested time step cannot be taken (overflow, underflow, instability)."""

    def __init__(self, message: str, terms: Optional[dict] = None):
        self.terms = dict(terms or {})
        super().__init__(message)


class CflViolation(KineticFluidError, RuntimeError):
    """A fluid step produced negative density; retry with `suggested_dt`."""

    def __init__(self, dt: float, suggested_dt: float):
        self.dt = dt
        self.suggested_dt = suggested_dt
        super().__init__(f"negative density after step dt={dt:g}; retry with dt <= {suggested_dt:g}")


class SnapshotError(KineticFluidError, OSError):
    """A snapshot file has the wrong version, layout or size."""


class NumericalFailure(KineticFluidError, RuntimeError):
    """A run terminated early; `report` describes where and why."""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(f"run failed at step {report.step} (t={report.time:g}): {report.cause}")
