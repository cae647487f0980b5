"""Shared exception types."""


class GeometryMismatchError(ValueError):
    """Two points (or a point and a system) disagree on phase-space geometry."""


class OrbitDivergedError(RuntimeError):
    """A fiber coordinate escaped its trapping interval.

    Carries the 0-based step index at which the escape was detected.
    """

    def __init__(self, step_index, message=None):
        self.step_index = int(step_index)
        super().__init__(message or f"orbit left the trapping interval at step {step_index}")


class DivergenceBudgetError(RuntimeError):
    """Too many ensemble members diverged for the experiment to be meaningful."""

    def __init__(self, diverged, total):
        self.diverged = int(diverged)
        self.total = int(total)
        super().__init__(f"{diverged} of {total} ensemble members diverged (budget is 1%)")


class ConfigError(ValueError):
    """An experiment configuration failed schema or semantic validation."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
