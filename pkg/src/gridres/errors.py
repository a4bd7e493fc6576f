"""Shared exception types for the gridres toolkit."""


class GridResError(Exception):
    """Base class for all gridres errors."""


class InvalidInputError(GridResError, ValueError):
    """An argument or domain object violates a stated precondition."""


class ScenarioValidationError(InvalidInputError):
    """A scenario document violates one or more type invariants.

    Carries the full list of violations so callers can report all of
    them at once instead of failing on the first.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SimulationError(GridResError):
    """A simulation failed for a reason other than bad input."""
