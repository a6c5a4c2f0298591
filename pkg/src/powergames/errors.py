"""Exception types shared across the package."""


class PowerGameError(Exception):
    """Base class for power-game computation failures."""


class NoRootError(PowerGameError):
    """A bracketing search found no sign change below its cap."""


class InfeasibleLoadError(PowerGameError):
    """The non-saturated equilibrium does not exist at this load."""


class UniquenessConditionError(PowerGameError):
    """The sufficient condition for a unique fair operating point failed."""


class NonIrreducibleError(PowerGameError):
    """The channel kernel has a zero transition entry."""


class GridMissingError(PowerGameError):
    """The operation needs per-player discrete power grids."""


class EmptyRegionError(PowerGameError):
    """No feasible utility point survives the individual-rationality cut."""


class ScenarioError(PowerGameError):
    """Scenario file is missing, malformed, or inconsistent."""
